#include "locadmm/harness.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "locadmm/errors.hpp"
#include "locadmm/parallel.hpp"
#include "locadmm/solver_lite.hpp"

namespace locadmm::harness {

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw InvalidParameter("cannot open " + path + " for writing");
  file << content;
  if (!file) throw InvalidParameter("failed writing " + path);
}

std::pair<double, double> parse_range_pair(const std::string& text, const std::string& what) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw InvalidInitSpec(what + " expects LO,HI");
  double lo = 0.0;
  double hi = 0.0;
  const char* begin = text.data();
  const auto r1 = std::from_chars(begin, begin + comma, lo);
  const auto r2 = std::from_chars(begin + comma + 1, begin + text.size(), hi);
  if (r1.ec != std::errc() || r1.ptr != begin + comma || r2.ec != std::errc() ||
      r2.ptr != begin + text.size() || !(lo < hi)) {
    throw InvalidInitSpec(what + " expects LO,HI with LO < HI, got '" + text + "'");
  }
  return {lo, hi};
}

InitSpec parse_init(const std::string& text, const NetworkInstance& instance, double u0,
                    std::uint64_t seed) {
  InitSpec spec;
  spec.u0 = u0;
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (kind == "zeros" && arg.empty()) {
    spec.z0 = ZerosInit{};
  } else if (kind == "uniform") {
    const auto [lo, hi] = arg.empty() ? std::pair{-1.0, 1.0} : parse_range_pair(arg, "uniform");
    spec.z0 = UniformInit{lo, hi};
  } else if (kind == "uniform-positions") {
    const auto [lo, hi] =
        arg.empty() ? std::pair{0.0, 1.0} : parse_range_pair(arg, "uniform-positions");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> draw(lo, hi);
    PositionsInit init;
    for (int i = 0; i < instance.graph.num_nodes(); ++i) {
      Point x(instance.graph.dim());
      for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = draw(rng);
      init.positions.push_back(instance.graph.is_anchor(i) ? *instance.graph.anchor(i) : x);
    }
    spec.z0 = std::move(init);
  } else if (kind == "truth" && arg.empty()) {
    if (!instance.truth) throw InvalidInitSpec("init 'truth' needs pos in the network file");
    spec.z0 = PositionsInit{instance.truth->positions};
  } else if (kind == "file" && !arg.empty()) {
    const NetworkInstance other = load_network(arg);
    if (!other.truth || static_cast<int>(other.truth->positions.size()) !=
                            instance.graph.num_nodes()) {
      throw InvalidInitSpec("init file " + arg + " must carry pos for every node");
    }
    spec.z0 = PositionsInit{other.truth->positions};
  } else {
    throw InvalidInitSpec("unknown init '" + text + "'");
  }
  return spec;
}

PenaltyParams resolve_params(const NetworkInstance& instance, const RunConfig& config) {
  // Auto c has no bound of its own; 1 keeps kappa1 and the W scaling balanced.
  const double c = config.c.value_or(1.0);
  PenaltyParams params{c, 0.0};
  if (config.rho) {
    params.rho = *config.rho;
  } else {
    if (!(config.rho_scale > 0.0)) throw InvalidParameter("--rho-scale must be > 0");
    params.rho = config.rho_scale * parameter_bounds(instance.graph, instance.measurements, c).rho_min;
  }
  params.validate();
  return params;
}

double min_gap(const IterationTrace& trace) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& row : trace.rows) {
    if (row.F) best = std::min(best, *row.F);
  }
  return best;
}

std::string optional_field(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

NetworkInstance load_checked(const std::string& path, std::ostream& err) {
  NetworkInstance instance = load_network(path);
  if (instance.disconnected_warning) err << "warning: " << path << " describes a disconnected graph\n";
  return instance;
}

}  // namespace

std::uint64_t resolve_seed(std::uint64_t flag_seed) {
  const char* env = std::getenv("LOCADMM_SEED");
  if (env == nullptr || *env == '\0') return flag_seed;
  std::uint64_t value = 0;
  const char* end = env + std::char_traits<char>::length(env);
  const auto r = std::from_chars(env, end, value);
  if (r.ec != std::errc() || r.ptr != end) {
    throw InvalidParameter(std::string("LOCADMM_SEED is not an unsigned integer: ") + env);
  }
  return value;
}

int cmd_generate(const GenerateConfig& config, std::ostream& out, std::ostream& err) {
  try {
    if (config.out.empty()) throw InvalidParameter("--out is required");
    if (!(config.sigma >= 0.0)) throw InvalidParameter("--sigma must be >= 0");
    const std::uint64_t seed = resolve_seed(config.seed);
    auto [graph, truth] = generate_rgg(
        {config.nodes, config.anchors, config.range, config.area, config.dim, seed});
    NetworkInstance instance;
    instance.measurements = measure(truth, graph, {config.noise, config.sigma}, seed);
    instance.graph = std::move(graph);
    instance.truth = std::move(truth);
    save_network(config.out, instance);
    out << "nodes " << instance.graph.num_nodes() << " anchors " << instance.graph.num_anchors()
        << " edges " << instance.graph.edges().size() << " D_avg "
        << format_double(instance.graph.average_degree()) << " N_max "
        << instance.graph.max_degree() << " d_max "
        << format_double(instance.measurements.max_range()) << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    err << "generate: " << e.what() << "\n";
    return kExitFailure;
  }
}

std::string format_double(double value) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, r.ptr);
}

std::string trace_to_csv(const IterationTrace& trace) {
  std::string csv = kTraceHeader;
  csv += '\n';
  for (const TraceRow& row : trace.rows) {
    csv += std::to_string(row.t);
    for (const std::string& field :
         {optional_field(row.rmse), format_double(row.S), optional_field(row.U),
          format_double(row.P), optional_field(row.F), format_double(row.L),
          optional_field(row.potential), std::to_string(row.comm_scalars),
          optional_field(row.wall_ms)}) {
      csv += ',';
      csv += field;
    }
    csv += '\n';
  }
  return csv;
}

std::string trace_meta_json(const IterationTrace& trace, int iterations) {
  nlohmann::ordered_json meta = {{"algorithm", trace.meta.algorithm},
                                 {"c", trace.meta.c},
                                 {"rho", trace.meta.rho},
                                 {"kappa1", trace.meta.kappa1},
                                 {"kappa2", trace.meta.kappa2},
                                 {"seed", trace.meta.seed},
                                 {"iterations", iterations}};
  return meta.dump(2) + "\n";
}

RunOutcome execute_run(const NetworkInstance& instance, const RunConfig& config) {
  if (config.algorithm != "full" && config.algorithm != "lite") {
    throw InvalidParameter("--algo must be full or lite, got '" + config.algorithm + "'");
  }
  if (config.iterations < 1) throw InvalidParameter("--iters must be >= 1");
  const NetworkGraph& graph = instance.graph;
  graph.require_solvable();

  RunOutcome outcome;
  outcome.params = resolve_params(instance, config);
  const ParameterBounds bounds = parameter_bounds(graph, instance.measurements, outcome.params.c);
  const InitSpec init = parse_init(config.init, instance, config.u0, config.seed);
  const RunOptions options{config.iterations,
                           config.threads == 0 ? default_thread_count() : config.threads};

  TraceRecorder recorder(graph, instance.measurements,
                         {config.algorithm, outcome.params.c, outcome.params.rho,
                          bounds.kappa1_min, bounds.kappa2_min, config.seed},
                         instance.truth, config.timing);
  auto state = init_full(graph, init, config.seed);
  try {
    RunResult result;
    if (config.algorithm == "full") {
      result = run_full(graph, instance.measurements, outcome.params, std::move(state), options,
                        recorder.hook());
    } else {
      result = run_lite(graph, init_lite(graph, instance.measurements, outcome.params, state),
                        options, recorder.hook());
    }
    outcome.estimates = std::move(result.estimates);
  } catch (const NonFiniteValue& e) {
    outcome.diverged = true;
    outcome.divergence = e.what();
  }
  outcome.trace = recorder.take();
  return outcome;
}

int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    NetworkInstance instance = load_checked(config.net, err);
    RunConfig resolved = config;
    resolved.seed = resolve_seed(config.seed);
    RunOutcome outcome = execute_run(instance, resolved);

    if (!config.trace.empty()) {
      write_file(config.trace, trace_to_csv(outcome.trace));
      write_file(config.trace + ".meta.json", trace_meta_json(outcome.trace, config.iterations));
    }
    if (outcome.diverged) {
      err << "run: diverged: " << outcome.divergence << "\n";
      return kExitDiverged;
    }
    if (!config.estimates.empty()) {
      NetworkInstance estimates = instance;
      estimates.truth = GroundTruth{outcome.estimates};
      save_network(config.estimates, estimates);
    }
    const TraceRow& last = outcome.trace.rows.back();
    out << "algo " << config.algorithm << " c " << format_double(outcome.params.c) << " rho "
        << format_double(outcome.params.rho) << " iters " << config.iterations;
    if (last.rmse) out << " rmse " << format_double(*last.rmse);
    if (last.F) out << " F " << format_double(*last.F);
    out << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    err << "run: " << e.what() << "\n";
    return kExitFailure;
  }
}

int cmd_sweep(const SweepConfig& config, std::ostream& out, std::ostream& err) {
  try {
    if (config.out.empty()) throw InvalidParameter("--out is required");
    if (config.c_values.empty() || config.rho_values.empty()) {
      throw InvalidParameter("sweep needs at least one c and one rho value");
    }
    const NetworkInstance instance = load_checked(config.base.net, err);
    std::vector<std::uint64_t> seeds = config.seeds;
    if (seeds.empty()) seeds.push_back(resolve_seed(config.base.seed));

    std::string cells = "c,rho,runs,final_rmse_mean,final_rmse_std,min_F,diverged_runs\n";
    std::string runs = "c,rho,seed,final_rmse,min_F,diverged\n";
    for (double c : config.c_values) {
      for (double rho : config.rho_values) {
        std::vector<double> finals;
        double cell_min_f = std::numeric_limits<double>::infinity();
        int diverged = 0;
        for (std::uint64_t seed : seeds) {
          RunConfig rc = config.base;
          rc.c = c;
          rc.rho = rho;
          rc.seed = seed;
          rc.timing = false;
          const RunOutcome o = execute_run(instance, rc);
          const auto& last = o.trace.rows.back();
          const double mf = min_gap(o.trace);
          cell_min_f = std::min(cell_min_f, mf);
          diverged += o.diverged ? 1 : 0;
          std::optional<double> final_rmse;
          if (!o.diverged && last.rmse) {
            final_rmse = last.rmse;
            finals.push_back(*last.rmse);
          }
          runs += format_double(c) + "," + format_double(rho) + "," + std::to_string(seed) + "," +
                  optional_field(final_rmse) + "," +
                  (std::isfinite(mf) ? format_double(mf) : std::string()) + "," +
                  (o.diverged ? "1" : "0") + "\n";
        }
        std::optional<double> mean;
        std::optional<double> stddev;
        if (!finals.empty()) {
          double sum = 0.0;
          for (double v : finals) sum += v;
          mean = sum / static_cast<double>(finals.size());
          double sq = 0.0;
          for (double v : finals) sq += (v - *mean) * (v - *mean);
          stddev = std::sqrt(sq / static_cast<double>(finals.size()));
        }
        cells += format_double(c) + "," + format_double(rho) + "," + std::to_string(seeds.size()) +
                 "," + optional_field(mean) + "," + optional_field(stddev) + "," +
                 (std::isfinite(cell_min_f) ? format_double(cell_min_f) : std::string()) + "," +
                 std::to_string(diverged) + "\n";
      }
    }
    write_file(config.out, cells);
    if (!config.runs_out.empty()) write_file(config.runs_out, runs);
    out << cells;
    return kExitOk;
  } catch (const std::exception& e) {
    err << "sweep: " << e.what() << "\n";
    return kExitFailure;
  }
}

int cmd_oracle_check(const OracleCheckConfig& config, std::ostream& out, std::ostream& err,
                     const ClosedForms& forms) {
  try {
    const NetworkInstance instance = load_checked(config.net, err);
    OracleCheckOptions options = config.options;
    options.seed = resolve_seed(options.seed);
    const OracleReport report =
        run_oracle_check(instance.graph, instance.measurements, options, forms);
    for (const auto& check : report.checks) {
      out << (check.passed() ? "PASS " : "FAIL ") << check.name << " max_error "
          << format_double(check.max_error) << " tolerance " << format_double(check.tolerance)
          << "\n";
    }
    out << (report.passed() ? "oracle-check passed\n" : "oracle-check FAILED\n");
    return report.passed() ? kExitOk : kExitFailure;
  } catch (const std::exception& e) {
    err << "oracle-check: " << e.what() << "\n";
    return kExitFailure;
  }
}

int cmd_compare(const CompareConfig& config, std::ostream& out, std::ostream& err) {
  try {
    const NetworkInstance truth = load_checked(config.truth, err);
    const NetworkInstance estimates = load_checked(config.estimates, err);
    if (!truth.truth) throw MissingPosition(config.truth + " has no pos field");
    if (!estimates.truth) throw MissingPosition(config.estimates + " has no pos field");
    if (estimates.graph.num_nodes() != truth.graph.num_nodes()) {
      throw MissingNode("estimates and truth cover different node sets");
    }
    out << "rmse " << format_double(rmse(estimates.truth->positions, *truth.truth, truth.graph))
        << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    err << "compare: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace locadmm::harness
