#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "locadmm/errors.hpp"
#include "locadmm/network.hpp"

namespace locadmm {

namespace {

using nlohmann::json;

std::size_t line_of_byte(const std::string& text, std::size_t byte) {
  const std::size_t end = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + end, '\n'));
}

json point_to_json(const Point& p) {
  json arr = json::array();
  for (Eigen::Index k = 0; k < p.size(); ++k) arr.push_back(p[k]);
  return arr;
}

const json& require(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw ParseError("expected an object", 0, path);
  const auto it = obj.find(key);
  if (it == obj.end()) throw ParseError("missing field", 0, path + "/" + key);
  return *it;
}

int read_int(const json& value, const std::string& path) {
  if (!value.is_number_integer()) throw ParseError("expected an integer", 0, path);
  return value.get<int>();
}

double read_number(const json& value, const std::string& path) {
  if (!value.is_number()) throw ParseError("expected a number", 0, path);
  return value.get<double>();
}

Point read_point(const json& value, int dim, const std::string& path) {
  if (!value.is_array()) throw ParseError("expected an array", 0, path);
  if (static_cast<int>(value.size()) != dim) {
    throw ParseError("expected " + std::to_string(dim) + " coordinates", 0, path);
  }
  Point p(dim);
  for (int k = 0; k < dim; ++k) p[k] = read_number(value[k], path + "/" + std::to_string(k));
  return p;
}

}  // namespace

std::string network_to_json(const NetworkInstance& instance) {
  const NetworkGraph& graph = instance.graph;
  json doc;
  doc["schema_version"] = kNetworkSchemaVersion;
  doc["dim"] = graph.dim();
  json nodes = json::array();
  for (int i = 0; i < graph.num_nodes(); ++i) {
    json node;
    node["id"] = i;
    node["anchor"] = graph.is_anchor(i);
    if (instance.truth) node["pos"] = point_to_json(instance.truth->positions.at(i));
    if (graph.is_anchor(i)) node["anchor_pos"] = point_to_json(*graph.anchor(i));
    nodes.push_back(std::move(node));
  }
  doc["nodes"] = std::move(nodes);
  json edges = json::array();
  for (const Edge& e : graph.edges()) {
    edges.push_back({{"i", e.i}, {"j", e.j}, {"d", instance.measurements.at(e.i, e.j)}});
  }
  doc["edges"] = std::move(edges);
  return doc.dump(1) + "\n";
}

NetworkInstance network_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), line_of_byte(text, e.byte), "");
  }

  const int version = read_int(require(doc, "schema_version", ""), "/schema_version");
  if (version != kNetworkSchemaVersion) {
    throw SchemaVersionMismatch("network schema version " + std::to_string(version) +
                                " is not supported (expected " +
                                std::to_string(kNetworkSchemaVersion) + ")");
  }
  const int dim = read_int(require(doc, "dim", ""), "/dim");
  if (dim < 1) throw ParseError("dimension must be positive", 0, "/dim");

  const json& nodes = require(doc, "nodes", "");
  if (!nodes.is_array() || nodes.empty()) throw ParseError("expected a non-empty array", 0, "/nodes");
  const int num_nodes = static_cast<int>(nodes.size());

  std::vector<std::optional<Point>> positions(num_nodes);
  std::vector<char> seen(num_nodes, 0);
  std::map<int, Point> anchors;
  for (int k = 0; k < num_nodes; ++k) {
    const std::string path = "/nodes/" + std::to_string(k);
    const json& node = nodes[k];
    const int id = read_int(require(node, "id", path), path + "/id");
    if (id < 0 || id >= num_nodes) throw ParseError("ids must be dense and 0-based", 0, path + "/id");
    if (seen[id]) throw ParseError("duplicate node id", 0, path + "/id");
    seen[id] = 1;
    const json& anchor_flag = require(node, "anchor", path);
    if (!anchor_flag.is_boolean()) throw ParseError("expected a boolean", 0, path + "/anchor");
    if (node.contains("pos")) positions[id] = read_point(node["pos"], dim, path + "/pos");
    if (anchor_flag.get<bool>()) {
      Point a = read_point(require(node, "anchor_pos", path), dim, path + "/anchor_pos");
      if (positions[id] && *positions[id] != a) {
        throw ParseError("anchor position differs from true position", 0, path + "/pos");
      }
      anchors.emplace(id, std::move(a));
    } else if (node.contains("anchor_pos")) {
      throw ParseError("anchor_pos given for a non-anchor", 0, path + "/anchor_pos");
    }
  }

  const json& edge_list = require(doc, "edges", "");
  if (!edge_list.is_array()) throw ParseError("expected an array", 0, "/edges");
  MeasurementSet measurements;
  std::vector<Edge> edges;
  for (std::size_t k = 0; k < edge_list.size(); ++k) {
    const std::string path = "/edges/" + std::to_string(k);
    const json& entry = edge_list[k];
    const int i = read_int(require(entry, "i", path), path + "/i");
    const int j = read_int(require(entry, "j", path), path + "/j");
    const double d = read_number(require(entry, "d", path), path + "/d");
    if (i < 0 || j < 0 || i >= num_nodes || j >= num_nodes || i == j) {
      throw ParseError("invalid endpoint", 0, path);
    }
    if (!(d >= 0.0)) throw ParseError("range must be >= 0", 0, path + "/d");
    if (measurements.contains(i, j)) {
      if (measurements.at(i, j) != d) {
        throw ParseError("asymmetric duplicate edge: d_ij != d_ji", 0, path + "/d");
      }
      continue;
    }
    measurements.set(i, j, d);
    edges.push_back({std::min(i, j), std::max(i, j)});
  }

  NetworkInstance out;
  try {
    out.graph = NetworkGraph(dim, num_nodes, std::move(edges), std::move(anchors));
  } catch (const InvalidParameter& e) {
    throw ParseError(e.what(), 0, "/edges");
  }
  out.measurements = std::move(measurements);

  const auto with_pos = std::count_if(positions.begin(), positions.end(),
                                      [](const auto& p) { return p.has_value(); });
  if (with_pos == num_nodes) {
    GroundTruth truth;
    for (auto& p : positions) truth.positions.push_back(std::move(*p));
    out.truth = std::move(truth);
  } else if (with_pos != 0) {
    throw ParseError("'pos' must be given for all nodes or for none", 0, "/nodes");
  }
  out.disconnected_warning = !out.graph.is_connected();
  return out;
}

void save_network(const std::string& path, const NetworkInstance& instance) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error("cannot open '" + path + "' for writing");
  file << network_to_json(instance);
  if (!file) throw Error("failed writing '" + path + "'");
}

NetworkInstance load_network(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return network_from_json(buffer.str());
}

}  // namespace locadmm
