#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace locadmm {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// Random layout stayed disconnected for the whole retry budget.
class ConnectivityFailure : public Error {
 public:
  using Error::Error;
};

/// Graph rejected by a solver (disconnected, isolated node, or no anchor).
class UnsolvableNetwork : public Error {
 public:
  using Error::Error;
};

class MissingPosition : public Error {
 public:
  using Error::Error;
};

class MissingNode : public Error {
 public:
  using Error::Error;
};

class MissingMessage : public Error {
 public:
  using Error::Error;
};

class EmptyFreeSet : public Error {
 public:
  using Error::Error;
};

class InvalidInitSpec : public Error {
 public:
  using Error::Error;
};

class SingularSystem : public Error {
 public:
  using Error::Error;
};

class SchemaVersionMismatch : public Error {
 public:
  using Error::Error;
};

/// Malformed network file. `line()` is 0 when the problem is structural
/// rather than syntactic; `field()` is a JSON-pointer-like path.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line, std::string field)
      : Error(compose(message, line, field)), line_(line), field_(std::move(field)) {}

  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  static std::string compose(const std::string& message, std::size_t line,
                             const std::string& field) {
    std::string out = "parse error";
    if (line > 0) out += " at line " + std::to_string(line);
    if (!field.empty()) out += " in '" + field + "'";
    return out + ": " + message;
  }

  std::size_t line_;
  std::string field_;
};

/// A solver coordinate became NaN or infinite; usually divergent (c, rho).
class NonFiniteValue : public Error {
 public:
  NonFiniteValue(int iteration, int node)
      : Error("non-finite value at iteration " + std::to_string(iteration) + ", node " +
              std::to_string(node)),
        iteration_(iteration),
        node_(node) {}

  int iteration() const { return iteration_; }
  int node() const { return node_; }

 private:
  int iteration_;
  int node_;
};

}  // namespace locadmm
