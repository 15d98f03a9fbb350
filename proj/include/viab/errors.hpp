#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace viab {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input document: missing field, wrong type, unparsable number.
struct SchemaError : Error {
  explicit SchemaError(const std::string& what) : Error("schema: " + what) {}
};

// Structurally well-formed input violating a model invariant.
struct InvariantError : Error {
  InvariantError(const std::string& node, const std::string& rule)
      : Error("invariant: node '" + node + "': " + rule), node_id(node) {}
  std::string node_id;
};

struct InvalidStoppingTime : Error {
  explicit InvalidStoppingTime(const std::string& what)
      : Error("stopping time: " + what) {}
};

struct DimensionError : Error {
  explicit DimensionError(const std::string& what)
      : Error("dimension: " + what) {}
};

struct ParamError : Error {
  explicit ParamError(const std::string& what) : Error("param: " + what) {}
};

struct CapExceeded : Error {
  explicit CapExceeded(std::uint64_t lower_bound)
      : Error("cap exceeded: at least " + std::to_string(lower_bound) +
              " stopping times"),
        count_lower_bound(lower_bound) {}
  std::uint64_t count_lower_bound;
};

struct UnsupportedCone : Error {
  explicit UnsupportedCone(const std::string& what)
      : Error("unsupported cone: " + what) {}
};

// Float backend lost too much precision; caller should retry in exact mode.
struct NumericalBreakdown : Error {
  explicit NumericalBreakdown(const std::string& what)
      : Error("numerical breakdown: " + what) {}
};

struct MismatchError : Error {
  explicit MismatchError(const std::string& what)
      : Error("certificate mismatch: " + what) {}
};

struct InfeasibleHedge : Error {
  explicit InfeasibleHedge(const std::string& what)
      : Error("infeasible hedge: " + what) {}
};

struct BudgetExhausted : Error {
  explicit BudgetExhausted(const std::string& what)
      : Error("budget exhausted: " + what) {}
};

}  // namespace viab
