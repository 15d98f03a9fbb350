#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "viab/rational.hpp"

namespace viab {

enum class LpSense { Min, Max };
enum class RowSense { LE, EQ, GE };
enum class LpStatus { Optimal, Infeasible, Unbounded };
enum class ArithMode { Exact, Float };

// Dense-by-row (sparse-coefficient) LP with optional variable bounds.
// Coefficients must be canonical rationals (see make_rat); the model layer
// sanitizes its inputs, code building LPs directly is expected to.
//
// Dual conventions (shadow prices of the stated problem):
//   Min: y_i >= 0 on >= rows, y_i <= 0 on <= rows, free on = rows.
//   Max: signs flipped.
// Reduced cost r_j = c_j - y'A_j; Min: r_j >= 0 when x_j sits at its lower
// bound, r_j <= 0 at its upper bound, r_j = 0 otherwise; Max flipped.
// Strong duality: c'x = y'b + sum_j r_j * (active bound of x_j).
struct LpProblem {
  LpSense sense = LpSense::Min;

  std::vector<std::string> var_names;
  std::vector<Rat> objective;
  std::vector<std::optional<Rat>> lower;
  std::vector<std::optional<Rat>> upper;

  std::vector<std::string> row_names;
  std::vector<std::vector<std::pair<int, Rat>>> rows;  // sparse coefficients
  std::vector<RowSense> senses;
  std::vector<Rat> rhs;

  int add_var(const std::string& name, const Rat& obj = Rat(0),
              std::optional<Rat> lb = std::nullopt,
              std::optional<Rat> ub = std::nullopt);
  int add_row(const std::string& name, std::vector<std::pair<int, Rat>> coeffs,
              RowSense sense, const Rat& rhs_value);

  int num_vars() const { return static_cast<int>(objective.size()); }
  int num_rows() const { return static_cast<int>(rhs.size()); }

  // Dimension consistency and unique names; throws DimensionError.
  void validate() const;
};

struct LpSolution {
  LpStatus status = LpStatus::Optimal;
  ArithMode mode = ArithMode::Exact;
  long pivots = 0;

  // Exact payloads (mode == Exact).
  std::vector<Rat> x;        // primal, per variable
  std::vector<Rat> y;        // dual, per row
  Rat objective = 0;
  std::vector<Rat> farkas;   // per row, status Infeasible
  std::vector<Rat> ray;      // per variable, status Unbounded

  // Float payloads (mode == Float).
  std::vector<double> xf, yf, farkasf, rayf;
  double objectivef = 0.0;
};

// Exact mode: rational pivoting, most-negative pricing with a Bland
// anti-cycling fallback on stalls. Float mode: revised simplex with partial
// pricing, 1e-9 feasibility/optimality tolerances; throws NumericalBreakdown
// when the basis cannot be kept usable (caller should retry exact).
LpSolution lp_solve(const LpProblem& problem, ArithMode mode);

struct CertificateReport {
  bool ok = false;
  std::vector<std::string> violations;  // offending row/variable names
  Rat primal_objective = 0;             // exact mode
  Rat dual_objective = 0;
  double max_residual = 0.0;            // float mode
};

// Recomputes primal/dual feasibility, complementary slackness and the
// objective match from scratch. Exact solutions must have zero residuals;
// float residuals must stay within tol. Throws MismatchError listing the
// violated names when the certificate fails.
CertificateReport check_certificate(const LpProblem& problem,
                                    const LpSolution& solution, double tol);

// Row-oriented debug dump; not a public contract.
std::string dump_lp(const LpProblem& problem);

}  // namespace viab
