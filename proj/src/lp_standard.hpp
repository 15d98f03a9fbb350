#pragma once

// Internal standard-form transform shared by the exact and float backends:
//   min c'xi + c_const   s.t.   A xi = b,  b >= 0,  xi >= 0,
// with per-row slack bookkeeping and the mapping back to the stated problem.
// Upper bounds of doubly-bounded variables become synthetic <= rows; their
// duals fold into bound reduced costs and are not reported.

#include <utility>
#include <vector>

#include "viab/lp.hpp"

namespace viab {
namespace detail {

struct VarMap {
  enum Kind { Shift, Negate, Split } kind = Shift;
  int col = -1;
  int col2 = -1;   // Split only
  Rat offset = 0;  // Shift: x = offset + xi; Negate: x = offset - xi
};

struct StandardLp {
  int m = 0;  // internal rows (real + synthetic upper-bound rows)
  int n = 0;  // structural + slack columns
  std::vector<std::vector<std::pair<int, Rat>>> rows;  // sparse, cols < n
  std::vector<Rat> b;                                  // nonnegative
  std::vector<Rat> c;                                  // phase-2 costs
  Rat c_const = 0;
  std::vector<int> row_sign;           // +-1 applied to reach b >= 0
  std::vector<int> slack_col;          // -1 for = rows
  std::vector<char> needs_artificial;  // no basis-ready slack
  int n_real_rows = 0;
  std::vector<VarMap> vmap;
  bool maximize = false;
};

StandardLp standardize(const LpProblem& problem);

// Backends (lp_exact.cpp / lp_float.cpp).
LpSolution solve_exact(const LpProblem& problem, const StandardLp& std_lp);
LpSolution solve_float(const LpProblem& problem, const StandardLp& std_lp);

}  // namespace detail
}  // namespace viab
