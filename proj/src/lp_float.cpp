// Float backend: two-phase revised simplex with an explicitly maintained
// basis inverse, partial pricing over a rotating column window, periodic
// refactorization, and 1e-9 feasibility/optimality tolerances.

#include <cmath>
#include <vector>

#include "lp_standard.hpp"
#include "viab/errors.hpp"

namespace viab {
namespace detail {

namespace {

constexpr double kTol = 1e-9;
constexpr double kPivotTol = 1e-11;
constexpr int kRefactorEvery = 64;
constexpr int kPriceWindow = 64;
constexpr long kIterationCap = 200000;

struct Revised {
  int m = 0;
  int n_total = 0;  // structural+slack+identity columns
  int id_base = 0;
  std::vector<std::vector<std::pair<int, double>>> cols;  // sparse columns
  std::vector<double> b;
  std::vector<double> cost;  // current phase costs
  std::vector<int> basis;
  std::vector<char> allowed;
  std::vector<double> binv;  // m*m row-major
  std::vector<double> xb;
  long pivots = 0;
  int since_refactor = 0;

  double& bi(int i, int j) { return binv[static_cast<std::size_t>(i) * m + j]; }

  void refactor() {
    // Rebuild binv = B^{-1} by Gauss-Jordan with partial pivoting.
    std::vector<double> B(static_cast<std::size_t>(m) * m, 0.0);
    for (int k = 0; k < m; ++k)
      for (const auto& [i, v] : cols[basis[k]]) B[static_cast<std::size_t>(i) * m + k] = v;
    std::vector<double> inv(static_cast<std::size_t>(m) * m, 0.0);
    for (int i = 0; i < m; ++i) inv[static_cast<std::size_t>(i) * m + i] = 1.0;
    for (int col = 0; col < m; ++col) {
      int piv = col;
      double best = std::abs(B[static_cast<std::size_t>(col) * m + col]);
      for (int i = col + 1; i < m; ++i) {
        double v = std::abs(B[static_cast<std::size_t>(i) * m + col]);
        if (v > best) { best = v; piv = i; }
      }
      if (best < kPivotTol) throw NumericalBreakdown("singular basis");
      if (piv != col) {
        for (int j = 0; j < m; ++j) {
          std::swap(B[static_cast<std::size_t>(piv) * m + j], B[static_cast<std::size_t>(col) * m + j]);
          std::swap(inv[static_cast<std::size_t>(piv) * m + j], inv[static_cast<std::size_t>(col) * m + j]);
        }
      }
      const double d = 1.0 / B[static_cast<std::size_t>(col) * m + col];
      for (int j = 0; j < m; ++j) {
        B[static_cast<std::size_t>(col) * m + j] *= d;
        inv[static_cast<std::size_t>(col) * m + j] *= d;
      }
      for (int i = 0; i < m; ++i) {
        if (i == col) continue;
        const double f = B[static_cast<std::size_t>(i) * m + col];
        if (f == 0.0) continue;
        for (int j = 0; j < m; ++j) {
          B[static_cast<std::size_t>(i) * m + j] -= f * B[static_cast<std::size_t>(col) * m + j];
          inv[static_cast<std::size_t>(i) * m + j] -= f * inv[static_cast<std::size_t>(col) * m + j];
        }
      }
    }
    binv = std::move(inv);
    recompute_xb();
    since_refactor = 0;
  }

  void recompute_xb() {
    xb.assign(m, 0.0);
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < m; ++k) xb[i] += bi(i, k) * b[k];
  }

  std::vector<double> duals() const {
    std::vector<double> y(m, 0.0);
    for (int k = 0; k < m; ++k) {
      const double cb = cost[basis[k]];
      if (cb == 0.0) continue;
      for (int j = 0; j < m; ++j)
        y[j] += cb * binv[static_cast<std::size_t>(k) * m + j];
    }
    return y;
  }

  double reduced_cost(const std::vector<double>& y, int j) const {
    double r = cost[j];
    for (const auto& [i, v] : cols[j]) r -= y[i] * v;
    return r;
  }

  std::vector<double> ftran(int j) const {
    std::vector<double> w(m, 0.0);
    for (const auto& [i, v] : cols[j])
      for (int r = 0; r < m; ++r) w[r] += binv[static_cast<std::size_t>(r) * m + i] * v;
    return w;
  }

  void change_basis(int r, int s, const std::vector<double>& w) {
    const double theta = xb[r] / w[r];
    const double inv = 1.0 / w[r];
    for (int j = 0; j < m; ++j) bi(r, j) *= inv;
    for (int i = 0; i < m; ++i) {
      if (i == r) continue;
      const double f = w[i];
      if (f == 0.0) continue;
      for (int j = 0; j < m; ++j) bi(i, j) -= f * bi(r, j);
      xb[i] -= theta * f;
      if (std::abs(xb[i]) < 1e-12) xb[i] = 0.0;
    }
    xb[r] = theta;
    basis[r] = s;
    if (++since_refactor >= kRefactorEvery) refactor();
  }

  // Pivots basic artificials out wherever a usable column exists; rows with
  // no usable entry are inert and stay at zero.
  void drive_out(const std::vector<char>& is_artificial) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (int i = 0; i < m && !changed; ++i) {
        if (basis[i] < id_base || !is_artificial[basis[i] - id_base]) continue;
        for (int j = 0; j < id_base && !changed; ++j) {
          if (!allowed[j]) continue;
          std::vector<double> w = ftran(j);
          if (std::abs(w[i]) > 1e-7) {
            change_basis(i, j, w);
            changed = true;
          }
        }
      }
    }
  }

  // Returns true on optimal, false on unbounded (column via unbounded_col).
  // After a stretch of degenerate steps the pricing falls back to Bland's
  // rule (first negative reduced cost) until progress resumes.
  bool run(int& unbounded_col) {
    unbounded_col = -1;
    int window_start = 0;
    int stall = 0;
    bool bland = false;
    bool retried_unbounded = false;
    while (true) {
      if (++pivots > kIterationCap) throw NumericalBreakdown("iteration cap");
      std::vector<double> y = duals();
      int s = -1;
      if (bland) {
        for (int j = 0; j < n_total && s < 0; ++j)
          if (allowed[j] && reduced_cost(y, j) < -kTol) s = j;
      } else {
        // Partial pricing: scan windows until one offers an entering column.
        double best = -kTol;
        int scanned = 0;
        int w0 = window_start;
        while (scanned < n_total) {
          for (int off = 0; off < kPriceWindow && w0 + off < n_total; ++off) {
            const int j = w0 + off;
            if (!allowed[j]) continue;
            const double r = reduced_cost(y, j);
            if (r < best) { best = r; s = j; }
          }
          scanned += kPriceWindow;
          w0 += kPriceWindow;
          if (w0 >= n_total) w0 = 0;
          if (s >= 0) break;
        }
        window_start = w0;
      }
      if (s < 0) return true;

      std::vector<double> w = ftran(s);
      int r = -1;
      double best_ratio = 0.0;
      for (int i = 0; i < m; ++i) {
        if (w[i] <= kTol) continue;
        const double ratio = xb[i] / w[i];
        if (r < 0 || ratio < best_ratio - kTol ||
            (ratio < best_ratio + kTol && basis[i] < basis[r])) {
          r = i;
          best_ratio = ratio;
        }
      }
      if (r < 0) {
        // No blocking row can be a stale-basis artifact; refactorize and
        // re-derive once before reporting an unbounded direction.
        if (!retried_unbounded) {
          retried_unbounded = true;
          refactor();
          continue;
        }
        unbounded_col = s;
        return false;
      }
      if (std::abs(w[r]) < kPivotTol) {
        refactor();
        continue;
      }
      retried_unbounded = false;
      if (xb[r] / w[r] <= kTol) {
        if (++stall >= 50) bland = true;
      } else {
        stall = 0;
        bland = false;
      }
      change_basis(r, s, w);
    }
  }
};

}  // namespace

LpSolution solve_float(const LpProblem& p, const StandardLp& s) {
  Revised rv;
  rv.m = s.m;
  rv.id_base = s.n;
  rv.n_total = s.n + s.m;
  rv.cols.assign(rv.n_total, {});
  for (int i = 0; i < s.m; ++i) {
    for (const auto& [j, a] : s.rows[i]) rv.cols[j].emplace_back(i, a.get_d());
    rv.cols[rv.id_base + i].emplace_back(i, 1.0);
  }
  rv.b.resize(s.m);
  for (int i = 0; i < s.m; ++i) rv.b[i] = s.b[i].get_d();
  rv.basis.resize(s.m);
  rv.allowed.assign(rv.n_total, 1);

  std::vector<char> is_artificial(s.m, 0);
  bool any_artificial = false;
  for (int i = 0; i < s.m; ++i) {
    if (!s.needs_artificial[i]) {
      rv.basis[i] = s.slack_col[i];
      rv.allowed[rv.id_base + i] = 0;
    } else {
      rv.basis[i] = rv.id_base + i;
      is_artificial[i] = 1;
      any_artificial = true;
    }
  }
  rv.binv.assign(static_cast<std::size_t>(s.m) * s.m, 0.0);
  for (int i = 0; i < s.m; ++i) rv.bi(i, i) = 1.0;
  rv.recompute_xb();

  LpSolution sol;
  sol.mode = ArithMode::Float;

  if (any_artificial) {
    rv.cost.assign(rv.n_total, 0.0);
    for (int i = 0; i < s.m; ++i)
      if (is_artificial[i]) rv.cost[rv.id_base + i] = 1.0;
    int ub_col = -1;
    if (!rv.run(ub_col)) throw NumericalBreakdown("phase-1 unbounded");
    double phase1 = 0.0;
    for (int i = 0; i < s.m; ++i) phase1 += rv.cost[rv.basis[i]] * rv.xb[i];
    if (phase1 > 1e-7) {
      sol.status = LpStatus::Infeasible;
      std::vector<double> y = rv.duals();
      sol.farkasf.assign(p.num_rows(), 0.0);
      for (int i = 0; i < s.n_real_rows; ++i)
        sol.farkasf[i] = s.row_sign[i] * y[i];
      sol.pivots = rv.pivots;
      return sol;
    }
    for (int i = 0; i < s.m; ++i)
      if (is_artificial[i]) rv.allowed[rv.id_base + i] = 0;
    rv.drive_out(is_artificial);
  }

  rv.cost.assign(rv.n_total, 0.0);
  for (int j = 0; j < s.n; ++j) rv.cost[j] = s.c[j].get_d();
  int ub_col = -1;
  const bool optimal = rv.run(ub_col);
  sol.pivots = rv.pivots;

  if (!optimal) {
    std::vector<double> w = rv.ftran(ub_col);
    std::vector<double> xi(s.n, 0.0);
    if (ub_col < s.n) xi[ub_col] = 1.0;
    for (int i = 0; i < s.m; ++i)
      if (rv.basis[i] < s.n) xi[rv.basis[i]] = -w[i];
    sol.status = LpStatus::Unbounded;
    sol.rayf.assign(p.num_vars(), 0.0);
    for (std::size_t j = 0; j < s.vmap.size(); ++j) {
      const VarMap& vm = s.vmap[j];
      switch (vm.kind) {
        case VarMap::Shift: sol.rayf[j] = xi[vm.col]; break;
        case VarMap::Negate: sol.rayf[j] = -xi[vm.col]; break;
        case VarMap::Split: sol.rayf[j] = xi[vm.col] - xi[vm.col2]; break;
      }
    }
    return sol;
  }

  std::vector<double> xi(s.n, 0.0);
  for (int i = 0; i < s.m; ++i)
    if (rv.basis[i] < s.n) xi[rv.basis[i]] = rv.xb[i];
  sol.status = LpStatus::Optimal;
  sol.xf.assign(p.num_vars(), 0.0);
  for (std::size_t j = 0; j < s.vmap.size(); ++j) {
    const VarMap& vm = s.vmap[j];
    switch (vm.kind) {
      case VarMap::Shift: sol.xf[j] = vm.offset.get_d() + xi[vm.col]; break;
      case VarMap::Negate: sol.xf[j] = vm.offset.get_d() - xi[vm.col]; break;
      case VarMap::Split: sol.xf[j] = xi[vm.col] - xi[vm.col2]; break;
    }
  }
  double obj = s.c_const.get_d();
  for (int j = 0; j < s.n; ++j) obj += s.c[j].get_d() * xi[j];
  sol.objectivef = s.maximize ? -obj : obj;
  std::vector<double> y = rv.duals();
  sol.yf.assign(p.num_rows(), 0.0);
  for (int i = 0; i < s.n_real_rows; ++i) {
    double yi = s.row_sign[i] * y[i];
    if (s.maximize) yi = -yi;
    sol.yf[i] = yi;
  }
  return sol;
}

}  // namespace detail
}  // namespace viab
