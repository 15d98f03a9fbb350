// Exact backend: two-phase dense-tableau simplex over rationals.
// Pricing is most-negative reduced cost with lowest-index tie-breaks; after a
// stretch of degenerate pivots it falls back to Bland's rule until the
// objective strictly improves, which guarantees termination.

#include <vector>

#include "lp_standard.hpp"
#include "viab/errors.hpp"

namespace viab {
namespace detail {

namespace {

constexpr int kStallLimit = 25;
constexpr long kIterationCap = 2000000;

// a -= f * b without operator temporaries.
inline void submul(mpq_class& a, const mpq_class& f, const mpq_class& b,
                   mpq_class& tmp) {
  mpq_mul(tmp.get_mpq_t(), f.get_mpq_t(), b.get_mpq_t());
  mpq_sub(a.get_mpq_t(), a.get_mpq_t(), tmp.get_mpq_t());
}

struct Tableau {
  int m = 0;
  int width = 0;       // columns excluding rhs
  int id_base = 0;     // first identity (artificial bookkeeping) column
  std::vector<std::vector<Rat>> row;  // m rows, each width+1 (last = rhs)
  std::vector<Rat> cost;              // reduced costs, width entries
  Rat neg_obj = 0;                    // -(current objective)
  std::vector<int> basis;             // column basic in each row
  std::vector<char> allowed;          // may enter the basis
  long pivots = 0;

  Rat& rhs(int i) { return row[i][width]; }
  const Rat& rhs(int i) const { return row[i][width]; }

  void pivot(int r, int s) {
    std::vector<Rat>& pr = row[r];
    Rat inv = 1 / pr[s];
    mpq_class tmp;
    if (inv != 1)
      for (int j = 0; j <= width; ++j)
        if (pr[j] != 0) pr[j] *= inv;
    for (int i = 0; i < m; ++i) {
      if (i == r) continue;
      std::vector<Rat>& ri = row[i];
      if (ri[s] == 0) continue;
      const Rat f = ri[s];
      for (int j = 0; j <= width; ++j)
        if (pr[j] != 0) submul(ri[j], f, pr[j], tmp);
      ri[s] = 0;
    }
    if (cost[s] != 0) {
      const Rat f = cost[s];
      for (int j = 0; j < width; ++j)
        if (pr[j] != 0) submul(cost[j], f, pr[j], tmp);
      submul(neg_obj, f, pr[width], tmp);
      cost[s] = 0;
    }
    basis[r] = s;
    ++pivots;
  }

  // Returns true when optimal; false when unbounded (entering column s has
  // no blocking row; s reported through `unbounded_col`).
  bool run(int& unbounded_col) {
    unbounded_col = -1;
    int stall = 0;
    bool bland = false;
    Rat last_obj = neg_obj;
    while (true) {
      if (pivots > kIterationCap)
        throw Error("simplex iteration cap exceeded");
      int s = -1;
      if (bland) {
        for (int j = 0; j < width; ++j)
          if (allowed[j] && cost[j] < 0) { s = j; break; }
      } else {
        const Rat* best = nullptr;
        for (int j = 0; j < width; ++j)
          if (allowed[j] && cost[j] < 0 && (!best || cost[j] < *best)) {
            best = &cost[j];
            s = j;
          }
      }
      if (s < 0) return true;
      int r = -1;
      for (int i = 0; i < m; ++i) {
        if (row[i][s] <= 0) continue;
        if (r < 0) { r = i; continue; }
        // ratio comparison: rhs(i)/row[i][s] vs rhs(r)/row[r][s]
        const Rat lhs = rhs(i) * row[r][s];
        const Rat rhsv = rhs(r) * row[i][s];
        if (lhs < rhsv || (lhs == rhsv && basis[i] < basis[r])) r = i;
      }
      if (r < 0) { unbounded_col = s; return false; }
      pivot(r, s);
      if (neg_obj == last_obj) {
        if (++stall >= kStallLimit) bland = true;
      } else {
        stall = 0;
        bland = false;
        last_obj = neg_obj;
      }
    }
  }
};

}  // namespace

LpSolution solve_exact(const LpProblem& p, const StandardLp& s) {
  Tableau t;
  t.m = s.m;
  t.id_base = s.n;
  t.width = s.n + s.m;  // structural+slack, then identity columns
  t.row.assign(t.m, std::vector<Rat>(t.width + 1, Rat(0)));
  for (int i = 0; i < s.m; ++i) {
    for (const auto& [j, a] : s.rows[i]) t.row[i][j] = a;
    t.row[i][t.id_base + i] = 1;
    t.row[i][t.width] = s.b[i];
  }
  t.basis.resize(t.m);
  t.allowed.assign(t.width, 1);

  // Phase 1: minimize the sum of artificials. Identity columns of rows whose
  // slack is basis-ready are bookkeeping only and never enter.
  std::vector<char> is_artificial(t.m, 0);
  for (int i = 0; i < t.m; ++i) {
    if (!s.needs_artificial[i]) {
      t.basis[i] = s.slack_col[i];
      t.allowed[t.id_base + i] = 0;
    } else {
      t.basis[i] = t.id_base + i;
      is_artificial[i] = 1;
    }
  }
  t.cost.assign(t.width, Rat(0));
  t.neg_obj = 0;
  bool any_artificial = false;
  for (int i = 0; i < t.m; ++i) {
    if (!is_artificial[i]) continue;
    any_artificial = true;
    for (int j = 0; j < t.width; ++j)
      if (t.row[i][j] != 0) t.cost[j] -= t.row[i][j];
    t.neg_obj += t.rhs(i);  // cost row tracks -(objective)
  }
  // neg_obj currently accumulated with the wrong sign: objective starts at
  // sum b_i over artificial rows, so -(obj) = -sum.
  t.neg_obj = -t.neg_obj;
  // Artificial columns must carry zero reduced cost adjustment: their cost is
  // 1 and the initial cost row already subtracted the identity entry.
  for (int i = 0; i < t.m; ++i)
    if (is_artificial[i]) t.cost[t.id_base + i] += 1;

  LpSolution sol;
  sol.mode = ArithMode::Exact;

  if (any_artificial) {
    int ub_col = -1;
    if (!t.run(ub_col))  // bounded below by 0; cannot be unbounded
      throw Error("phase-1 reported unbounded");
    if (t.neg_obj != 0) {
      // Infeasible. Phase-1 duals: y_i = c_id_i - cbar_id_i with c_id = 1 on
      // artificial rows, 0 on bookkeeping rows.
      sol.status = LpStatus::Infeasible;
      sol.farkas.assign(p.num_rows(), Rat(0));
      for (int i = 0; i < s.n_real_rows; ++i) {
        Rat yi = (is_artificial[i] ? Rat(1) : Rat(0)) - t.cost[t.id_base + i];
        sol.farkas[i] = Rat(s.row_sign[i]) * yi;
      }
      sol.pivots = t.pivots;
      return sol;
    }
    // Drive basic artificials out where possible; inert rows stay.
    for (int i = 0; i < t.m; ++i) {
      if (t.basis[i] < t.id_base) continue;
      if (!is_artificial[t.basis[i] - t.id_base]) continue;
      for (int j = 0; j < s.n; ++j) {
        if (t.allowed[j] && t.row[i][j] != 0) {
          t.pivot(i, j);
          break;
        }
      }
    }
    // Artificials never re-enter.
    for (int i = 0; i < t.m; ++i)
      if (is_artificial[i]) t.allowed[t.id_base + i] = 0;
  }

  // Phase 2 reduced costs for the current basis.
  t.cost.assign(t.width, Rat(0));
  for (int j = 0; j < s.n; ++j) t.cost[j] = s.c[j];
  t.neg_obj = 0;
  {
    mpq_class tmp;
    for (int i = 0; i < t.m; ++i) {
      const int bj = t.basis[i];
      const Rat cb = (bj < s.n) ? s.c[bj] : Rat(0);
      if (cb == 0) continue;
      for (int j = 0; j < t.width; ++j)
        if (t.row[i][j] != 0) submul(t.cost[j], cb, t.row[i][j], tmp);
      submul(t.neg_obj, cb, t.rhs(i), tmp);
    }
  }

  int ub_col = -1;
  const bool optimal = t.run(ub_col);
  sol.pivots = t.pivots;

  if (!optimal) {
    // Unbounded: assemble the internal ray and map it back.
    std::vector<Rat> xi(s.n, Rat(0));
    xi[ub_col] = 1;
    for (int i = 0; i < t.m; ++i)
      if (t.basis[i] < s.n) xi[t.basis[i]] = -t.row[i][ub_col];
    sol.status = LpStatus::Unbounded;
    sol.ray.assign(p.num_vars(), Rat(0));
    for (std::size_t j = 0; j < s.vmap.size(); ++j) {
      const VarMap& vm = s.vmap[j];
      switch (vm.kind) {
        case VarMap::Shift: sol.ray[j] = xi[vm.col]; break;
        case VarMap::Negate: sol.ray[j] = -xi[vm.col]; break;
        case VarMap::Split: sol.ray[j] = xi[vm.col] - xi[vm.col2]; break;
      }
    }
    return sol;
  }

  // Optimal: primal, duals, objective.
  std::vector<Rat> xi(s.n, Rat(0));
  for (int i = 0; i < t.m; ++i)
    if (t.basis[i] < s.n) xi[t.basis[i]] = t.rhs(i);
  sol.status = LpStatus::Optimal;
  sol.x.assign(p.num_vars(), Rat(0));
  for (std::size_t j = 0; j < s.vmap.size(); ++j) {
    const VarMap& vm = s.vmap[j];
    switch (vm.kind) {
      case VarMap::Shift: sol.x[j] = vm.offset + xi[vm.col]; break;
      case VarMap::Negate: sol.x[j] = vm.offset - xi[vm.col]; break;
      case VarMap::Split: sol.x[j] = xi[vm.col] - xi[vm.col2]; break;
    }
  }
  Rat internal_obj = -t.neg_obj + s.c_const;
  sol.objective = s.maximize ? Rat(-internal_obj) : internal_obj;
  sol.y.assign(p.num_rows(), Rat(0));
  for (int i = 0; i < s.n_real_rows; ++i) {
    Rat yi = -t.cost[t.id_base + i];  // c_id = 0 in phase 2
    yi *= s.row_sign[i];
    if (s.maximize) yi = -yi;
    sol.y[i] = yi;
  }
  return sol;
}

}  // namespace detail
}  // namespace viab
