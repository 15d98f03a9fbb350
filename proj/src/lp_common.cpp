#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "lp_standard.hpp"
#include "viab/errors.hpp"
#include "viab/lp.hpp"

namespace viab {

int LpProblem::add_var(const std::string& name, const Rat& obj,
                       std::optional<Rat> lb, std::optional<Rat> ub) {
  var_names.push_back(name);
  objective.push_back(obj);
  lower.push_back(std::move(lb));
  upper.push_back(std::move(ub));
  return num_vars() - 1;
}

int LpProblem::add_row(const std::string& name,
                       std::vector<std::pair<int, Rat>> coeffs, RowSense sense,
                       const Rat& rhs_value) {
  row_names.push_back(name);
  rows.push_back(std::move(coeffs));
  senses.push_back(sense);
  rhs.push_back(rhs_value);
  return num_rows() - 1;
}

void LpProblem::validate() const {
  const int n = num_vars();
  if (static_cast<int>(var_names.size()) != n ||
      static_cast<int>(lower.size()) != n || static_cast<int>(upper.size()) != n)
    throw DimensionError("variable arrays inconsistent");
  const int m = num_rows();
  if (static_cast<int>(row_names.size()) != m ||
      static_cast<int>(rows.size()) != m || static_cast<int>(senses.size()) != m)
    throw DimensionError("row arrays inconsistent");
  for (int i = 0; i < m; ++i)
    for (const auto& [j, v] : rows[i]) {
      (void)v;
      if (j < 0 || j >= n)
        throw DimensionError("row '" + row_names[i] + "' references variable " +
                             std::to_string(j));
    }
  for (int j = 0; j < n; ++j)
    if (lower[j] && upper[j] && *lower[j] > *upper[j])
      throw DimensionError("variable '" + var_names[j] + "' has empty bounds");
  std::set<std::string> seen(var_names.begin(), var_names.end());
  if (static_cast<int>(seen.size()) != n)
    throw DimensionError("variable names not unique");
  std::set<std::string> rseen(row_names.begin(), row_names.end());
  if (static_cast<int>(rseen.size()) != m)
    throw DimensionError("row names not unique");
}

namespace detail {

StandardLp standardize(const LpProblem& p) {
  p.validate();
  StandardLp s;
  s.maximize = (p.sense == LpSense::Max);
  const int n0 = p.num_vars();

  // Column map. Doubly bounded variables are shifted to their lower bound
  // and get a synthetic upper-bound row below.
  s.vmap.resize(n0);
  int col = 0;
  for (int j = 0; j < n0; ++j) {
    VarMap& vm = s.vmap[j];
    if (p.lower[j]) {
      vm.kind = VarMap::Shift;
      vm.offset = *p.lower[j];
      vm.col = col++;
    } else if (p.upper[j]) {
      vm.kind = VarMap::Negate;
      vm.offset = *p.upper[j];
      vm.col = col++;
    } else {
      vm.kind = VarMap::Split;
      vm.col = col++;
      vm.col2 = col++;
    }
  }
  const int n_struct = col;

  // Rows: stated rows first, then synthetic x_j <= ub_j rows.
  struct RawRow {
    std::vector<std::pair<int, Rat>> coeffs;  // original variable ids
    RowSense sense;
    Rat rhs;
  };
  std::vector<RawRow> raw;
  raw.reserve(p.num_rows());
  for (int i = 0; i < p.num_rows(); ++i)
    raw.push_back({p.rows[i], p.senses[i], p.rhs[i]});
  s.n_real_rows = p.num_rows();
  for (int j = 0; j < n0; ++j)
    if (p.lower[j] && p.upper[j])
      raw.push_back({{{j, Rat(1)}}, RowSense::LE, *p.upper[j]});

  s.m = static_cast<int>(raw.size());
  const int n_slack =
      static_cast<int>(std::count_if(raw.begin(), raw.end(), [](const RawRow& r) {
        return r.sense != RowSense::EQ;
      }));
  s.n = n_struct + n_slack;
  s.rows.resize(s.m);
  s.b.resize(s.m);
  s.row_sign.assign(s.m, 1);
  s.slack_col.assign(s.m, -1);
  s.needs_artificial.assign(s.m, 0);

  int next_slack = n_struct;
  for (int i = 0; i < s.m; ++i) {
    const RawRow& r = raw[i];
    // Substitute variables and accumulate the constant into the rhs.
    Rat rhs = r.rhs;
    std::vector<std::pair<int, Rat>> row;
    for (const auto& [j, a] : r.coeffs) {
      if (a == 0) continue;
      const VarMap& vm = s.vmap[j];
      switch (vm.kind) {
        case VarMap::Shift:
          row.emplace_back(vm.col, a);
          rhs -= a * vm.offset;
          break;
        case VarMap::Negate:
          row.emplace_back(vm.col, -a);
          rhs -= a * vm.offset;
          break;
        case VarMap::Split:
          row.emplace_back(vm.col, a);
          row.emplace_back(vm.col2, -a);
          break;
      }
    }
    int slack_sign = 0;
    if (r.sense == RowSense::LE) slack_sign = 1;
    if (r.sense == RowSense::GE) slack_sign = -1;
    int slack = -1;
    if (slack_sign != 0) {
      slack = next_slack++;
      row.emplace_back(slack, Rat(slack_sign));
      s.slack_col[i] = slack;
    }
    int sign = 1;
    if (rhs < 0) {
      sign = -1;
      rhs = -rhs;
      for (auto& [cidx, v] : row) {
        (void)cidx;
        v = -v;
      }
      slack_sign = -slack_sign;
    }
    s.row_sign[i] = sign;
    s.b[i] = rhs;
    // Merge duplicate columns (split vars can collide only across entries
    // of distinct original vars, but stated rows may repeat a variable).
    std::sort(row.begin(), row.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::pair<int, Rat>> merged;
    for (auto& e : row) {
      if (!merged.empty() && merged.back().first == e.first)
        merged.back().second += e.second;
      else
        merged.push_back(e);
    }
    merged.erase(std::remove_if(merged.begin(), merged.end(),
                                [](const auto& e) { return e.second == 0; }),
                 merged.end());
    s.rows[i] = std::move(merged);
    s.needs_artificial[i] = (slack_sign != 1);
  }

  // Phase-2 costs (internal minimization).
  s.c.assign(s.n, Rat(0));
  for (int j = 0; j < n0; ++j) {
    Rat cj = p.objective[j];
    if (s.maximize) cj = -cj;
    if (cj == 0) continue;
    const VarMap& vm = s.vmap[j];
    switch (vm.kind) {
      case VarMap::Shift:
        s.c[vm.col] += cj;
        s.c_const += cj * vm.offset;
        break;
      case VarMap::Negate:
        s.c[vm.col] -= cj;
        s.c_const += cj * vm.offset;
        break;
      case VarMap::Split:
        s.c[vm.col] += cj;
        s.c[vm.col2] -= cj;
        break;
    }
  }
  return s;
}

}  // namespace detail

LpSolution lp_solve(const LpProblem& problem, ArithMode mode) {
  detail::StandardLp std_lp = detail::standardize(problem);
  return mode == ArithMode::Exact ? detail::solve_exact(problem, std_lp)
                                  : detail::solve_float(problem, std_lp);
}

namespace {

const char* sense_str(RowSense s) {
  switch (s) {
    case RowSense::LE: return "<=";
    case RowSense::EQ: return "=";
    case RowSense::GE: return ">=";
  }
  return "?";
}

// Exact certificate checks. Residuals must vanish identically.
void check_exact(const LpProblem& p, const LpSolution& s, CertificateReport& rep) {
  const bool maximize = (p.sense == LpSense::Max);
  if (s.status == LpStatus::Optimal) {
    if (static_cast<int>(s.x.size()) != p.num_vars() ||
        static_cast<int>(s.y.size()) != p.num_rows())
      throw DimensionError("solution vectors do not match the problem");
    // Primal feasibility.
    std::vector<Rat> activity(p.num_rows(), Rat(0));
    for (int i = 0; i < p.num_rows(); ++i)
      for (const auto& [j, a] : p.rows[i]) activity[i] += a * s.x[j];
    for (int i = 0; i < p.num_rows(); ++i) {
      const Rat& act = activity[i];
      bool ok = (p.senses[i] == RowSense::LE && act <= p.rhs[i]) ||
                (p.senses[i] == RowSense::GE && act >= p.rhs[i]) ||
                (p.senses[i] == RowSense::EQ && act == p.rhs[i]);
      if (!ok) rep.violations.push_back("primal:" + p.row_names[i]);
    }
    for (int j = 0; j < p.num_vars(); ++j) {
      if (p.lower[j] && s.x[j] < *p.lower[j])
        rep.violations.push_back("lb:" + p.var_names[j]);
      if (p.upper[j] && s.x[j] > *p.upper[j])
        rep.violations.push_back("ub:" + p.var_names[j]);
    }
    // Dual feasibility (sign conditions) and reduced costs.
    for (int i = 0; i < p.num_rows(); ++i) {
      const Rat& yi = s.y[i];
      if (yi == 0) continue;
      bool ok = true;
      if (p.senses[i] == RowSense::GE) ok = maximize ? yi <= 0 : yi >= 0;
      if (p.senses[i] == RowSense::LE) ok = maximize ? yi >= 0 : yi <= 0;
      if (!ok) rep.violations.push_back("dual-sign:" + p.row_names[i]);
      // Complementary slackness.
      if (activity[i] != p.rhs[i] && p.senses[i] != RowSense::EQ)
        rep.violations.push_back("slackness:" + p.row_names[i]);
    }
    std::vector<Rat> r(p.num_vars());
    for (int j = 0; j < p.num_vars(); ++j) r[j] = p.objective[j];
    for (int i = 0; i < p.num_rows(); ++i)
      for (const auto& [j, a] : p.rows[i]) r[j] -= a * s.y[i];
    Rat dual_obj = 0;
    for (int i = 0; i < p.num_rows(); ++i) dual_obj += s.y[i] * p.rhs[i];
    for (int j = 0; j < p.num_vars(); ++j) {
      const Rat& rj = r[j];
      if (rj == 0) continue;
      const bool at_lb = p.lower[j] && s.x[j] == *p.lower[j];
      const bool at_ub = p.upper[j] && s.x[j] == *p.upper[j];
      const bool ok = maximize ? (rj > 0 ? at_ub : at_lb) : (rj > 0 ? at_lb : at_ub);
      if (!ok) {
        rep.violations.push_back("reduced-cost:" + p.var_names[j]);
        continue;
      }
      dual_obj += rj * s.x[j];  // x_j sits exactly at the active bound
    }
    Rat primal_obj = 0;
    for (int j = 0; j < p.num_vars(); ++j) primal_obj += p.objective[j] * s.x[j];
    rep.primal_objective = primal_obj;
    rep.dual_objective = dual_obj;
    if (primal_obj != s.objective)
      rep.violations.push_back("objective:stated");
    if (primal_obj != dual_obj) rep.violations.push_back("objective:duality-gap");
    return;
  }

  if (s.status == LpStatus::Infeasible) {
    if (static_cast<int>(s.farkas.size()) != p.num_rows())
      throw DimensionError("farkas vector does not match the problem");
    // Sign conditions: aggregated rows give y'Ax >= y'b for all feasible x.
    for (int i = 0; i < p.num_rows(); ++i) {
      const Rat& yi = s.farkas[i];
      if ((p.senses[i] == RowSense::LE && yi > 0) ||
          (p.senses[i] == RowSense::GE && yi < 0))
        rep.violations.push_back("farkas-sign:" + p.row_names[i]);
    }
    // sup over the bound box of y'Ax must fall strictly below y'b.
    std::vector<Rat> r(p.num_vars(), Rat(0));
    for (int i = 0; i < p.num_rows(); ++i)
      for (const auto& [j, a] : p.rows[i]) r[j] += a * s.farkas[i];
    Rat sup = 0;
    bool bounded = true;
    for (int j = 0; j < p.num_vars(); ++j) {
      if (r[j] > 0) {
        if (!p.upper[j]) { bounded = false; rep.violations.push_back("farkas-unbounded:" + p.var_names[j]); }
        else sup += r[j] * *p.upper[j];
      } else if (r[j] < 0) {
        if (!p.lower[j]) { bounded = false; rep.violations.push_back("farkas-unbounded:" + p.var_names[j]); }
        else sup += r[j] * *p.lower[j];
      }
    }
    Rat yb = 0;
    for (int i = 0; i < p.num_rows(); ++i) yb += s.farkas[i] * p.rhs[i];
    if (bounded && !(sup < yb)) rep.violations.push_back("farkas:not-separating");
    return;
  }

  // Unbounded: ray must be a feasible direction with improving objective.
  if (static_cast<int>(s.ray.size()) != p.num_vars())
    throw DimensionError("ray vector does not match the problem");
  for (int i = 0; i < p.num_rows(); ++i) {
    Rat act = 0;
    for (const auto& [j, a] : p.rows[i]) act += a * s.ray[j];
    bool ok = (p.senses[i] == RowSense::LE && act <= 0) ||
              (p.senses[i] == RowSense::GE && act >= 0) ||
              (p.senses[i] == RowSense::EQ && act == 0);
    if (!ok) rep.violations.push_back("ray:" + p.row_names[i]);
  }
  for (int j = 0; j < p.num_vars(); ++j) {
    if (p.lower[j] && s.ray[j] < 0)
      rep.violations.push_back("ray-lb:" + p.var_names[j]);
    if (p.upper[j] && s.ray[j] > 0)
      rep.violations.push_back("ray-ub:" + p.var_names[j]);
  }
  Rat cd = 0;
  for (int j = 0; j < p.num_vars(); ++j) cd += p.objective[j] * s.ray[j];
  const bool improving = maximize ? cd > 0 : cd < 0;
  if (!improving) rep.violations.push_back("ray:not-improving");
}

// Float certificate checks with residual tolerance.
void check_float(const LpProblem& p, const LpSolution& s, double tol,
                 CertificateReport& rep) {
  const bool maximize = (p.sense == LpSense::Max);
  auto rd = [](const Rat& v) { return v.get_d(); };
  auto track = [&](double resid, const std::string& name) {
    rep.max_residual = std::max(rep.max_residual, resid);
    if (resid > tol) rep.violations.push_back(name);
  };
  if (s.status == LpStatus::Optimal) {
    if (static_cast<int>(s.xf.size()) != p.num_vars() ||
        static_cast<int>(s.yf.size()) != p.num_rows())
      throw DimensionError("solution vectors do not match the problem");
    std::vector<double> activity(p.num_rows(), 0.0);
    for (int i = 0; i < p.num_rows(); ++i)
      for (const auto& [j, a] : p.rows[i]) activity[i] += rd(a) * s.xf[j];
    for (int i = 0; i < p.num_rows(); ++i) {
      double viol = 0;
      if (p.senses[i] == RowSense::LE) viol = activity[i] - rd(p.rhs[i]);
      if (p.senses[i] == RowSense::GE) viol = rd(p.rhs[i]) - activity[i];
      if (p.senses[i] == RowSense::EQ) viol = std::abs(activity[i] - rd(p.rhs[i]));
      track(std::max(0.0, viol), "primal:" + p.row_names[i]);
    }
    for (int j = 0; j < p.num_vars(); ++j) {
      if (p.lower[j]) track(std::max(0.0, rd(*p.lower[j]) - s.xf[j]), "lb:" + p.var_names[j]);
      if (p.upper[j]) track(std::max(0.0, s.xf[j] - rd(*p.upper[j])), "ub:" + p.var_names[j]);
    }
    std::vector<double> r(p.num_vars());
    for (int j = 0; j < p.num_vars(); ++j) r[j] = rd(p.objective[j]);
    for (int i = 0; i < p.num_rows(); ++i)
      for (const auto& [j, a] : p.rows[i]) r[j] -= rd(a) * s.yf[i];
    double dual_obj = 0;
    for (int i = 0; i < p.num_rows(); ++i) {
      double yi = s.yf[i];
      double sign_viol = 0;
      if (p.senses[i] == RowSense::GE) sign_viol = maximize ? yi : -yi;
      if (p.senses[i] == RowSense::LE) sign_viol = maximize ? -yi : yi;
      track(std::max(0.0, sign_viol), "dual-sign:" + p.row_names[i]);
      dual_obj += yi * rd(p.rhs[i]);
    }
    double primal_obj = 0;
    for (int j = 0; j < p.num_vars(); ++j) {
      primal_obj += rd(p.objective[j]) * s.xf[j];
      if (std::abs(r[j]) <= tol) continue;
      dual_obj += r[j] * s.xf[j];
      const bool at_lb = p.lower[j] && std::abs(s.xf[j] - rd(*p.lower[j])) <= tol;
      const bool at_ub = p.upper[j] && std::abs(s.xf[j] - rd(*p.upper[j])) <= tol;
      bool ok = maximize ? (r[j] > 0 ? at_ub : at_lb) : (r[j] > 0 ? at_lb : at_ub);
      if (!ok) rep.violations.push_back("reduced-cost:" + p.var_names[j]);
    }
    track(std::abs(primal_obj - s.objectivef), "objective:stated");
    track(std::abs(primal_obj - dual_obj), "objective:duality-gap");
    return;
  }
  if (s.status == LpStatus::Infeasible) {
    std::vector<double> r(p.num_vars(), 0.0);
    for (int i = 0; i < p.num_rows(); ++i) {
      double yi = s.farkasf[i];
      if (p.senses[i] == RowSense::LE) track(std::max(0.0, yi), "farkas-sign:" + p.row_names[i]);
      if (p.senses[i] == RowSense::GE) track(std::max(0.0, -yi), "farkas-sign:" + p.row_names[i]);
      for (const auto& [j, a] : p.rows[i]) r[j] += rd(a) * yi;
    }
    double sup = 0, yb = 0;
    for (int j = 0; j < p.num_vars(); ++j) {
      if (r[j] > tol) {
        if (!p.upper[j]) rep.violations.push_back("farkas-unbounded:" + p.var_names[j]);
        else sup += r[j] * rd(*p.upper[j]);
      } else if (r[j] < -tol) {
        if (!p.lower[j]) rep.violations.push_back("farkas-unbounded:" + p.var_names[j]);
        else sup += r[j] * rd(*p.lower[j]);
      }
    }
    for (int i = 0; i < p.num_rows(); ++i) yb += s.farkasf[i] * rd(p.rhs[i]);
    if (!(sup < yb - tol)) rep.violations.push_back("farkas:not-separating");
    return;
  }
  for (int i = 0; i < p.num_rows(); ++i) {
    double act = 0;
    for (const auto& [j, a] : p.rows[i]) act += rd(a) * s.rayf[j];
    double viol = 0;
    if (p.senses[i] == RowSense::LE) viol = act;
    if (p.senses[i] == RowSense::GE) viol = -act;
    if (p.senses[i] == RowSense::EQ) viol = std::abs(act);
    track(std::max(0.0, viol), "ray:" + p.row_names[i]);
  }
  double cd = 0;
  for (int j = 0; j < p.num_vars(); ++j) cd += rd(p.objective[j]) * s.rayf[j];
  const bool improving = maximize ? cd > tol : cd < -tol;
  if (!improving) rep.violations.push_back("ray:not-improving");
}

}  // namespace

CertificateReport check_certificate(const LpProblem& problem,
                                    const LpSolution& solution, double tol) {
  problem.validate();
  CertificateReport rep;
  if (solution.mode == ArithMode::Exact)
    check_exact(problem, solution, rep);
  else
    check_float(problem, solution, tol, rep);
  rep.ok = rep.violations.empty();
  if (!rep.ok) {
    std::string msg = "violations:";
    for (const auto& v : rep.violations) msg += " " + v;
    throw MismatchError(msg);
  }
  return rep;
}

std::string dump_lp(const LpProblem& p) {
  std::ostringstream os;
  os << (p.sense == LpSense::Min ? "min" : "max");
  for (int j = 0; j < p.num_vars(); ++j)
    if (p.objective[j] != 0)
      os << " " << rat_to_string(p.objective[j]) << "*" << p.var_names[j];
  os << "\n";
  for (int i = 0; i < p.num_rows(); ++i) {
    os << p.row_names[i] << ":";
    for (const auto& [j, a] : p.rows[i])
      os << " " << rat_to_string(a) << "*" << p.var_names[j];
    os << " " << sense_str(p.senses[i]) << " " << rat_to_string(p.rhs[i]) << "\n";
  }
  for (int j = 0; j < p.num_vars(); ++j) {
    if (!p.lower[j] && !p.upper[j]) continue;
    os << "bound: ";
    if (p.lower[j]) os << rat_to_string(*p.lower[j]) << " <= ";
    os << p.var_names[j];
    if (p.upper[j]) os << " <= " << rat_to_string(*p.upper[j]);
    os << "\n";
  }
  return os.str();
}

}  // namespace viab
