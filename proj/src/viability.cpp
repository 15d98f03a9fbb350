#include "viab/viability.hpp"

#include <algorithm>
#include <tuple>

#include "viab/errors.hpp"

namespace viab {

namespace {

// Generating rays, required by every condition quantified over u in the cone.
const std::vector<std::vector<Rat>>& rays_of(const Cone& cone) {
  if (!cone.has_rays())
    throw UnsupportedCone(
        "polyhedral cone without generating rays; supply 'rays' in the model");
  return cone.rays;
}

Rat dot_prices(const TreeModel& m, const std::vector<Rat>& u, int node) {
  Rat acc = 0;
  for (int a = 0; a < m.num_assets(); ++a) acc += u[a] * m.price(node, a);
  return acc;
}

// Martingale/supermartingale row of the state-price LP for one (node, ray):
// sum over leaves under nu of q_leaf * u.(S(child-of-nu on path) - S(nu)).
std::vector<std::pair<int, Rat>> state_price_row(const TreeModel& m,
                                                 const std::vector<Rat>& u,
                                                 int nu,
                                                 const std::vector<int>& qvar) {
  std::vector<std::pair<int, Rat>> row;
  const Rat here = dot_prices(m, u, nu);
  for (int c : m.children(nu)) {
    const Rat delta = dot_prices(m, u, c) - here;
    if (delta == 0) continue;
    for (int leaf : m.leaves_under(c))
      row.emplace_back(qvar[m.leaf_ordinal(leaf)], delta);
  }
  return row;
}

}  // namespace

const std::vector<Rat>& PricingSystem::density(int k, int theta) const {
  auto it = densities.find({k, theta});
  if (it == densities.end())
    throw DimensionError("pricing system has no (k=" + std::to_string(k) +
                         ", theta=" + std::to_string(theta) + ") component");
  return it->second;
}

// --- verify_pricing_system ---------------------------------------------------

PsReport verify_pricing_system(const TreeModel& model,
                               const LocalizingSequence& seq,
                               const PricingSystem& z_in, const Cone& cone,
                               const Rat& tol_in) {
  // Caller-built systems may carry unreduced fractions.
  PricingSystem z = z_in;
  for (auto& [key, den] : z.densities)
    for (Rat& v : den) v.canonicalize();
  Rat tol = tol_in;
  tol.canonicalize();
  PsReport rep;
  const auto& rays = rays_of(cone);
  const int L = model.num_leaves();
  const int T = model.num_periods();

  if (z.index_set.empty()) throw DimensionError("empty pricing system");
  std::vector<int> gammas;
  for (auto [k, theta] : z.index_set) {
    if (k < 1 || k > seq.size())
      throw DimensionError("pricing system k out of range");
    if (theta < 0 || theta > T)
      throw DimensionError("pricing system theta out of range");
    gammas.push_back(theta);
    if (static_cast<int>(z.density(k, theta).size()) != L)
      throw DimensionError("density must hold one value per atom");
  }
  std::sort(gammas.begin(), gammas.end());
  gammas.erase(std::unique(gammas.begin(), gammas.end()), gammas.end());
  if (gammas.back() != T)
    throw DimensionError("Gamma must contain the horizon T");

  // (i) nonnegativity; measurability w.r.t. F_{T ^ T_k}; normalization.
  Rat total = 0;
  for (auto [k, theta] : z.index_set) {
    const auto& den = z.density(k, theta);
    const StoppingTime& tk = seq.at(k - 1);
    for (int i = 0; i < L; ++i) {
      if (den[i] < -tol)
        rep.violations.push_back({"nonneg", -1, theta,
                                  model.node(model.leaves()[i]).id, den[i]});
      total += model.atom_prob(model.leaves()[i]) * den[i];
    }
    for (int s : tk.stop_nodes()) {
      const auto& cell = model.leaves_under(s);
      for (std::size_t j = 1; j < cell.size(); ++j) {
        Rat diff = den[model.leaf_ordinal(cell[j])] -
                   den[model.leaf_ordinal(cell[0])];
        if (diff < 0) diff = -diff;
        if (diff > tol)
          rep.violations.push_back(
              {"measurable", -1, theta, model.node(cell[j]).id, diff});
      }
    }
  }
  {
    Rat dev = total - 1;
    if (dev < 0) dev = -dev;
    if (dev > tol) rep.violations.push_back({"normalization", -1, -1, "", dev});
  }

  // Stopped trees per localizing index in use.
  std::map<int, TreeModel> stopped;
  for (auto [k, theta] : z.index_set) {
    (void)theta;
    if (!stopped.count(k)) stopped.emplace(k, stopped_prices(model, seq.at(k - 1)));
  }

  // One-step conditions. For a node nu at time t-1 and ray u:
  //   window (pre-exercise): sum over (k, theta >= t) of
  //     E[Z^{k,theta} u.(S^k_t - S^k_{t-1}) | nu] <= tol,
  //   post (per theta < t):  the per-theta sum over k of the same term.
  for (std::size_t ri = 0; ri < rays.size(); ++ri) {
    const auto& u = rays[ri];
    for (int nu = 0; nu < model.num_nodes(); ++nu) {
      if (model.is_leaf(nu)) continue;
      const int t = model.time(nu) + 1;
      Rat window = 0;
      std::map<int, Rat> post;  // theta -> accumulated term
      for (auto [k, theta] : z.index_set) {
        const TreeModel& sk = stopped.at(k);
        const auto& den = z.density(k, theta);
        Rat term = 0;
        const Rat here = dot_prices(sk, u, nu);
        for (int c : sk.children(nu)) {
          const Rat delta = dot_prices(sk, u, c) - here;
          if (delta == 0) continue;
          Rat mass = 0;
          for (int leaf : sk.leaves_under(c))
            mass += model.atom_prob(leaf) * den[model.leaf_ordinal(leaf)];
          term += delta * mass;
        }
        term /= model.atom_prob(nu);  // conditional on reaching nu
        if (theta >= t)
          window += term;
        else
          post[theta] += term;
      }
      if (window > tol)
        rep.violations.push_back(
            {"window", static_cast<int>(ri), t, model.node(nu).id, window});
      for (const auto& [theta, term] : post)
        if (term > tol)
          rep.violations.push_back(
              {"post", static_cast<int>(ri), theta, model.node(nu).id, term});
    }
  }

  rep.ok = rep.violations.empty();
  return rep;
}

// --- deflated_value ----------------------------------------------------------

Rat deflated_value(const TreeModel& model, const LocalizingSequence& seq,
                   const PricingSystem& z_in, const GeneralizedStrategy& h) {
  PricingSystem z = z_in;
  for (auto& [key, den] : z.densities)
    for (Rat& v : den) v.canonicalize();
  if (static_cast<int>(h.pre.pos.size()) != model.num_nodes())
    throw DimensionError("strategy not indexed by the model's nodes");
  std::map<int, TreeModel> stopped;
  Rat acc = 0;
  for (auto [k, theta] : z.index_set) {
    if (!stopped.count(k)) stopped.emplace(k, stopped_prices(model, seq.at(k - 1)));
    const TreeModel& sk = stopped.at(k);
    WealthProcess w = wealth(sk, h, theta, Rat(0));
    const auto& den = z.density(k, theta);
    for (int i = 0; i < model.num_leaves(); ++i) {
      const int leaf = model.leaves()[i];
      acc += model.atom_prob(leaf) * den[i] * w.value[leaf];
    }
  }
  return acc;
}

// --- check_na ----------------------------------------------------------------

namespace {

struct NaLpResult {
  LpStatus status;
  Rat epsilon = 0;
  std::vector<Rat> q;  // per leaf
};

NaLpResult state_price_lp(const TreeModel& m, const Cone& cone) {
  const auto& rays = rays_of(cone);
  LpProblem p;
  p.sense = LpSense::Max;
  std::vector<int> qvar(m.num_leaves());
  for (int i = 0; i < m.num_leaves(); ++i)
    qvar[i] = p.add_var("q[" + m.node(m.leaves()[i]).id + "]");
  const int eps = p.add_var("eps", Rat(1));

  std::vector<std::pair<int, Rat>> norm;
  for (int v : qvar) norm.emplace_back(v, Rat(1));
  p.add_row("norm", std::move(norm), RowSense::EQ, Rat(1));
  for (int nu = 0; nu < m.num_nodes(); ++nu) {
    if (m.is_leaf(nu)) continue;
    for (std::size_t ri = 0; ri < rays.size(); ++ri) {
      auto row = state_price_row(m, rays[ri], nu, qvar);
      if (row.empty()) continue;
      p.add_row("mart[" + m.node(nu).id + "][" + std::to_string(ri) + "]",
                std::move(row), RowSense::LE, Rat(0));
    }
  }
  for (int i = 0; i < m.num_leaves(); ++i)
    p.add_row("floor[" + m.node(m.leaves()[i]).id + "]",
              {{qvar[i], Rat(1)}, {eps, Rat(-1)}}, RowSense::GE, Rat(0));

  LpSolution s = lp_solve(p, ArithMode::Exact);
  NaLpResult res{s.status, 0, {}};
  if (s.status == LpStatus::Optimal) {
    check_certificate(p, s, 0.0);
    res.epsilon = s.objective;
    for (int i = 0; i < m.num_leaves(); ++i) res.q.push_back(s.x[qvar[i]]);
  }
  return res;
}

std::optional<Strategy> arbitrage_lp(const TreeModel& m, const Cone& cone) {
  LpProblem p;
  p.sense = LpSense::Max;
  // Position variables boxed to [-1,1] (the box keeps the LP bounded and a
  // scaled copy of any arbitrage fits inside); no-short coordinates start at
  // zero, polyhedral membership is enforced by per-node rows.
  std::vector<std::vector<int>> hvar(m.num_nodes());
  for (int v = 0; v < m.num_nodes(); ++v) {
    if (m.is_leaf(v)) continue;
    hvar[v].resize(m.num_assets());
    for (int a = 0; a < m.num_assets(); ++a) {
      Rat lb(-1);
      if (cone.kind == ConeKind::NoShort && a < cone.no_short_n) lb = 0;
      hvar[v][a] = p.add_var(
          "h[" + m.node(v).id + "][" + std::to_string(a) + "]", Rat(0), lb,
          Rat(1));
    }
    if (cone.kind == ConeKind::Polyhedral) {
      for (std::size_t r = 0; r < cone.rows.size(); ++r) {
        std::vector<std::pair<int, Rat>> row;
        for (int a = 0; a < m.num_assets(); ++a)
          if (cone.rows[r][a] != 0) row.emplace_back(hvar[v][a], cone.rows[r][a]);
        if (!row.empty())
          p.add_row("cone[" + m.node(v).id + "][" + std::to_string(r) + "]",
                    std::move(row), RowSense::GE, Rat(0));
      }
    }
  }
  // Terminal wealth per leaf as a linear expression in the positions.
  std::vector<Rat> obj_coeff(p.num_vars(), Rat(0));
  for (int i = 0; i < m.num_leaves(); ++i) {
    const int leaf = m.leaves()[i];
    std::vector<std::pair<int, Rat>> expr;
    for (int v = leaf; m.parent(v) >= 0; v = m.parent(v)) {
      const int par = m.parent(v);
      for (int a = 0; a < m.num_assets(); ++a) {
        const Rat delta = m.price(v, a) - m.price(par, a);
        if (delta != 0) expr.emplace_back(hvar[par][a], delta);
      }
    }
    for (const auto& [var, coef] : expr) obj_coeff[var] += coef;
    p.add_row("pos[" + m.node(leaf).id + "]", std::move(expr), RowSense::GE, Rat(0));
  }
  for (int j = 0; j < p.num_vars(); ++j) p.objective[j] = obj_coeff[j];

  LpSolution s = lp_solve(p, ArithMode::Exact);
  if (s.status != LpStatus::Optimal)
    throw Error("arbitrage LP must be solvable (H=0 feasible, capped)");
  check_certificate(p, s, 0.0);
  if (s.objective == 0) return std::nullopt;

  Strategy h = Strategy::zeros(m);
  Rat sup_norm = 0;
  for (int v = 0; v < m.num_nodes(); ++v) {
    if (m.is_leaf(v)) continue;
    h.pos[v].assign(m.num_assets(), Rat(0));
    for (int a = 0; a < m.num_assets(); ++a) {
      h.pos[v][a] = s.x[hvar[v][a]];
      Rat mag = h.pos[v][a] < 0 ? Rat(-h.pos[v][a]) : h.pos[v][a];
      if (mag > sup_norm) sup_norm = mag;
    }
  }
  if (sup_norm > 0)
    for (auto& pos : h.pos)
      for (Rat& x : pos) x /= sup_norm;
  return h;
}

}  // namespace

Verdict check_na(const TreeModel& model, const Cone& cone) {
  Verdict v;
  v.condition = "NA";
  v.experimental = (cone.kind == ConeKind::Polyhedral);
  NaLpResult lp = state_price_lp(model, cone);
  if (lp.status == LpStatus::Optimal && lp.epsilon > 0) {
    v.holds = true;
    v.state_prices = lp.q;
    return v;
  }
  v.holds = false;
  auto witness = arbitrage_lp(model, cone);
  if (!witness) throw Error("state-price LP and arbitrage LP disagree");
  // Re-verify the reconstruction: terminal wealth >= 0 everywhere, positive
  // somewhere, positions in the cone.
  WealthProcess w = wealth_plain(model, *witness, Rat(0));
  bool some_positive = false;
  for (int leaf : model.leaves()) {
    if (w.value[leaf] < 0) throw Error("witness wealth went negative");
    if (w.value[leaf] > 0) some_positive = true;
  }
  for (const auto& pos : witness->pos)
    if (!pos.empty() && !cone.contains(pos)) throw Error("witness left the cone");
  if (!some_positive) throw Error("witness earns nothing");
  v.witness = std::move(*witness);
  return v;
}

Verdict check_local_na(const TreeModel& model, const LocalizingSequence& seq,
                       const Cone& cone) {
  Verdict v;
  v.condition = "local-NA";
  v.experimental = (cone.kind == ConeKind::Polyhedral);
  v.note =
      "on each finite stopped tree NFLVR coincides with NA and NUPBR holds "
      "automatically (bounded wealth set)";
  v.holds = true;
  std::vector<std::vector<Rat>> per_k_q;
  for (int k = 1; k <= seq.size(); ++k) {
    TreeModel sk = stopped_prices(model, seq.at(k - 1));
    NaLpResult lp = state_price_lp(sk, cone);
    PerKVerdict pk;
    pk.k = k;
    pk.holds = (lp.status == LpStatus::Optimal && lp.epsilon > 0);
    if (lp.status == LpStatus::Optimal) pk.epsilon = lp.epsilon;
    v.per_k.push_back(pk);
    if (pk.holds) {
      per_k_q.push_back(lp.q);
      continue;
    }
    v.holds = false;
    if (!v.witness) {
      // Witness on the stopped market; positions below the stop nodes act on
      // frozen prices, zero them for a clean lift to the original market.
      auto witness = arbitrage_lp(sk, cone);
      if (!witness) throw Error("stopped-market LPs disagree");
      for (int s : seq.at(k - 1).stop_nodes())
        for (int c : model.children(s))
          for (int leaf : model.leaves_under(c))
            for (int x = leaf; x != s; x = model.parent(x))
              if (!model.is_leaf(x)) witness->pos[x].clear();
      v.witness = std::move(*witness);
    }
  }
  if (v.holds) {
    // Assemble a D-pricing-system certificate: Z^k = (1/K) q^k / P projected
    // onto the F_{T_k} cells; each summand keeps its one-step inequalities.
    PricingSystem ps;
    const int K = seq.size();
    for (int k = 1; k <= K; ++k) {
      std::vector<Rat> den(model.num_leaves());
      for (int i = 0; i < model.num_leaves(); ++i)
        den[i] = per_k_q[k - 1][i] / (model.atom_prob(model.leaves()[i]) * K);
      std::vector<Rat> projected = den;
      for (int s : seq.at(k - 1).stop_nodes()) {
        Rat mass = 0;
        for (int leaf : model.leaves_under(s))
          mass += model.atom_prob(leaf) * den[model.leaf_ordinal(leaf)];
        const Rat cell_val = mass / model.atom_prob(s);
        for (int leaf : model.leaves_under(s))
          projected[model.leaf_ordinal(leaf)] = cell_val;
      }
      ps.index_set.emplace_back(k, model.num_periods());
      ps.densities[{k, model.num_periods()}] = std::move(projected);
    }
    v.certificate = std::move(ps);
  }
  return v;
}

// --- pricing polytope and find_pricing_system --------------------------------

PricingPolytope build_pricing_polytope(const TreeModel& model,
                                       const LocalizingSequence& seq,
                                       const std::vector<int>& D,
                                       const std::vector<int>& Gamma,
                                       const Cone& cone) {
  const auto& rays = rays_of(cone);
  const int T = model.num_periods();
  if (Gamma.empty() || !std::count(Gamma.begin(), Gamma.end(), T))
    throw ParamError("Gamma must contain the horizon T");
  for (int k : D)
    if (k < 1 || k > seq.size()) throw ParamError("D index out of range");

  std::map<int, TreeModel> stopped;
  for (int k : D)
    if (!stopped.count(k)) stopped.emplace(k, stopped_prices(model, seq.at(k - 1)));

  PricingPolytope poly;
  LpProblem& p = poly.lp;
  p.sense = LpSense::Max;
  // One variable per (k, theta, measurability cell); a cell is the subtree
  // below a stop node of T_k.
  for (int k : D) {
    const StoppingTime& tk = seq.at(k - 1);
    for (int theta : Gamma)
      for (int s : tk.stop_nodes())
        poly.vars[{k, theta, s}] =
            p.add_var("Z[" + std::to_string(k) + "][" + std::to_string(theta) +
                          "][" + model.node(s).id + "]",
                      Rat(0), Rat(0));
  }
  // Normalization: sum of E[Z^{k,theta}] over D x Gamma equals 1.
  {
    std::vector<std::pair<int, Rat>> row;
    for (const auto& [key, var] : poly.vars)
      row.emplace_back(var, model.atom_prob(std::get<2>(key)));
    p.add_row("norm", std::move(row), RowSense::EQ, Rat(1));
  }
  // Window and post rows per (ray, node): discrete one-step forms of the
  // pre- and post-exercise supermartingale conditions for deflated stopped
  // prices.
  for (std::size_t ri = 0; ri < rays.size(); ++ri) {
    const auto& u = rays[ri];
    for (int nu = 0; nu < model.num_nodes(); ++nu) {
      if (model.is_leaf(nu)) continue;
      const int t = model.time(nu) + 1;
      std::map<int, Rat> window;               // var -> coeff
      std::map<int, std::map<int, Rat>> post;  // theta -> var -> coeff
      for (int k : D) {
        const TreeModel& sk = stopped.at(k);
        const StoppingTime& tk = seq.at(k - 1);
        const Rat here = dot_prices(sk, u, nu);
        for (int c : sk.children(nu)) {
          const Rat delta = dot_prices(sk, u, c) - here;
          if (delta == 0) continue;
          for (int leaf : sk.leaves_under(c)) {
            const int cell = tk.stop_node_of_leaf(leaf);
            const Rat w = model.atom_prob(leaf) * delta;
            for (int theta : Gamma) {
              const int var = poly.vars[{k, theta, cell}];
              if (theta >= t)
                window[var] += w;
              else
                post[theta][var] += w;
            }
          }
        }
      }
      auto emit = [&](const std::map<int, Rat>& coeffs, const std::string& name) {
        std::vector<std::pair<int, Rat>> row;
        for (const auto& [var, c] : coeffs)
          if (c != 0) row.emplace_back(var, c);
        if (!row.empty()) p.add_row(name, std::move(row), RowSense::LE, Rat(0));
      };
      emit(window, "win[" + model.node(nu).id + "][" + std::to_string(ri) + "]");
      for (const auto& [theta, coeffs] : post)
        emit(coeffs, "post[" + std::to_string(theta) + "][" +
                         model.node(nu).id + "][" + std::to_string(ri) + "]");
    }
  }
  return poly;
}

PricingSystem expand_cell_solution(const TreeModel& model,
                                   const LocalizingSequence& seq,
                                   const std::vector<int>& D,
                                   const std::vector<int>& Gamma,
                                   const PricingPolytope& poly,
                                   const std::vector<Rat>& x) {
  PricingSystem ps;
  for (int k : D) {
    const StoppingTime& tk = seq.at(k - 1);
    for (int theta : Gamma) {
      std::vector<Rat> den(model.num_leaves(), Rat(0));
      for (int i = 0; i < model.num_leaves(); ++i) {
        const int cell = tk.stop_node_of_leaf(model.leaves()[i]);
        den[i] = x[poly.vars.at({k, theta, cell})];
      }
      ps.index_set.emplace_back(k, theta);
      ps.densities[{k, theta}] = std::move(den);
    }
  }
  return ps;
}

FindSystemResult find_pricing_system(const TreeModel& model,
                                     const LocalizingSequence& seq,
                                     const std::vector<int>& D,
                                     const std::vector<int>& Gamma,
                                     const std::string& atom_leaf_id,
                                     std::pair<int, int> target,
                                     const Cone& cone) {
  if (!std::count(D.begin(), D.end(), target.first) ||
      !std::count(Gamma.begin(), Gamma.end(), target.second))
    throw ParamError("target pair must lie in D x Gamma");
  const int atom = model.index_of(atom_leaf_id);
  if (!model.is_leaf(atom)) throw ParamError("atom must be a leaf");

  PricingPolytope poly = build_pricing_polytope(model, seq, D, Gamma, cone);
  // Objective: E[Z^{target} 1_atom] = P(atom) * Z at the atom's cell.
  {
    const StoppingTime& tk = seq.at(target.first - 1);
    const int cell = tk.stop_node_of_leaf(atom);
    poly.lp.objective[poly.vars.at({target.first, target.second, cell})] =
        model.atom_prob(atom);
  }

  LpSolution s = lp_solve(poly.lp, ArithMode::Exact);
  FindSystemResult res;
  res.status = s.status;
  if (s.status != LpStatus::Optimal) return res;
  check_certificate(poly.lp, s, 0.0);
  res.objective = s.objective;
  res.system = expand_cell_solution(model, seq, D, Gamma, poly, s.x);
  return res;
}

}  // namespace viab
