// Acceptance suite: each criterion prints one pass/fail line; the process
// exits with the number of failed criteria. Expected values come from
// independent oracles (replication solves, Snell backward induction,
// enumeration) computed before the solver runs.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "viab/errors.hpp"
#include "viab/generators.hpp"
#include "viab/superhedge.hpp"
#include "viab/viability.hpp"

using namespace viab;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void criterion(int number, const std::string& label, double budget_seconds,
               const std::function<bool(std::string&)>& body) {
  std::string detail;
  const auto start = Clock::now();
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  const double secs =
      std::chrono::duration<double>(Clock::now() - start).count();
  if (secs > budget_seconds) {
    ok = false;
    detail += (detail.empty() ? "" : "; ") + std::string("over time budget");
  }
  std::printf("[%s] criterion %2d: %s (%.2fs)%s%s\n", ok ? "PASS" : "FAIL",
              number, label.c_str(), secs, detail.empty() ? "" : " -- ",
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

Payoff call_payoff(const TreeModel& m, const Rat& strike, int maturity) {
  Payoff g;
  g.kind = PayoffKind::European;
  g.maturity = maturity;
  for (int v : m.nodes_at_time(maturity)) {
    Rat iv = m.price(v, 0) - strike;
    g.values[v] = iv > 0 ? iv : Rat(0);
  }
  return g;
}

Payoff put_payoff_american(const TreeModel& m, const Rat& strike) {
  Payoff g;
  g.kind = PayoffKind::American;
  for (int v = 0; v < m.num_nodes(); ++v) {
    Rat iv = strike - m.price(v, 0);
    g.values[v] = iv > 0 ? iv : Rat(0);
  }
  return g;
}

// Snell backward induction under the one-step martingale weights of a
// binary tree (d = 1): the independent oracle for criterion 2.
Rat snell_value(const TreeModel& m, const Payoff& g, int node) {
  if (m.is_leaf(node)) return g.at(node);
  const auto& ch = m.children(node);
  if (ch.size() != 2) throw Error("snell oracle expects a binary tree");
  const Rat su = m.price(ch[0], 0), sd = m.price(ch[1], 0);
  if (su == sd) throw Error("snell oracle expects distinct branch prices");
  const Rat q = (m.price(node, 0) - sd) / (su - sd);
  Rat cont = q * snell_value(m, g, ch[0]) + (1 - q) * snell_value(m, g, ch[1]);
  const Rat ex = g.at(node);
  return ex > cont ? ex : cont;
}

TreeModel downward_drift() {
  std::vector<NodeRecord> nodes(3);
  nodes[0] = {"r", std::nullopt, 0, Rat(1), {Rat(1)}, ""};
  nodes[1] = {"u", std::string("r"), 1, Rat(1, 2), {Rat(9, 10)}, ""};
  nodes[2] = {"d", std::string("r"), 1, Rat(1, 2), {Rat(4, 5)}, ""};
  return TreeModel(1, 1, std::move(nodes));
}

TreeModel drift_after_maturity() {
  std::vector<NodeRecord> nodes;
  nodes.push_back({"r", std::nullopt, 0, Rat(1), {Rat(1)}, ""});
  nodes.push_back({"u", std::string("r"), 1, Rat(1, 2), {Rat(2)}, ""});
  nodes.push_back({"u2", std::string("u"), 2, Rat(1), {Rat(3)}, ""});
  nodes.push_back({"d", std::string("r"), 1, Rat(1, 2), {Rat(1, 2)}, ""});
  nodes.push_back({"d2", std::string("d"), 2, Rat(1), {Rat(1)}, ""});
  return TreeModel(1, 2, std::move(nodes));
}

Payoff rekey(const Payoff& g, const TreeModel& from, const TreeModel& to) {
  Payoff out = g;
  out.values.clear();
  for (const auto& [idx, v] : g.values)
    out.values[to.index_of(from.node(idx).id)] = v;
  return out;
}

bool c1_golden_european(std::string& detail) {
  TreeModel m = generate_binomial(Rat(1), Rat(2), Rat(1, 2), Rat(1, 2), 1);
  // Oracle first: the 2x2 replication solve z + H = 1, z - H/2 = 0 gives
  // H = 2/3, z = 1/3, dual atom weights (1/3, 2/3).
  HedgeQuery q;
  q.payoff = call_payoff(m, Rat(1), 1);
  q.x = 0;
  q.cone = Cone::unconstrained(1);
  PriceReport rep = price_european(m, q);
  if (rep.price != Rat(1, 3)) { detail = "price"; return false; }
  if (rep.strategy.pre.pos[m.root()][0] != Rat(2, 3)) { detail = "hedge"; return false; }
  if (!rep.has_gap || rep.gap != 0) { detail = "gap"; return false; }
  if (!rep.system) { detail = "no dual"; return false; }
  const auto& den = rep.system->density(1, 1);
  if (den[0] * m.atom_prob(m.leaves()[0]) != Rat(1, 3) ||
      den[1] * m.atom_prob(m.leaves()[1]) != Rat(2, 3)) {
    detail = "dual weights";
    return false;
  }
  HedgeQuery qf = q;
  qf.mode = ArithMode::Float;
  PriceReport repf = price_european(m, qf);
  if (std::abs(repf.price_f - 1.0 / 3.0) > 1e-9) { detail = "float price"; return false; }
  if (std::abs(repf.gap_f) > 1e-9) { detail = "float gap"; return false; }
  return true;
}

bool c2_golden_american(std::string& detail) {
  TreeModel m = generate_binomial(Rat(4), Rat(2), Rat(1, 2), Rat(1, 2), 2);
  Payoff g = put_payoff_american(m, Rat(6));
  // Snell oracle with q = 1/3 at every node, computed first.
  const Rat oracle = snell_value(m, g, m.root());
  if (oracle != Rat(28, 9)) { detail = "oracle detached from 28/9"; return false; }
  HedgeQuery q;
  q.payoff = g;
  q.x = 0;
  q.cone = Cone::unconstrained(1);
  PriceReport rep = price_american(m, q);
  if (rep.price != Rat(28, 9)) { detail = "price"; return false; }
  // Convex-payoff collapse: equal to the European price of the put on S_T.
  Payoff eur;
  eur.kind = PayoffKind::European;
  eur.maturity = 2;
  for (int v : m.nodes_at_time(2)) eur.values[v] = g.at(v);
  HedgeQuery qe;
  qe.payoff = eur;
  qe.cone = Cone::unconstrained(1);
  if (price_european(m, qe).price != Rat(28, 9)) { detail = "collapse"; return false; }
  return true;
}

bool c3_strong_duality(std::string& detail) {
  std::mt19937_64 rng(90210);
  int done = 0;
  while (done < 100) {
    RandomTreeOptions opt;
    opt.max_periods = 5;
    opt.max_branches = 3;
    opt.num_assets = 1 + static_cast<int>(rng() % 2);
    opt.max_leaves = (done % 5 == 4) ? 36 : 16;
    const bool no_short = (done % 2 == 1);
    opt.supermartingale_coords = no_short ? 1 : 0;
    TreeModel m = random_viable_tree(rng, opt);
    Cone cone = no_short ? Cone::no_short(1, opt.num_assets)
                         : Cone::unconstrained(opt.num_assets);
    HedgeQuery q;
    q.cone = cone;
    q.x = (done % 4 < 2) ? Rat(0) : Rat(1);
    PriceReport rep;
    if (done % 3 == 0) {
      q.payoff = random_american_payoff(rng, m, 6);
      rep = price_american(m, q);
    } else if (done % 3 == 1) {
      q.payoff = random_european_payoff(rng, m, m.num_periods(), 6);
      rep = price_european(m, q);
    } else {
      std::uniform_int_distribution<int> mat(1, m.num_periods());
      q.payoff = random_european_payoff(rng, m, mat(rng), 6);
      rep = price_european(m, q);
    }
    if (!rep.has_gap || rep.gap != 0) {
      detail = "gap at instance " + std::to_string(done);
      return false;
    }
    if (!rep.system || !rep.verified) {
      detail = "unverified system at instance " + std::to_string(done);
      return false;
    }
    ++done;
  }
  detail = "100 instances";
  return true;
}

bool c4_oracle_equivalence(std::string& detail) {
  std::mt19937_64 rng(424242);
  int done = 0;
  while (done < 30) {
    RandomTreeOptions opt;
    opt.max_periods = 4;
    opt.max_branches = 3;
    opt.num_assets = 1;
    opt.max_leaves = 8;
    TreeModel m = (done % 3 == 0) ? random_generic_tree(rng, opt)
                                  : random_viable_tree(rng, opt);
    if (count_stopping_times(m, 64) > 64) continue;
    Payoff g = random_american_payoff(rng, m, 6);
    HedgeQuery q;
    q.payoff = g;
    q.x = (done % 2 == 0) ? Rat(0) : Rat(1);
    q.cone = Cone::unconstrained(1);
    PriceReport rep = price_american(m, q);
    Rat brute = brute_force_american(m, g, q.x, q.cone, 64);
    if (rep.price != brute) {
      detail = "mismatch at instance " + std::to_string(done);
      return false;
    }
    ++done;
  }
  detail = "30 instances";
  return true;
}

bool c5_ftap_cross_check(std::string& detail) {
  std::mt19937_64 rng(5150);
  int done = 0, held = 0, failed = 0;
  while (done < 50) {
    RandomTreeOptions opt;
    opt.max_periods = 3;
    opt.max_branches = 2;
    opt.num_assets = 1;
    opt.max_leaves = 8;
    TreeModel m = (done % 2 == 0) ? random_viable_tree(rng, opt)
                                  : random_generic_tree(rng, opt);
    LocalizingSequence seq = random_localizing_sequence(rng, m, 2, true);
    const Cone cone = Cone::unconstrained(1);
    Verdict v = check_local_na(m, seq, cone);
    bool all_positive = true;
    for (int k = 1; k <= seq.size() && all_positive; ++k) {
      for (int leaf : m.leaves()) {
        FindSystemResult r = find_pricing_system(
            m, seq, {1, 2}, {m.num_periods()}, m.node(leaf).id,
            {k, m.num_periods()}, cone);
        if (r.status != LpStatus::Optimal || r.objective <= 0) {
          all_positive = false;
          break;
        }
      }
    }
    if (v.holds != all_positive) {
      detail = "disagreement at instance " + std::to_string(done);
      return false;
    }
    (v.holds ? held : failed) += 1;
    ++done;
  }
  detail = "50 instances (" + std::to_string(held) + " viable, " +
           std::to_string(failed) + " not)";
  return held > 0 && failed > 0;
}

bool c6_deflated_supermartingale(std::string& detail) {
  std::mt19937_64 rng(606060);
  int done = 0;
  while (done < 100) {
    RandomTreeOptions opt;
    opt.max_periods = 3;
    opt.num_assets = 1;
    opt.max_leaves = 10;
    TreeModel m = random_viable_tree(rng, opt);
    LocalizingSequence seq = random_localizing_sequence(rng, m, 2, true);
    std::vector<int> gamma{std::min(1, m.num_periods()), m.num_periods()};
    std::sort(gamma.begin(), gamma.end());
    gamma.erase(std::unique(gamma.begin(), gamma.end()), gamma.end());
    const std::string atom = m.node(m.leaves()[rng() % m.num_leaves()]).id;
    FindSystemResult fr =
        find_pricing_system(m, seq, {1, 2}, gamma, atom,
                            {2, m.num_periods()}, Cone::unconstrained(1));
    if (fr.status != LpStatus::Optimal || !fr.system) continue;
    if (!verify_pricing_system(m, seq, *fr.system, Cone::unconstrained(1)).ok) {
      detail = "system failed verification";
      return false;
    }
    GeneralizedStrategy h;
    h.pre = Strategy::zeros(m);
    h.thetas = gamma;
    for (int v = 0; v < m.num_nodes(); ++v)
      if (!m.is_leaf(v)) h.pre.pos[v] = {random_rat(rng, -6, 6, 5)};
    for (int theta : gamma) {
      if (theta >= m.num_periods()) continue;
      Strategy leg = Strategy::zeros(m);
      for (int v = 0; v < m.num_nodes(); ++v)
        if (!m.is_leaf(v) && m.time(v) >= theta)
          leg.pos[v] = {random_rat(rng, -6, 6, 5)};
      h.post[theta] = std::move(leg);
    }
    if (deflated_value(m, seq, *fr.system, h) > 0) {
      detail = "positive deflated value at instance " + std::to_string(done);
      return false;
    }
    ++done;
  }
  detail = "100 pairs";
  return true;
}

bool c7_sweep(std::string& detail) {
  std::mt19937_64 rng(777000);
  int done = 0;
  while (done < 30) {
    RandomTreeOptions opt;
    opt.max_periods = 4;
    opt.num_assets = 1;
    opt.max_leaves = 10;
    TreeModel m = random_viable_tree(rng, opt);
    LocalizingSequence seq = random_localizing_sequence(rng, m, 3, true);
    HedgeQuery q;
    q.payoff = random_european_payoff(rng, m, m.num_periods(), 6);
    q.x = (done % 2 == 0) ? Rat(0) : Rat(1, 2);
    q.cone = Cone::unconstrained(1);
    q.seq = seq;
    SweepReport sweep = localize_sweep(m, q);  // throws if not monotone
    for (int k = 1; k <= seq.size(); ++k) {
      if (sweep.pi[k - 1] != elmd_dual_value(m, q, k)) {
        detail = "dual mismatch at instance " + std::to_string(done);
        return false;
      }
    }
    if (!sweep.converged) {
      detail = "exhaustive sweep did not converge at instance " +
               std::to_string(done);
      return false;
    }
    ++done;
  }
  detail = "30 fixtures, 3-element sequences";
  return true;
}

bool c8_credit_sensitivity(std::string& detail) {
  std::mt19937_64 rng(808080);
  const std::vector<Rat> xs{Rat(0), Rat(1, 2), Rat(1), Rat(2)};
  int done = 0;
  while (done < 20) {
    RandomTreeOptions opt;
    opt.max_periods = 3;
    opt.num_assets = 1;
    opt.max_leaves = 10;
    TreeModel m = random_viable_tree(rng, opt);
    // Non-exhaustive single stopping time makes the transform bite.
    LocalizingSequence probe = random_localizing_sequence(rng, m, 2, false);
    std::vector<StoppingTime> first{probe.at(0)};
    const bool exh = first.back().identically_terminal(m);
    LocalizingSequence seq(m, std::move(first), exh);
    HedgeQuery q;
    q.payoff = random_european_payoff(rng, m, m.num_periods(), 6);
    q.cone = Cone::unconstrained(1);
    q.seq = seq;
    std::vector<Rat> pi;
    for (const Rat& x : xs) {
      HedgeQuery qx = q;
      qx.x = x;
      pi.push_back(localize_sweep(m, qx).pi[0]);
    }
    for (std::size_t i = 0; i + 1 < pi.size(); ++i) {
      if (pi[i + 1] > pi[i]) {
        detail = "not nonincreasing at instance " + std::to_string(done);
        return false;
      }
      if (pi[i] - pi[i + 1] > xs[i + 1] - xs[i]) {
        detail = "not 1-Lipschitz at instance " + std::to_string(done);
        return false;
      }
    }
    ++done;
  }
  detail = "20 fixtures, x in {0, 1/2, 1, 2}";
  return true;
}

bool c9_cone_semantics(std::string& detail) {
  TreeModel m = downward_drift();
  Verdict unc = check_na(m, Cone::unconstrained(1));
  if (unc.holds || !unc.witness) { detail = "unconstrained verdict"; return false; }
  Verdict ns = check_na(m, Cone::no_short(1, 1));
  if (!ns.holds || !ns.state_prices) { detail = "no-short verdict"; return false; }
  // The certificate is a supermartingale state-price vector; cast it as a
  // single-index pricing system and verify at tol 0.
  PricingSystem z;
  z.index_set = {{1, 1}};
  std::vector<Rat> den(m.num_leaves());
  for (int i = 0; i < m.num_leaves(); ++i)
    den[i] = (*ns.state_prices)[i] / m.atom_prob(m.leaves()[i]);
  z.densities[{1, 1}] = den;
  LocalizingSequence seq = LocalizingSequence::trivial(m);
  PsReport rep = verify_pricing_system(m, seq, z, Cone::no_short(1, 1), Rat(0));
  if (!rep.ok) { detail = "certificate failed verification"; return false; }
  return true;
}

bool c10_trading_past_maturity(std::string& detail) {
  TreeModel m = drift_after_maturity();
  HedgeQuery q;
  q.payoff = call_payoff(m, Rat(1), 1);
  q.cone = Cone::unconstrained(1);
  PriceReport with_tail = price_european(m, q);
  TreeModel trunc = truncate_tree(m, 1);
  HedgeQuery qt = q;
  qt.payoff = rekey(q.payoff, m, trunc);
  PriceReport at_maturity = price_european(trunc, qt);
  if (at_maturity.price != Rat(1, 3)) { detail = "truncated price"; return false; }
  if (!(with_tail.price < at_maturity.price)) { detail = "not strict"; return false; }
  // The general inequality on random viable fixtures.
  std::mt19937_64 rng(101010);
  for (int trial = 0; trial < 10; ++trial) {
    RandomTreeOptions opt;
    opt.max_periods = 3;
    opt.num_assets = 1;
    TreeModel rm = random_viable_tree(rng, opt);
    if (rm.num_periods() < 2) continue;
    const int tsharp = rm.num_periods() - 1;
    HedgeQuery rq;
    rq.payoff = random_european_payoff(rng, rm, tsharp, 5);
    rq.cone = Cone::unconstrained(1);
    TreeModel rtrunc = truncate_tree(rm, tsharp);
    HedgeQuery rqt = rq;
    rqt.payoff = rekey(rq.payoff, rm, rtrunc);
    if (price_european(rm, rq).price > price_european(rtrunc, rqt).price) {
      detail = "longer horizon repriced higher";
      return false;
    }
  }
  return true;
}

}  // namespace

int main() {
  criterion(1, "golden European call: 1/3, hedge 2/3, dual (1/3,2/3), gap 0",
            1.0, c1_golden_european);
  criterion(2, "golden American put: 28/9 equals the European price", 1.0,
            c2_golden_american);
  criterion(3, "strong duality: zero gap and verified systems on 100 trees",
            300.0, c3_strong_duality);
  criterion(4, "grid LP equals the stopping-time enumeration oracle on 30 trees",
            300.0, c4_oracle_equivalence);
  criterion(5, "local-NA agrees with pricing-system existence on 50 fixtures",
            300.0, c5_ftap_cross_check);
  criterion(6, "deflated wealth nonpositive for 100 verified system/strategy pairs",
            300.0, c6_deflated_supermartingale);
  criterion(7, "sweeps are monotone and match the state-price dual on 30 fixtures",
            300.0, c7_sweep);
  criterion(8, "prices are nonincreasing and 1-Lipschitz in the credit bound",
            300.0, c8_credit_sensitivity);
  criterion(9, "downward drift: no-short holds with a verified certificate",
            60.0, c9_cone_semantics);
  criterion(10, "post-maturity trading lowers the price, strictly on drift",
            60.0, c10_trading_past_maturity);
  if (g_failures == 0) std::printf("all criteria passed\n");
  return g_failures;
}
