#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "viab/errors.hpp"
#include "viab/generators.hpp"
#include "viab/superhedge.hpp"

using namespace viab;

namespace {

TreeModel call_binomial() {  // S0=1, u=2, d=1/2, 1 period
  return generate_binomial(Rat(1), Rat(2), Rat(1, 2), Rat(1, 2), 1);
}

Payoff call_payoff(const TreeModel& m, const Rat& strike, int maturity) {
  Payoff g;
  g.kind = PayoffKind::European;
  g.maturity = maturity;
  for (int v : m.nodes_at_time(maturity)) {
    Rat intrinsic = m.price(v, 0) - strike;
    g.values[v] = intrinsic > 0 ? intrinsic : Rat(0);
  }
  return g;
}

Payoff put_payoff_american(const TreeModel& m, const Rat& strike) {
  Payoff g;
  g.kind = PayoffKind::American;
  for (int v = 0; v < m.num_nodes(); ++v) {
    Rat intrinsic = strike - m.price(v, 0);
    g.values[v] = intrinsic > 0 ? intrinsic : Rat(0);
  }
  return g;
}

// Post-maturity drift fixture: genuine 1-period binomial followed by a
// deterministic rising segment on each branch.
TreeModel drift_after_maturity() {
  std::vector<NodeRecord> nodes;
  nodes.push_back({"r", std::nullopt, 0, Rat(1), {Rat(1)}, ""});
  nodes.push_back({"u", std::string("r"), 1, Rat(1, 2), {Rat(2)}, ""});
  nodes.push_back({"u2", std::string("u"), 2, Rat(1), {Rat(3)}, ""});
  nodes.push_back({"d", std::string("r"), 1, Rat(1, 2), {Rat(1, 2)}, ""});
  nodes.push_back({"d2", std::string("d"), 2, Rat(1), {Rat(1)}, ""});
  return TreeModel(1, 2, std::move(nodes));
}

// Re-keys a payoff's node indices onto another tree sharing the node ids.
Payoff rekey(const Payoff& g, const TreeModel& from, const TreeModel& to) {
  Payoff out = g;
  out.values.clear();
  for (const auto& [idx, v] : g.values)
    out.values[to.index_of(from.node(idx).id)] = v;
  return out;
}

// Verifies that z + pasted wealth dominates the transformed payoff row set.
void recheck_superhedge(const TreeModel& m, const HedgeQuery& q,
                        const PriceReport& rep) {
  const LocalizingSequence seq =
      q.seq ? *q.seq : LocalizingSequence::trivial(m);
  std::vector<int> grid = rep.strategy.thetas;
  for (int k = 1; k <= seq.size(); ++k) {
    const StoppingTime& tk = seq.at(k - 1);
    TreeModel sk = stopped_prices(m, tk);
    for (int theta : grid) {
      std::optional<int> th =
          theta < m.num_periods() ? std::optional<int>(theta) : std::nullopt;
      WealthProcess w = wealth(sk, rep.strategy, th, rep.price);
      for (int leaf : m.leaves()) {
        Rat psi = Rat(-q.x);
        if (tk.at_terminal(leaf)) {
          if (q.payoff.kind == PayoffKind::European)
            psi = q.payoff.at(m.ancestor_at(leaf, q.payoff.maturity));
          else if (q.payoff.kind == PayoffKind::American)
            psi = q.payoff.at(m.ancestor_at(leaf, theta));
          else {
            const auto& ts = q.payoff.exercise_times;
            psi = std::count(ts.begin(), ts.end(), theta)
                      ? q.payoff.at(m.ancestor_at(leaf, theta))
                      : Rat(-q.x);
          }
        }
        REQUIRE(w.value[leaf] >= psi);
      }
    }
  }
  // Admissibility at bound x + z.
  AdmissibilityResult adm =
      check_admissible(m, rep.strategy, q.x + rep.price, q.cone);
  REQUIRE(adm.admissible);
}

}  // namespace

TEST_CASE("wealth: zero strategy, one increment, pasted switch") {
  TreeModel m = generate_binomial(Rat(1), Rat(2), Rat(1, 2), Rat(1, 2), 2);
  GeneralizedStrategy zero;
  zero.pre = Strategy::zeros(m);
  zero.thetas = {2};
  WealthProcess w0 = wealth(m, zero, std::nullopt, Rat(5));
  for (const Rat& v : w0.value) CHECK(v == 5);

  TreeModel m1 = call_binomial();
  GeneralizedStrategy hold;
  hold.pre = Strategy::zeros(m1);
  hold.pre.pos[m1.root()] = {Rat(1)};
  hold.thetas = {1};
  WealthProcess w1 = wealth(m1, hold, std::nullopt, Rat(0));
  CHECK(w1.value[m1.leaves()[0]] == 1);           // z + (2-1)
  CHECK(w1.value[m1.leaves()[1]] == Rat(-1, 2));  // z + (1/2-1)

  // Pasted switch at theta=1 from +1 to -1: independent path-sum oracle.
  GeneralizedStrategy flip;
  flip.pre = Strategy::zeros(m);
  flip.thetas = {1, 2};
  Strategy leg = Strategy::zeros(m);
  for (int v = 0; v < m.num_nodes(); ++v)
    if (!m.is_leaf(v)) {
      flip.pre.pos[v] = {Rat(1)};
      if (m.time(v) >= 1) leg.pos[v] = {Rat(-1)};
    }
  flip.post[1] = leg;
  WealthProcess wp = wealth(m, flip, 1, Rat(0));
  for (int leaf : m.leaves()) {
    // Path sum: +1 on the first step, -1 on the second.
    const int t1 = m.ancestor_at(leaf, 1);
    Rat expect = (m.price(t1, 0) - m.price(m.root(), 0)) -
                 (m.price(leaf, 0) - m.price(t1, 0));
    CHECK(wp.value[leaf] == expect);
  }
}

TEST_CASE("check_admissible: zero strategy, forced violation with node id") {
  TreeModel m = call_binomial();
  GeneralizedStrategy zero;
  zero.pre = Strategy::zeros(m);
  zero.thetas = {1};
  CHECK(check_admissible(m, zero, Rat(0), Cone::unconstrained(1)).admissible);
  CHECK(check_admissible(m, zero, Rat(7), Cone::unconstrained(1)).admissible);

  GeneralizedStrategy big_short;
  big_short.pre = Strategy::zeros(m);
  big_short.pre.pos[m.root()] = {Rat(-10)};
  big_short.thetas = {1};
  AdmissibilityResult r =
      check_admissible(m, big_short, Rat(1), Cone::unconstrained(1));
  REQUIRE_FALSE(r.admissible);
  CHECK(r.violation_kind == "floor");
  CHECK(m.node(r.violation_node).id == "n1");  // the up leaf, wealth -10

  // Cone violation is reported as such.
  AdmissibilityResult rc =
      check_admissible(m, big_short, Rat(100), Cone::no_short(1, 1));
  REQUIRE_FALSE(rc.admissible);
  CHECK(rc.violation_kind == "cone");
}

TEST_CASE("golden European: call on the binomial replicates at 1/3") {
  TreeModel m = call_binomial();
  HedgeQuery q;
  q.payoff = call_payoff(m, Rat(1), 1);
  q.x = 0;
  q.cone = Cone::unconstrained(1);
  PriceReport rep = price_european(m, q);
  CHECK(rep.price == Rat(1, 3));
  CHECK(rep.strategy.pre.pos[m.root()][0] == Rat(2, 3));
  REQUIRE(rep.has_gap);
  CHECK(rep.gap == 0);
  REQUIRE(rep.system.has_value());
  CHECK(rep.verified);
  // Dual atom weights P * Z = (1/3, 2/3).
  const auto& den = rep.system->density(1, 1);
  CHECK(den[0] * m.atom_prob(m.leaves()[0]) == Rat(1, 3));
  CHECK(den[1] * m.atom_prob(m.leaves()[1]) == Rat(2, 3));
  recheck_superhedge(m, q, rep);

  SUBCASE("float mode agrees within 1e-9") {
    HedgeQuery qf = q;
    qf.mode = ArithMode::Float;
    PriceReport repf = price_european(m, qf);
    CHECK(std::abs(repf.price_f - 1.0 / 3.0) <= 1e-9);
    CHECK(std::abs(repf.gap_f) <= 1e-9);
  }
}

TEST_CASE("European trivia: zero payoff and static replication") {
  TreeModel m = generate_binomial(Rat(4), Rat(2), Rat(1, 2), Rat(1, 3), 2);
  SUBCASE("G = 0 prices at 0") {
    Payoff g;
    g.kind = PayoffKind::European;
    g.maturity = 2;
    for (int v : m.nodes_at_time(2)) g.values[v] = 0;
    HedgeQuery q;
    q.payoff = g;
    q.cone = Cone::unconstrained(1);
    PriceReport rep = price_european(m, q);
    CHECK(rep.price == 0);
  }
  SUBCASE("G = S_T prices at S_0 with buy-and-hold") {
    Payoff g;
    g.kind = PayoffKind::European;
    g.maturity = 2;
    for (int v : m.nodes_at_time(2)) g.values[v] = m.price(v, 0);
    HedgeQuery q;
    q.payoff = g;
    q.cone = Cone::unconstrained(1);
    PriceReport rep = price_european(m, q);
    CHECK(rep.price == 4);
    recheck_superhedge(m, q, rep);
  }
}

TEST_CASE("golden American: K=6 put on the 2-period binomial is 28/9") {
  TreeModel m = generate_binomial(Rat(4), Rat(2), Rat(1, 2), Rat(1, 2), 2);
  HedgeQuery q;
  q.payoff = put_payoff_american(m, Rat(6));
  q.x = 0;
  q.cone = Cone::unconstrained(1);
  PriceReport rep = price_american(m, q);
  CHECK(rep.price == Rat(28, 9));
  REQUIRE(rep.has_gap);
  CHECK(rep.gap == 0);
  CHECK(rep.verified);
  recheck_superhedge(m, q, rep);

  // Convex-payoff collapse: equals the European put on S_T.
  Payoff eur;
  eur.kind = PayoffKind::European;
  eur.maturity = 2;
  for (int v : m.nodes_at_time(2))
    eur.values[v] = std::max(Rat(Rat(6) - m.price(v, 0)), Rat(0));
  HedgeQuery qe;
  qe.payoff = eur;
  qe.cone = Cone::unconstrained(1);
  CHECK(price_european(m, qe).price == Rat(28, 9));
}

TEST_CASE("Bermudan paying 3 at the time-1 up node prices at 1") {
  TreeModel m = generate_binomial(Rat(1), Rat(2), Rat(1, 2), Rat(1, 2), 2);
  Payoff g;
  g.kind = PayoffKind::Bermudan;
  g.exercise_times = {1};
  const int up = m.nodes_at_time(1)[0];
  const int down = m.nodes_at_time(1)[1];
  g.values[up] = 3;
  g.values[down] = 0;
  HedgeQuery q;
  q.payoff = g;
  q.cone = Cone::unconstrained(1);
  PriceReport rep = price_american(m, q);
  CHECK(rep.price == 1);  // q(up) * 3 with q = 1/3
  CHECK(rep.gap == 0);
  recheck_superhedge(m, q, rep);
}

TEST_CASE("constant American payoff prices at the constant") {
  TreeModel m = generate_binomial(Rat(1), Rat(2), Rat(1, 2), Rat(1, 3), 2);
  Payoff g;
  g.kind = PayoffKind::American;
  for (int v = 0; v < m.num_nodes(); ++v) g.values[v] = Rat(7, 2);
  HedgeQuery q;
  q.payoff = g;
  q.cone = Cone::unconstrained(1);
  PriceReport rep = price_american(m, q);
  CHECK(rep.price == Rat(7, 2));
}

TEST_CASE("brute force: call, put parity with the grid LP, constant prices") {
  SUBCASE("1-period call via two stopping times") {
    TreeModel m = call_binomial();
    Payoff g;
    g.kind = PayoffKind::American;
    for (int v = 0; v < m.num_nodes(); ++v)
      g.values[v] = std::max(Rat(m.price(v, 0) - Rat(1)), Rat(0));
    CHECK(brute_force_american(m, g, Rat(0), Cone::unconstrained(1), 64) ==
          Rat(1, 3));
  }
  SUBCASE("K=6 put matches price_american") {
    TreeModel m = generate_binomial(Rat(4), Rat(2), Rat(1, 2), Rat(1, 2), 2);
    Payoff g = put_payoff_american(m, Rat(6));
    CHECK(brute_force_american(m, g, Rat(0), Cone::unconstrained(1), 64) ==
          Rat(28, 9));
  }
  SUBCASE("single-path constant prices must cover the best exercise") {
    std::vector<NodeRecord> nodes;
    for (int t = 0; t <= 2; ++t) {
      NodeRecord nd;
      nd.id = "c" + std::to_string(t);
      if (t > 0) nd.parent = "c" + std::to_string(t - 1);
      nd.t = t;
      nd.prob = 1;
      nd.prices = {Rat(3)};
      nodes.push_back(nd);
    }
    TreeModel m(1, 2, std::move(nodes));
    Payoff g;
    g.kind = PayoffKind::American;
    g.values[0] = 0;
    g.values[1] = 5;
    g.values[2] = 0;
    CHECK(brute_force_american(m, g, Rat(0), Cone::unconstrained(1), 64) == 5);
  }
  SUBCASE("cap propagates") {
    TreeModel m = generate_binomial(Rat(1), Rat(2), Rat(1, 2), Rat(1, 2), 3);
    Payoff g = put_payoff_american(m, Rat(1));
    CHECK_THROWS_AS(brute_force_american(m, g, Rat(0), Cone::unconstrained(1), 3),
                    CapExceeded);
  }
}

TEST_CASE("oracle equivalence on random small trees") {
  std::mt19937_64 rng(777);
  RandomTreeOptions opt;
  opt.max_periods = 3;
  opt.max_branches = 2;
  opt.num_assets = 1;
  opt.max_leaves = 6;
  int done = 0;
  while (done < 6) {
    TreeModel m = random_viable_tree(rng, opt);
    if (count_stopping_times(m, 64) > 64) continue;
    Payoff g = random_american_payoff(rng, m, 6);
    HedgeQuery q;
    q.payoff = g;
    q.x = (done % 2 == 0) ? Rat(0) : Rat(1);
    q.cone = Cone::unconstrained(1);
    PriceReport rep = price_american(m, q);
    CHECK(rep.price ==
          brute_force_american(m, g, q.x, Cone::unconstrained(1), 64));
    ++done;
  }
}

TEST_CASE("localize sweep: degenerate, hand-derived, x-sensitivity") {
  SUBCASE("trivial exhaustive sequence: pi_1 = pi_full") {
    TreeModel m = call_binomial();
    HedgeQuery q;
    q.payoff = call_payoff(m, Rat(1), 1);
    q.cone = Cone::unconstrained(1);
    q.seq = LocalizingSequence::trivial(m);
    SweepReport rep = localize_sweep(m, q);
    REQUIRE(rep.pi.size() == 1);
    CHECK(rep.pi[0] == rep.pi_full);
    CHECK(rep.converged);
  }
  SUBCASE("2-period call, down branch stopped at 1: hand values") {
    TreeModel m = generate_binomial(Rat(1), Rat(2), Rat(1, 2), Rat(1, 2), 2);
    const int down = m.nodes_at_time(1)[1];
    std::vector<int> stops{down};
    const int up = m.nodes_at_time(1)[0];
    for (int leaf : m.leaves_under(up)) stops.push_back(leaf);
    StoppingTime t1(m, stops);
    StoppingTime tT(m, m.leaves());
    LocalizingSequence seq(m, {t1, tT}, true);
    HedgeQuery q;
    q.payoff = call_payoff(m, Rat(1), 2);
    q.cone = Cone::unconstrained(1);
    q.seq = seq;

    // x = 0: the transform loses nothing, the call pays only on {T_1 >= T}.
    SweepReport r0 = localize_sweep(m, q);
    CHECK(r0.pi == std::vector<Rat>{Rat(1, 3), Rat(1, 3)});
    CHECK(r0.pi_full == Rat(1, 3));
    CHECK(r0.converged);

    // x = 1/2: pi_1 = 1/3 - x * P^Z(down) = 1/3 - (1/2)(2/3) = 0.
    q.x = Rat(1, 2);
    SweepReport rh = localize_sweep(m, q);
    CHECK(rh.pi == std::vector<Rat>{Rat(0), Rat(1, 3)});
    CHECK(rh.pi_full == Rat(1, 3));

    // Dual route agrees k-wise.
    CHECK(elmd_dual_value(m, q, 1) == 0);
    CHECK(elmd_dual_value(m, q, 2) == Rat(1, 3));
    q.x = 0;
    CHECK(elmd_dual_value(m, q, 1) == Rat(1, 3));

    // x-sensitivity: nonincreasing and 1-Lipschitz across x in {0,1/2,1}.
    std::vector<Rat> xs{Rat(0), Rat(1, 2), Rat(1)};
    std::vector<Rat> pi1;
    for (const Rat& x : xs) {
      HedgeQuery qx = q;
      qx.x = x;
      pi1.push_back(localize_sweep(m, qx).pi[0]);
    }
    for (std::size_t i = 0; i + 1 < pi1.size(); ++i) {
      CHECK(pi1[i + 1] <= pi1[i]);
      CHECK(pi1[i] - pi1[i + 1] <= xs[i + 1] - xs[i]);
    }
  }
}

TEST_CASE("elmd dual equals the primal sweep on random fixtures") {
  std::mt19937_64 rng(31337);
  RandomTreeOptions opt;
  opt.max_periods = 3;
  opt.num_assets = 1;
  opt.max_leaves = 10;
  for (int trial = 0; trial < 8; ++trial) {
    TreeModel m = random_viable_tree(rng, opt);
    LocalizingSequence seq = random_localizing_sequence(rng, m, 3, true);
    HedgeQuery q;
    q.payoff = random_european_payoff(rng, m, m.num_periods(), 6);
    q.x = (trial % 2 == 0) ? Rat(0) : Rat(1, 2);
    q.cone = Cone::unconstrained(1);
    q.seq = seq;
    SweepReport sweep = localize_sweep(m, q);
    for (int k = 1; k <= seq.size(); ++k)
      CHECK(sweep.pi[k - 1] == elmd_dual_value(m, q, k));
    CHECK(sweep.converged);
  }
}

TEST_CASE("trading past maturity can only lower the price; strictly on drift") {
  TreeModel m = drift_after_maturity();
  HedgeQuery q;
  q.payoff = call_payoff(m, Rat(1), 1);  // matures at T# = 1 < T = 2
  q.cone = Cone::unconstrained(1);
  PriceReport with_tail = price_european(m, q);

  TreeModel trunc = truncate_tree(m, 1);
  HedgeQuery qt = q;
  qt.payoff = rekey(q.payoff, m, trunc);
  PriceReport at_maturity = price_european(trunc, qt);

  CHECK(at_maturity.price == Rat(1, 3));
  CHECK(with_tail.price <= at_maturity.price);
  CHECK(with_tail.price < at_maturity.price);  // strict on the drift fixture
  CHECK(with_tail.price == 0);                 // z >= -x binds at x = 0

  // General property on a random viable model: horizon T <= horizon T#.
  std::mt19937_64 rng(919);
  RandomTreeOptions opt;
  opt.max_periods = 3;
  opt.num_assets = 1;
  for (int trial = 0; trial < 5; ++trial) {
    TreeModel rm = random_viable_tree(rng, opt);
    if (rm.num_periods() < 2) continue;
    const int tsharp = rm.num_periods() - 1;
    HedgeQuery rq;
    rq.payoff = random_european_payoff(rng, rm, tsharp, 5);
    rq.cone = Cone::unconstrained(1);
    Rat full = price_european(rm, rq).price;
    TreeModel rtrunc = truncate_tree(rm, tsharp);
    HedgeQuery rqt = rq;
    rqt.payoff = rekey(rq.payoff, rm, rtrunc);
    Rat shortened = price_european(rtrunc, rqt).price;
    CHECK(full <= shortened);
  }
}

TEST_CASE("truncation sweep stabilizes beyond the payoff maximum") {
  TreeModel m = generate_binomial(Rat(4), Rat(2), Rat(1, 2), Rat(1, 2), 2);
  HedgeQuery q;
  q.payoff = put_payoff_american(m, Rat(6));
  q.cone = Cone::unconstrained(1);
  std::vector<Rat> prices =
      truncation_sweep(m, q, {Rat(1), Rat(3), Rat(5), Rat(6), Rat(100)});
  for (std::size_t i = 0; i + 1 < prices.size(); ++i)
    CHECK(prices[i] <= prices[i + 1]);
  CHECK(prices[3] == prices[4]);  // payoff max is 5 < 6 < 100
  CHECK(prices[4] == Rat(28, 9));
}

TEST_CASE("strong duality with verified systems on random fixtures") {
  std::mt19937_64 rng(2025);
  RandomTreeOptions opt;
  opt.max_periods = 3;
  opt.num_assets = 2;
  opt.max_leaves = 8;
  for (int trial = 0; trial < 6; ++trial) {
    opt.supermartingale_coords = (trial % 2 == 0) ? 0 : 1;
    TreeModel m = random_viable_tree(rng, opt);
    const Cone cone = (trial % 2 == 0) ? Cone::unconstrained(2)
                                       : Cone::no_short(1, 2);
    HedgeQuery q;
    q.cone = cone;
    q.x = (trial % 3 == 0) ? Rat(1) : Rat(0);
    if (trial % 2 == 0) {
      q.payoff = random_american_payoff(rng, m, 5);
      PriceReport rep = price_american(m, q);
      CHECK(rep.gap == 0);
      CHECK(rep.verified);
      recheck_superhedge(m, q, rep);
    } else {
      q.payoff = random_european_payoff(rng, m, m.num_periods(), 5);
      PriceReport rep = price_european(m, q);
      CHECK(rep.gap == 0);
      CHECK(rep.verified);
      recheck_superhedge(m, q, rep);
    }
  }
}

TEST_CASE("viability gap search") {
  SUBCASE("budget 0 returns an empty report") {
    GapSearchParams params;
    GapSearchResult r = search_local_viability_gap(params, 0);
    CHECK(r.evaluated == 0);
    CHECK_FALSE(r.best.has_value());
  }
  SUBCASE("exhaustive families always close the gap") {
    GapSearchParams params;
    params.exhaustive = true;
    params.seed = 11;
    GapSearchResult r = search_local_viability_gap(params, 8);
    REQUIRE(r.best.has_value());
    CHECK(r.best->gap == 0);
  }
  SUBCASE("non-exhaustive families can leave a positive gap, re-verified") {
    GapSearchParams params;
    params.exhaustive = false;
    params.x = Rat(1, 2);
    params.seed = 12;
    GapSearchResult r = search_local_viability_gap(params, 12);
    REQUIRE(r.best.has_value());
    CHECK(r.best->gap >= 0);
  }
}

TEST_CASE("query validation") {
  TreeModel m = call_binomial();
  HedgeQuery q;
  q.payoff = call_payoff(m, Rat(1), 1);
  q.cone = Cone::unconstrained(1);
  q.x = Rat(-1);
  CHECK_THROWS_AS(price_european(m, q), ParamError);
  q.x = 0;
  q.payoff.values[m.leaves()[1]] = Rat(-2);  // below -x
  CHECK_THROWS_AS(price_european(m, q), InfeasibleHedge);
}

TEST_CASE("float mode on random fixtures: gap and residuals within 1e-7") {
  std::mt19937_64 rng(123321);
  RandomTreeOptions opt;
  opt.max_periods = 4;
  opt.num_assets = 1;
  opt.max_leaves = 12;
  for (int trial = 0; trial < 4; ++trial) {
    TreeModel m = random_viable_tree(rng, opt);
    HedgeQuery q;
    q.cone = Cone::unconstrained(1);
    q.x = (trial % 2 == 0) ? Rat(0) : Rat(1);
    q.mode = ArithMode::Float;
    PriceReport rep;
    if (trial % 2 == 0) {
      q.payoff = random_american_payoff(rng, m, 5);
      rep = price_american(m, q);
    } else {
      q.payoff = random_european_payoff(rng, m, m.num_periods(), 5);
      rep = price_european(m, q);
    }
    REQUIRE(rep.has_gap);
    CHECK(std::abs(rep.gap_f) <= 1e-7);
    CHECK(rep.verified);  // residuals within q.tol = 1e-7
    // Exact mode agrees with the float price.
    HedgeQuery qe = q;
    qe.mode = ArithMode::Exact;
    PriceReport re = (trial % 2 == 0) ? price_american(m, qe)
                                      : price_european(m, qe);
    CHECK(std::abs(re.price.get_d() - rep.price_f) <= 1e-6);
  }
}

TEST_CASE("unreachable target gap exhausts the budget with best-so-far") {
  GapSearchParams params;
  params.exhaustive = true;  // gap 0 always, so any positive target fails
  params.seed = 5;
  params.target_gap = Rat(1);
  CHECK_THROWS_AS(search_local_viability_gap(params, 4), BudgetExhausted);
}

TEST_CASE("elmd dual of the zero claim vanishes for exhaustive k") {
  TreeModel m = generate_binomial(Rat(1), Rat(2), Rat(1, 2), Rat(1, 2), 2);
  Payoff g;
  g.kind = PayoffKind::European;
  g.maturity = 2;
  for (int v : m.nodes_at_time(2)) g.values[v] = 0;
  HedgeQuery q;
  q.payoff = g;
  q.x = Rat(1);
  q.cone = Cone::unconstrained(1);
  q.seq = LocalizingSequence::trivial(m);
  CHECK(elmd_dual_value(m, q, 1) == 0);
}

TEST_CASE("unreduced caller-built rationals are sanitized at the boundaries") {
  // mpq_class(n, d) does not canonicalize; the public entry points must not
  // let 2/2 or 2/4 corrupt exact arithmetic.
  std::vector<NodeRecord> nodes(3);
  nodes[0] = {"r", std::nullopt, 0, Rat(1), {Rat(2, 2)}, ""};
  nodes[1] = {"u", std::string("r"), 1, Rat(2, 4), {Rat(2)}, ""};
  nodes[2] = {"d", std::string("r"), 1, Rat(1, 2), {Rat(1, 2)}, ""};
  TreeModel m(1, 1, std::move(nodes));
  CHECK(m.price(0, 0) == 1);
  CHECK(m.atom_prob(1) == Rat(1, 2));

  HedgeQuery q;
  q.payoff.kind = PayoffKind::European;
  q.payoff.maturity = 1;
  q.payoff.values[1] = Rat(2, 2);  // the call payoff, unreduced
  q.payoff.values[2] = Rat(0, 4);
  q.x = Rat(0, 8);
  q.cone = Cone::unconstrained(1);
  PriceReport rep = price_european(m, q);
  CHECK(rep.price == Rat(1, 3));
  CHECK(rep.gap == 0);
}

TEST_CASE("non-exhaustive sequences keep zero gaps on viable fixtures") {
  std::mt19937_64 rng(55001);
  RandomTreeOptions opt;
  opt.max_periods = 3;
  opt.num_assets = 1;
  opt.max_leaves = 8;
  int done = 0;
  while (done < 5) {
    TreeModel m = random_viable_tree(rng, opt);
    if (m.num_periods() < 2) continue;
    LocalizingSequence seq = random_localizing_sequence(rng, m, 2, false);
    HedgeQuery q;
    q.cone = Cone::unconstrained(1);
    q.x = Rat(1, 2);
    q.seq = seq;
    if (done % 2 == 0) {
      q.payoff = random_american_payoff(rng, m, 5);
      PriceReport rep = price_american(m, q);
      CHECK(rep.gap == 0);
      CHECK(rep.verified);
    } else {
      q.payoff = random_european_payoff(rng, m, m.num_periods(), 5);
      PriceReport rep = price_european(m, q);
      CHECK(rep.gap == 0);
      CHECK(rep.verified);
      CHECK(rep.sweep.size() == static_cast<std::size_t>(seq.size()));
    }
    ++done;
  }
}

TEST_CASE("Bermudan without a terminal exercise date: grid and oracle agree") {
  TreeModel m = generate_binomial(Rat(1), Rat(2), Rat(1, 2), Rat(1, 2), 2);
  Payoff g;
  g.kind = PayoffKind::Bermudan;
  g.exercise_times = {1};  // not exercisable at T = 2
  for (int v : m.nodes_at_time(1))
    g.values[v] = std::max(Rat(Rat(3, 2) - m.price(v, 0)), Rat(0));
  HedgeQuery q;
  q.payoff = g;
  q.x = Rat(1, 2);
  q.cone = Cone::unconstrained(1);
  PriceReport rep = price_american(m, q);
  CHECK(rep.gap == 0);
  CHECK(rep.price == brute_force_american(m, g, q.x, q.cone, 64));
  // The put pays 1 on the down node; covering it costs q(down) = 2/3.
  CHECK(rep.price == Rat(2, 3));
}
