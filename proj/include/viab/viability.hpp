#pragma once

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "viab/lp.hpp"
#include "viab/market_tree.hpp"
#include "viab/strategy.hpp"

namespace viab {

// Family of nonnegative terminal densities Z^{k,theta}, one value per atom,
// each F_{T ^ T_k}-measurable (constant on subtrees below T_k stop nodes),
// jointly normalized: sum over (k,theta) of E[Z^{k,theta}] = 1. k is the
// 1-based index into the localizing sequence, theta a grid time.
struct PricingSystem {
  std::vector<std::pair<int, int>> index_set;
  std::map<std::pair<int, int>, std::vector<Rat>> densities;  // per leaf

  const std::vector<Rat>& density(int k, int theta) const;
};

struct PsViolation {
  std::string condition;  // "nonneg" | "measurable" | "normalization" |
                          // "window" | "post"
  int ray = -1;           // index into cone rays, when applicable
  int theta = -1;         // post condition exercise date / window tag
  std::string node;       // node id, when applicable
  Rat residual = 0;
};

struct PsReport {
  bool ok = true;
  std::vector<PsViolation> violations;
};

// Node-level one-step verification of the pricing-system conditions: for
// every cone generating ray u and every non-terminal node, the deflated
// one-step increment of the window sum (pre-exercise) and of each
// post-exercise family must be <= tol. With +-e rays the unconstrained
// equalities come out automatically. tol must be 0 in exact use.
PsReport verify_pricing_system(const TreeModel& model,
                               const LocalizingSequence& seq,
                               const PricingSystem& z, const Cone& cone,
                               const Rat& tol = Rat(0));

// E[sum_{(k,theta)} Z^{k,theta}_T * stopped wealth of the pasted leg]: the
// exact deflated value of a generalized strategy. <= 0 for every verified
// system and cone-valued strategy.
Rat deflated_value(const TreeModel& model, const LocalizingSequence& seq,
                   const PricingSystem& z, const GeneralizedStrategy& h);

struct PerKVerdict {
  int k = 0;
  bool holds = false;
  std::optional<Rat> epsilon;  // optimal strict-positivity margin
};

struct Verdict {
  std::string condition;  // "NA" | "local-NA" | "pricing-system-existence"
  bool holds = false;
  // Exactly one of the two is present.
  std::optional<Strategy> witness;            // arbitrage when violated
  std::optional<std::vector<Rat>> state_prices;  // per leaf, when it holds
  std::optional<PricingSystem> certificate;      // pricing-system form
  std::vector<PerKVerdict> per_k;
  std::string note;
  bool experimental = false;  // polyhedral cones: no dichotomy guarantee
};

// NA check via the strict-positivity LP: maximize eps subject to state-price
// constraints (martingale rows on free coordinates, supermartingale rows on
// no-short coordinates) and q_atom >= eps. NA holds iff the optimum is
// positive; otherwise the witness is reconstructed from the paired arbitrage
// LP and re-verified.
Verdict check_na(const TreeModel& model, const Cone& cone);

// Runs check_na on each stopped market S^{T_k}. On finite stopped trees
// NFLVR coincides with NA and NUPBR holds automatically; the verdict note
// records this.
Verdict check_local_na(const TreeModel& model, const LocalizingSequence& seq,
                       const Cone& cone);

struct FindSystemResult {
  LpStatus status = LpStatus::Optimal;
  Rat objective = 0;  // max E[Z^{k,theta} 1_atom]
  std::optional<PricingSystem> system;
};

// LP maximizing E[Z^{k,theta}_T 1_A] over the pricing-system polytope for
// the given D x Gamma (T must lie in Gamma). A positive objective for every
// atom is equivalent to local NA.
FindSystemResult find_pricing_system(const TreeModel& model,
                                     const LocalizingSequence& seq,
                                     const std::vector<int>& D,
                                     const std::vector<int>& Gamma,
                                     const std::string& atom_leaf_id,
                                     std::pair<int, int> target,
                                     const Cone& cone);

// The pricing-system feasible region as an LP (zero objective): one
// nonnegative variable per (k, theta, measurability cell), the joint
// normalization row, and the one-step window/post rows per cone ray.
// Shared by find_pricing_system and the dual-form superhedging LPs.
struct PricingPolytope {
  LpProblem lp;
  std::map<std::tuple<int, int, int>, int> vars;  // (k, theta, stop node)
};
PricingPolytope build_pricing_polytope(const TreeModel& model,
                                       const LocalizingSequence& seq,
                                       const std::vector<int>& D,
                                       const std::vector<int>& Gamma,
                                       const Cone& cone);

// Expands a per-cell solution vector into a per-atom PricingSystem.
PricingSystem expand_cell_solution(const TreeModel& model,
                                   const LocalizingSequence& seq,
                                   const std::vector<int>& D,
                                   const std::vector<int>& Gamma,
                                   const PricingPolytope& poly,
                                   const std::vector<Rat>& x);

}  // namespace viab
