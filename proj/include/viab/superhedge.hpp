#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "viab/market_tree.hpp"
#include "viab/strategy.hpp"
#include "viab/viability.hpp"

namespace viab {

// Pricing query. The localizing sequence defaults to the trivial exhaustive
// one (T_1 identically T); the exercise grid defaults to every time index
// 0..T for American claims and to the listed dates (plus T) for Bermudan.
struct HedgeQuery {
  Payoff payoff;
  Rat x = 0;  // credit constraint, >= 0; payoff must dominate -x
  Cone cone;
  std::optional<LocalizingSequence> seq;
  std::vector<int> thetas;  // empty = default grid
  ArithMode mode = ArithMode::Exact;
  double tol = 1e-7;
};

struct PriceReport {
  ArithMode mode = ArithMode::Exact;
  Rat price = 0;        // exact mode
  double price_f = 0;   // float mode
  GeneralizedStrategy strategy;  // post legs empty for European claims
  Rat x = 0;
  std::string cone_desc;

  // Dual side: explicit pricing-system LP over the same D x Gamma.
  LpStatus dual_status = LpStatus::Optimal;
  Rat dual_value = 0;
  double dual_value_f = 0;
  std::optional<PricingSystem> system;
  bool has_gap = false;  // both sides solved
  Rat gap = 0;
  double gap_f = 0;
  // Whether the system assembled from the primal LP's superhedge-row
  // multipliers verified; when it does not (degenerate optima can put weight
  // on credit rows), the dual-LP optimum is reported instead.
  std::string dual_source;  // "primal-multipliers" | "dual-lp" | "none"
  bool verified = false;    // verify_pricing_system outcome on `system`
  int binding_credit_rows = 0;

  std::vector<Rat> sweep;  // pi_k when a localizing sequence was supplied
};

// Minimal superhedging price of a European claim: min z over strategies in
// A_{x+z} with z + terminal wealth dominating the transformed payoff
// G 1_{T_k >= T} - x 1_{T_k < T} on every stopped market of the sequence.
PriceReport price_european(const TreeModel& model, const HedgeQuery& q);

// American/Bermudan price over generalized strategies: one pre-exercise leg
// plus one continuation leg per grid date; constraints per (k, theta, atom).
PriceReport price_american(const TreeModel& model, const HedgeQuery& q);

// Independent oracle: one joint LP with a dedicated continuation leg per
// enumerated stopping time, so the constraint set quantifies over all
// stopping times rather than the deterministic grid.
Rat brute_force_american(const TreeModel& model, const Payoff& payoff,
                         const Rat& x, const Cone& cone, std::uint64_t cap);

struct SweepReport {
  std::vector<Rat> pi;  // per k, trading halted at T_k, transformed payoff
  Rat pi_full = 0;      // unstopped price
  bool exhaustive = false;
  bool converged = false;  // pi.back() == pi_full
};

// Per-k stopped-market prices of G 1_{T_k>=T} - x 1_{T_k<T}; nondecreasing
// in k, and the last equals the unstopped price when the sequence is
// exhaustive. Exact mode only.
SweepReport localize_sweep(const TreeModel& model, const HedgeQuery& q);

// Dual route to pi_k: maximize E[Z (G 1_{T_k>=T} - x 1_{T_k<T})] over
// state-price densities of the k-th stopped market (martingale rows on free
// coordinates, supermartingale rows on no-short ones). Equals the primal
// pi_k exactly.
Rat elmd_dual_value(const TreeModel& model, const HedgeQuery& q, int k);

// Diagnostic: prices of the truncated claims (payoff ^ n) for increasing n;
// stabilizes once n exceeds the payoff maximum.
std::vector<Rat> truncation_sweep(const TreeModel& model, const HedgeQuery& q,
                                  const std::vector<Rat>& levels);

struct GapSearchParams {
  int max_periods = 3;
  int max_branches = 2;
  int seq_length = 2;
  bool exhaustive = false;  // exhaustive families always report gap 0
  Rat x = 0;
  int payoff_scale = 4;
  std::uint64_t seed = 1;
  // When set, a search that exhausts its budget without reaching the target
  // throws BudgetExhausted carrying the best gap found.
  std::optional<Rat> target_gap;
};

struct GapSearchCandidate {
  std::string model_json;  // serialized fixture (model + localizing + payoff)
  Rat gap = 0;             // pi_full - max_k pi_k
  std::vector<Rat> pi_k;
  Rat pi_full = 0;
};

struct GapSearchResult {
  int evaluated = 0;
  int viable = 0;  // candidates whose every stopped market passes NA
  std::optional<GapSearchCandidate> best;
};

// Randomized probe for fixtures where every stopped market is arbitrage-free
// yet the unstopped price exceeds every stopped one. Candidates failing the
// per-k NA certification are discarded; the best surviving gap is re-derived
// from scratch before being reported.
GapSearchResult search_local_viability_gap(const GapSearchParams& params,
                                           int budget);

}  // namespace viab
