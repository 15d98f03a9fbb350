#pragma once

#include <cstdint>
#include <random>

#include "viab/market_tree.hpp"

namespace viab {

// Non-recombining binomial tree, d = 1. Node ids are "n<k>" in
// breadth-first order with the root "n0".
TreeModel generate_binomial(const Rat& s0, const Rat& up, const Rat& down,
                            const Rat& p, int periods);

// Deterministic single-path tree with prices 1, 2, 3: NA fails with the
// buy-and-hold witness H = 1 (wealth 0, 1, 2).
TreeModel generate_arbitrage_demo();

// --- randomized fixtures (deterministic per seed) ---------------------------

struct RandomTreeOptions {
  int max_periods = 4;
  int max_branches = 3;
  int num_assets = 1;
  // Cap on leaves; the shape generator resamples branch counts to stay under.
  int max_leaves = 48;
  // Denominator bound for random rationals.
  int denom = 12;
  // Make the first `supermartingale_coords` assets strict q-supermartingales
  // instead of q-martingales (prices drift down under the construction
  // measure); keeps no-short viability while breaking unconstrained NA.
  int supermartingale_coords = 0;
};

// Random tree with prices constructed backward as conditional expectations
// under a strictly positive randomly drawn measure, so the unconstrained NA
// condition holds by construction (supermartingale variant: NA under
// no-short on the drifting coordinates).
TreeModel random_viable_tree(std::mt19937_64& rng, const RandomTreeOptions& opt);

// Random tree with independently drawn positive prices; no viability
// guarantee (used to exercise both verdict directions).
TreeModel random_generic_tree(std::mt19937_64& rng, const RandomTreeOptions& opt);

// Random antichain cover drawn by stopping each path with probability
// `stop_bias` per interior node.
StoppingTime random_stopping_time(std::mt19937_64& rng, const TreeModel& model,
                                  double stop_bias = 0.35);

// Random nondecreasing sequence of `length` stopping times; when
// `exhaustive` the last element is identically T.
LocalizingSequence random_localizing_sequence(std::mt19937_64& rng,
                                              const TreeModel& model,
                                              int length, bool exhaustive);

// Random nonnegative payoff values, bounded by `scale`.
Payoff random_american_payoff(std::mt19937_64& rng, const TreeModel& model,
                              int scale = 8, int denom = 4);
Payoff random_european_payoff(std::mt19937_64& rng, const TreeModel& model,
                              int maturity, int scale = 8, int denom = 4);

Rat random_rat(std::mt19937_64& rng, int lo_num, int hi_num, int max_denom);

}  // namespace viab
