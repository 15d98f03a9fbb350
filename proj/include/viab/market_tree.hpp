#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "viab/rational.hpp"

namespace viab {

// All types in this header are immutable after construction and all
// operations are pure, so values can be shared across threads freely.

struct NodeRecord {
  std::string id;
  std::optional<std::string> parent;  // absent for the root
  int t = 0;
  Rat prob = 1;               // branch probability conditional on the parent
  std::vector<Rat> prices;    // one per asset
  std::string label;
};

// Finite scenario tree with adapted prices. The filtration is the tree
// itself: a random variable is F_t-measurable iff it is constant on the
// subtree below each time-t node. Node indices follow document order; leaf
// order is the induced order of terminal nodes.
class TreeModel {
 public:
  TreeModel(int num_assets, int num_periods, std::vector<NodeRecord> nodes);

  int num_assets() const { return d_; }
  int num_periods() const { return T_; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int root() const { return root_; }
  const NodeRecord& node(int idx) const { return nodes_[idx]; }
  const std::vector<NodeRecord>& nodes() const { return nodes_; }

  int parent(int idx) const { return parent_[idx]; }
  const std::vector<int>& children(int idx) const { return children_[idx]; }
  bool is_leaf(int idx) const { return children_[idx].empty(); }
  int time(int idx) const { return nodes_[idx].t; }

  // Leaves in canonical (document) order.
  const std::vector<int>& leaves() const { return leaves_; }
  int num_leaves() const { return static_cast<int>(leaves_.size()); }
  // Position of a leaf node index within leaves(), -1 for non-leaves.
  int leaf_ordinal(int node_idx) const { return leaf_ordinal_[node_idx]; }

  // Unconditional probability of reaching a node (product of branch
  // probabilities along the path). Positive by the validation invariants.
  const Rat& atom_prob(int idx) const { return atom_[idx]; }

  // Ancestor of `idx` at time `t` (t <= time(idx)); `idx` itself if equal.
  int ancestor_at(int idx, int t) const;

  // Leaf node indices of the subtree rooted at `idx`.
  const std::vector<int>& leaves_under(int idx) const { return under_[idx]; }

  int index_of(const std::string& id) const;  // throws SchemaError if absent
  bool has_id(const std::string& id) const { return by_id_.count(id) > 0; }

  // Nodes at a given time, document order.
  std::vector<int> nodes_at_time(int t) const;

  const Rat& price(int idx, int asset) const { return nodes_[idx].prices[asset]; }

 private:
  int d_ = 0;
  int T_ = 0;
  std::vector<NodeRecord> nodes_;
  int root_ = -1;
  std::vector<int> parent_;
  std::vector<std::vector<int>> children_;
  std::vector<int> leaves_;
  std::vector<int> leaf_ordinal_;
  std::vector<Rat> atom_;
  std::vector<std::vector<int>> under_;
  std::unordered_map<std::string, int> by_id_;

  void validate_and_index();
};

// Antichain of nodes hitting every root-to-leaf path exactly once. The
// event {tau >= T} is the union of atoms whose stop node sits at time T.
class StoppingTime {
 public:
  StoppingTime(const TreeModel& model, std::vector<int> stop_nodes);

  const std::vector<int>& stop_nodes() const { return stop_nodes_; }
  // Stop node on the path through the given leaf.
  int stop_node_of_leaf(int leaf_idx) const;
  int stop_time_of_leaf(int leaf_idx) const;
  // True on a leaf's atom iff the stop node is at the terminal layer.
  bool at_terminal(int leaf_idx) const;
  // P(tau >= T) as an exact rational.
  Rat prob_reaches_horizon(const TreeModel& model) const;
  bool identically_terminal(const TreeModel& model) const;

 private:
  std::vector<int> stop_nodes_;                // sorted node indices
  std::unordered_map<int, int> stop_of_leaf_;  // leaf node idx -> stop node idx
  std::unordered_map<int, int> time_of_leaf_;  // leaf node idx -> stop time
  int horizon_ = 0;
};

// Finite nondecreasing family T_1 <= ... <= T_K of stopping times with an
// explicit exhaustiveness flag (last element identically T).
class LocalizingSequence {
 public:
  LocalizingSequence(const TreeModel& model, std::vector<StoppingTime> times,
                     bool exhaustive);

  const std::vector<StoppingTime>& times() const { return times_; }
  int size() const { return static_cast<int>(times_.size()); }
  const StoppingTime& at(int k) const { return times_[k]; }  // 0-based
  bool exhaustive() const { return exhaustive_; }

  // Trivial sequence (T_1 identically T), the default for pricing queries.
  static LocalizingSequence trivial(const TreeModel& model);

 private:
  std::vector<StoppingTime> times_;
  bool exhaustive_;
};

enum class ConeKind { Unconstrained, NoShort, Polyhedral };

// Closed convex polyhedral cone of admissible position vectors.
struct Cone {
  ConeKind kind = ConeKind::Unconstrained;
  int dim = 0;
  int no_short_n = 0;                       // NoShort: first n coordinates >= 0
  std::vector<std::vector<Rat>> rows;       // Polyhedral: h in cone <=> rows*h >= 0
  std::vector<std::vector<Rat>> rays;       // conic generators

  static Cone unconstrained(int d);
  static Cone no_short(int n, int d);
  static Cone polyhedral(std::vector<std::vector<Rat>> rows, int d,
                         std::vector<std::vector<Rat>> rays = {});

  bool has_rays() const { return !rays.empty(); }
  // Membership test (uses rows for Polyhedral, coordinate signs otherwise).
  bool contains(const std::vector<Rat>& h) const;
  std::string describe() const;
};

enum class PayoffKind { European, American, Bermudan };

// Exercise values per node. Adaptedness is structural (one value per node);
// right lower-semicontinuity in time is automatic on a discrete grid and is
// recorded here rather than checked.
struct Payoff {
  PayoffKind kind = PayoffKind::European;
  int maturity = -1;                 // European: T# <= T
  std::vector<int> exercise_times;   // Bermudan: listed, strictly increasing
  std::map<int, Rat> values;         // node idx -> exercise/terminal value

  // Value at a node, throws DimensionError when absent.
  const Rat& at(int node_idx) const;
  bool has(int node_idx) const { return values.count(node_idx) > 0; }
  void validate(const TreeModel& model) const;
};

// --- operations ------------------------------------------------------------

// Prices frozen below each stop node (the stopped process S^tau);
// structure and probabilities unchanged.
TreeModel stopped_prices(const TreeModel& model, const StoppingTime& tau);

// E[X | F_t] by backward weighted averaging; input one value per leaf in
// leaves() order, output one value per time-t node in document order.
std::vector<Rat> condexp(const TreeModel& model,
                         const std::vector<Rat>& leaf_values, int t);

// E[X | node] for a single node, exact atom sum.
Rat condexp_at_node(const TreeModel& model, const std::vector<Rat>& leaf_values,
                    int node_idx);

// Number of antichain covers, saturating at cap+1 (cheap lower bound).
std::uint64_t count_stopping_times(const TreeModel& model, std::uint64_t cap);

// All stopping times, lexicographic on the sorted stop-node id lists.
// Throws CapExceeded when the count exceeds cap.
std::vector<StoppingTime> enumerate_stopping_times(const TreeModel& model,
                                                   std::uint64_t cap);

// Tree truncated at horizon t_max (nodes with t <= t_max); probabilities and
// prices unchanged. Used for trading-horizon comparisons.
TreeModel truncate_tree(const TreeModel& model, int t_max);

}  // namespace viab
