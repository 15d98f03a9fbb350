#include "viab/market_tree.hpp"

#include <algorithm>
#include <functional>

#include "viab/errors.hpp"

namespace viab {

TreeModel::TreeModel(int num_assets, int num_periods, std::vector<NodeRecord> nodes)
    : d_(num_assets), T_(num_periods), nodes_(std::move(nodes)) {
  validate_and_index();
}

void TreeModel::validate_and_index() {
  if (d_ <= 0) throw SchemaError("d must be a positive integer");
  if (T_ <= 0) throw SchemaError("T must be a positive integer");
  if (nodes_.empty()) throw SchemaError("empty node list");

  const int n = static_cast<int>(nodes_.size());
  by_id_.reserve(nodes_.size());
  for (int i = 0; i < n; ++i) {
    if (nodes_[i].id.empty()) throw SchemaError("node with empty id");
    if (!by_id_.emplace(nodes_[i].id, i).second)
      throw InvariantError(nodes_[i].id, "duplicate node id");
    // mpq arithmetic assumes canonical operands; caller-built records may
    // carry unreduced fractions.
    nodes_[i].prob.canonicalize();
    for (Rat& p : nodes_[i].prices) p.canonicalize();
  }

  parent_.assign(n, -1);
  children_.assign(n, {});
  for (int i = 0; i < n; ++i) {
    const NodeRecord& nd = nodes_[i];
    if (nd.t < 0 || nd.t > T_)
      throw InvariantError(nd.id, "time index out of range");
    if (static_cast<int>(nd.prices.size()) != d_)
      throw InvariantError(nd.id, "price vector has wrong dimension");
    for (const Rat& p : nd.prices)
      if (p < 0) throw InvariantError(nd.id, "negative price");
    if (nd.prob <= 0 || nd.prob > 1)
      throw InvariantError(nd.id, "branch probability outside (0,1]");
    if (!nd.parent.has_value()) {
      if (nd.t != 0) throw InvariantError(nd.id, "parentless node not at time 0");
      if (root_ != -1) throw InvariantError(nd.id, "multiple roots");
      root_ = i;
      if (nd.prob != 1) throw InvariantError(nd.id, "root probability must be 1");
    } else {
      auto it = by_id_.find(*nd.parent);
      if (it == by_id_.end())
        throw InvariantError(nd.id, "unknown parent '" + *nd.parent + "'");
      parent_[i] = it->second;
      if (nodes_[it->second].t != nd.t - 1)
        throw InvariantError(nd.id, "parent not one period earlier");
      children_[it->second].push_back(i);
    }
  }
  if (root_ == -1) throw SchemaError("no root node");

  // Sibling probabilities must sum to exactly 1.
  for (int i = 0; i < n; ++i) {
    if (children_[i].empty()) continue;
    Rat sum = 0;
    for (int c : children_[i]) sum += nodes_[c].prob;
    if (sum != 1) throw InvariantError(nodes_[i].id, "probability sum");
  }

  // Every non-terminal node has >= 1 child; all leaves at time T;
  // every node reachable from the root.
  std::vector<char> reach(n, 0);
  std::function<void(int)> mark = [&](int v) {
    reach[v] = 1;
    for (int c : children_[v]) mark(c);
  };
  mark(root_);
  for (int i = 0; i < n; ++i) {
    if (!reach[i]) throw InvariantError(nodes_[i].id, "unreachable node");
    if (children_[i].empty() && nodes_[i].t != T_)
      throw InvariantError(nodes_[i].id, "leaf before the terminal layer");
  }

  atom_.assign(n, Rat(0));
  atom_[root_] = 1;
  leaf_ordinal_.assign(n, -1);
  // Document order is compatible with parent-before-child (validated above),
  // so one forward pass fills atom probabilities.
  for (int i = 0; i < n; ++i) {
    if (parent_[i] >= 0) {
      if (parent_[i] > i)
        throw InvariantError(nodes_[i].id, "parent appears after child");
      atom_[i] = atom_[parent_[i]] * nodes_[i].prob;
    }
    if (children_[i].empty()) {
      leaf_ordinal_[i] = static_cast<int>(leaves_.size());
      leaves_.push_back(i);
    }
  }

  under_.assign(n, {});
  for (int i = n - 1; i >= 0; --i) {
    if (children_[i].empty()) {
      under_[i].push_back(i);
    } else {
      for (int c : children_[i])
        under_[i].insert(under_[i].end(), under_[c].begin(), under_[c].end());
    }
  }
}

int TreeModel::ancestor_at(int idx, int t) const {
  if (t > nodes_[idx].t || t < 0)
    throw DimensionError("ancestor_at: bad time " + std::to_string(t));
  int v = idx;
  while (nodes_[v].t > t) v = parent_[v];
  return v;
}

int TreeModel::index_of(const std::string& id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) throw SchemaError("unknown node id '" + id + "'");
  return it->second;
}

std::vector<int> TreeModel::nodes_at_time(int t) const {
  std::vector<int> out;
  for (int i = 0; i < num_nodes(); ++i)
    if (nodes_[i].t == t) out.push_back(i);
  return out;
}

// --- StoppingTime ------------------------------------------------------------

StoppingTime::StoppingTime(const TreeModel& model, std::vector<int> stop_nodes)
    : stop_nodes_(std::move(stop_nodes)), horizon_(model.num_periods()) {
  std::sort(stop_nodes_.begin(), stop_nodes_.end());
  stop_nodes_.erase(std::unique(stop_nodes_.begin(), stop_nodes_.end()),
                    stop_nodes_.end());
  std::vector<char> in_set(model.num_nodes(), 0);
  for (int v : stop_nodes_) {
    if (v < 0 || v >= model.num_nodes())
      throw InvalidStoppingTime("stop node index out of range");
    in_set[v] = 1;
  }
  for (int leaf : model.leaves()) {
    int hits = 0, stop = -1;
    for (int v = leaf; v != -1; v = model.parent(v)) {
      if (in_set[v]) {
        ++hits;
        stop = v;
      }
    }
    if (hits != 1)
      throw InvalidStoppingTime("path through leaf '" + model.node(leaf).id +
                                "' hits " + std::to_string(hits) +
                                " stop nodes (antichain cover requires 1)");
    stop_of_leaf_[leaf] = stop;
    time_of_leaf_[leaf] = model.time(stop);
  }
}

int StoppingTime::stop_node_of_leaf(int leaf_idx) const {
  auto it = stop_of_leaf_.find(leaf_idx);
  if (it == stop_of_leaf_.end())
    throw DimensionError("stop_node_of_leaf: not a leaf of this model");
  return it->second;
}

int StoppingTime::stop_time_of_leaf(int leaf_idx) const {
  auto it = time_of_leaf_.find(leaf_idx);
  if (it == time_of_leaf_.end())
    throw DimensionError("stop_time_of_leaf: not a leaf of this model");
  return it->second;
}

bool StoppingTime::at_terminal(int leaf_idx) const {
  return stop_time_of_leaf(leaf_idx) == horizon_;
}

Rat StoppingTime::prob_reaches_horizon(const TreeModel& model) const {
  Rat p = 0;
  for (int leaf : model.leaves())
    if (at_terminal(leaf)) p += model.atom_prob(leaf);
  return p;
}

bool StoppingTime::identically_terminal(const TreeModel& model) const {
  for (int v : stop_nodes_)
    if (model.time(v) != model.num_periods()) return false;
  return true;
}

// --- LocalizingSequence ------------------------------------------------------

LocalizingSequence::LocalizingSequence(const TreeModel& model,
                                       std::vector<StoppingTime> times,
                                       bool exhaustive)
    : times_(std::move(times)), exhaustive_(exhaustive) {
  if (times_.empty()) throw InvalidStoppingTime("empty localizing sequence");
  for (std::size_t k = 0; k + 1 < times_.size(); ++k) {
    for (int leaf : model.leaves()) {
      if (times_[k].stop_time_of_leaf(leaf) >
          times_[k + 1].stop_time_of_leaf(leaf))
        throw InvalidStoppingTime(
            "sequence not pathwise nondecreasing at k=" + std::to_string(k + 1) +
            " through leaf '" + model.node(leaf).id + "'");
    }
    if (times_[k].prob_reaches_horizon(model) >
        times_[k + 1].prob_reaches_horizon(model))
      throw InvalidStoppingTime("P(T_k >= T) not nondecreasing");
  }
  const bool last_terminal = times_.back().identically_terminal(model);
  if (exhaustive_ && !last_terminal)
    throw InvalidStoppingTime("exhaustive flag set but last element is not T");
  if (!exhaustive_ && last_terminal)
    throw InvalidStoppingTime("last element is T but exhaustive flag unset");
}

LocalizingSequence LocalizingSequence::trivial(const TreeModel& model) {
  std::vector<StoppingTime> t;
  t.emplace_back(model, model.leaves());
  return LocalizingSequence(model, std::move(t), /*exhaustive=*/true);
}

// --- Cone --------------------------------------------------------------------

Cone Cone::unconstrained(int d) {
  Cone c;
  c.kind = ConeKind::Unconstrained;
  c.dim = d;
  for (int i = 0; i < d; ++i) {
    std::vector<Rat> plus(d, Rat(0)), minus(d, Rat(0));
    plus[i] = 1;
    minus[i] = -1;
    c.rays.push_back(plus);
    c.rays.push_back(minus);
  }
  return c;
}

Cone Cone::no_short(int n, int d) {
  if (n < 1 || n > d)
    throw ParamError("no-short count must satisfy 1 <= n <= d");
  Cone c;
  c.kind = ConeKind::NoShort;
  c.dim = d;
  c.no_short_n = n;
  for (int i = 0; i < d; ++i) {
    std::vector<Rat> plus(d, Rat(0));
    plus[i] = 1;
    c.rays.push_back(plus);
    if (i >= n) {
      std::vector<Rat> minus(d, Rat(0));
      minus[i] = -1;
      c.rays.push_back(minus);
    }
  }
  return c;
}

Cone Cone::polyhedral(std::vector<std::vector<Rat>> rows, int d,
                      std::vector<std::vector<Rat>> rays) {
  for (auto& row : rows)
    for (Rat& v : row) v.canonicalize();
  for (auto& ray : rays)
    for (Rat& v : ray) v.canonicalize();
  Cone c;
  c.kind = ConeKind::Polyhedral;
  c.dim = d;
  c.rows = std::move(rows);
  c.rays = std::move(rays);
  for (const auto& r : c.rows)
    if (static_cast<int>(r.size()) != d)
      throw SchemaError("polyhedral cone row has wrong dimension");
  for (const auto& r : c.rays)
    if (static_cast<int>(r.size()) != d)
      throw SchemaError("polyhedral cone ray has wrong dimension");
  return c;
}

bool Cone::contains(const std::vector<Rat>& h) const {
  if (static_cast<int>(h.size()) != dim) return false;
  switch (kind) {
    case ConeKind::Unconstrained:
      return true;
    case ConeKind::NoShort:
      for (int i = 0; i < no_short_n; ++i)
        if (h[i] < 0) return false;
      return true;
    case ConeKind::Polyhedral:
      for (const auto& row : rows) {
        Rat dot = 0;
        for (int i = 0; i < dim; ++i) dot += row[i] * h[i];
        if (dot < 0) return false;
      }
      return true;
  }
  return false;
}

std::string Cone::describe() const {
  switch (kind) {
    case ConeKind::Unconstrained:
      return "unconstrained";
    case ConeKind::NoShort:
      return "no-short:" + std::to_string(no_short_n);
    case ConeKind::Polyhedral:
      return "polyhedral";
  }
  return "?";
}

// --- Payoff ------------------------------------------------------------------

const Rat& Payoff::at(int node_idx) const {
  auto it = values.find(node_idx);
  if (it == values.end())
    throw DimensionError("payoff value missing for node index " +
                         std::to_string(node_idx));
  return it->second;
}

void Payoff::validate(const TreeModel& model) const {
  switch (kind) {
    case PayoffKind::European: {
      if (maturity < 1 || maturity > model.num_periods())
        throw SchemaError("european maturity outside 1..T");
      for (int v : model.nodes_at_time(maturity))
        if (!has(v))
          throw InvariantError(model.node(v).id, "missing payoff value");
      break;
    }
    case PayoffKind::American: {
      for (int v = 0; v < model.num_nodes(); ++v)
        if (!has(v))
          throw InvariantError(model.node(v).id, "missing payoff value");
      break;
    }
    case PayoffKind::Bermudan: {
      if (exercise_times.empty())
        throw SchemaError("bermudan payoff without exercise times");
      for (std::size_t i = 0; i + 1 < exercise_times.size(); ++i)
        if (exercise_times[i] >= exercise_times[i + 1])
          throw SchemaError("bermudan exercise times not strictly increasing");
      for (int t : exercise_times) {
        if (t < 0 || t > model.num_periods())
          throw SchemaError("bermudan exercise time outside 0..T");
        for (int v : model.nodes_at_time(t))
          if (!has(v))
            throw InvariantError(model.node(v).id, "missing payoff value");
      }
      break;
    }
  }
}

// --- operations ----------------------------------------------------------------

TreeModel stopped_prices(const TreeModel& model, const StoppingTime& tau) {
  std::vector<NodeRecord> nodes = model.nodes();
  // Freeze the subtree below each stop node at the stop-node prices.
  std::function<void(int, const std::vector<Rat>&)> freeze =
      [&](int v, const std::vector<Rat>& prices) {
        for (int c : model.children(v)) {
          nodes[c].prices = prices;
          freeze(c, prices);
        }
      };
  for (int s : tau.stop_nodes()) freeze(s, nodes[s].prices);
  return TreeModel(model.num_assets(), model.num_periods(), std::move(nodes));
}

std::vector<Rat> condexp(const TreeModel& model,
                         const std::vector<Rat>& leaf_values, int t) {
  if (static_cast<int>(leaf_values.size()) != model.num_leaves())
    throw DimensionError("condexp: expected one value per leaf");
  if (t < 0 || t > model.num_periods())
    throw DimensionError("condexp: time index out of range");
  std::vector<Rat> out;
  for (int v : model.nodes_at_time(t))
    out.push_back(condexp_at_node(model, leaf_values, v));
  return out;
}

Rat condexp_at_node(const TreeModel& model, const std::vector<Rat>& leaf_values,
                    int node_idx) {
  if (static_cast<int>(leaf_values.size()) != model.num_leaves())
    throw DimensionError("condexp_at_node: expected one value per leaf");
  Rat acc = 0;
  for (int leaf : model.leaves_under(node_idx))
    acc += model.atom_prob(leaf) * leaf_values[model.leaf_ordinal(leaf)];
  return acc / model.atom_prob(node_idx);
}

namespace {

std::uint64_t count_rec(const TreeModel& model, int v, std::uint64_t cap) {
  if (model.is_leaf(v)) return 1;
  std::uint64_t prod = 1;
  for (int c : model.children(v)) {
    prod *= count_rec(model, c, cap);
    if (prod > cap) return cap + 1;  // saturate
  }
  std::uint64_t total = prod + 1;  // "+1": stop at v itself
  return total > cap ? cap + 1 : total;
}

void enumerate_rec(const TreeModel& model, int v, std::uint64_t cap,
                   std::vector<std::vector<int>>& out) {
  // All antichain covers of the subtree at v, each as a sorted node list.
  out.clear();
  out.push_back({v});
  if (model.is_leaf(v)) return;
  std::vector<std::vector<std::vector<int>>> per_child;
  for (int c : model.children(v)) {
    per_child.emplace_back();
    enumerate_rec(model, c, cap, per_child.back());
  }
  std::vector<std::vector<int>> combos{{}};
  for (const auto& options : per_child) {
    std::vector<std::vector<int>> next;
    for (const auto& base : combos) {
      for (const auto& opt : options) {
        std::vector<int> merged = base;
        merged.insert(merged.end(), opt.begin(), opt.end());
        next.push_back(std::move(merged));
        if (out.size() + next.size() > cap + 1)
          throw CapExceeded(out.size() + next.size());
      }
    }
    combos = std::move(next);
  }
  out.insert(out.end(), combos.begin(), combos.end());
}

}  // namespace

std::uint64_t count_stopping_times(const TreeModel& model, std::uint64_t cap) {
  return count_rec(model, model.root(), cap);
}

std::vector<StoppingTime> enumerate_stopping_times(const TreeModel& model,
                                                   std::uint64_t cap) {
  const std::uint64_t count = count_stopping_times(model, cap);
  if (count > cap) throw CapExceeded(count);
  std::vector<std::vector<int>> sets;
  enumerate_rec(model, model.root(), cap, sets);

  // Deterministic order: lexicographic on the sorted stop-node id lists.
  std::vector<std::vector<std::string>> keys(sets.size());
  std::vector<std::size_t> order(sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) {
    std::sort(sets[i].begin(), sets[i].end());
    for (int v : sets[i]) keys[i].push_back(model.node(v).id);
    std::sort(keys[i].begin(), keys[i].end());
    order[i] = i;
  }
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });

  std::vector<StoppingTime> out;
  out.reserve(sets.size());
  for (std::size_t i : order) out.emplace_back(model, sets[i]);
  return out;
}

TreeModel truncate_tree(const TreeModel& model, int t_max) {
  if (t_max < 1 || t_max > model.num_periods())
    throw ParamError("truncate_tree: horizon outside 1..T");
  std::vector<NodeRecord> nodes;
  for (const NodeRecord& nd : model.nodes())
    if (nd.t <= t_max) nodes.push_back(nd);
  return TreeModel(model.num_assets(), t_max, std::move(nodes));
}

}  // namespace viab
