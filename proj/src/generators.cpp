#include "viab/generators.hpp"

#include <algorithm>
#include <functional>

#include "viab/errors.hpp"

namespace viab {

TreeModel generate_binomial(const Rat& s0, const Rat& up, const Rat& down,
                            const Rat& p, int periods) {
  if (periods < 1) throw ParamError("periods must be >= 1");
  if (s0 <= 0) throw ParamError("initial price must be positive");
  if (up <= 1) throw ParamError("up factor must exceed 1");
  if (down <= 0 || down >= 1) throw ParamError("down factor must lie in (0,1)");
  if (p <= 0 || p >= 1) throw ParamError("probability must lie in (0,1)");

  std::vector<NodeRecord> nodes;
  int counter = 0;
  std::function<void(std::optional<std::string>, const Rat&, const Rat&, int)>
      grow = [&](std::optional<std::string> parent, const Rat& price,
                 const Rat& prob, int t) {
        NodeRecord nd;
        nd.id = "n" + std::to_string(counter++);
        nd.parent = parent;
        nd.t = t;
        nd.prob = prob;
        nd.prices = {price};
        nodes.push_back(nd);
        const std::string my_id = nd.id;
        if (t < periods) {
          grow(my_id, price * up, p, t + 1);
          grow(my_id, price * down, 1 - p, t + 1);
        }
      };
  grow(std::nullopt, s0, Rat(1), 0);
  return TreeModel(1, periods, std::move(nodes));
}

TreeModel generate_arbitrage_demo() {
  std::vector<NodeRecord> nodes;
  for (int t = 0; t <= 2; ++t) {
    NodeRecord nd;
    nd.id = "n" + std::to_string(t);
    if (t > 0) nd.parent = "n" + std::to_string(t - 1);
    nd.t = t;
    nd.prob = 1;
    nd.prices = {Rat(t + 1)};
    nodes.push_back(nd);
  }
  return TreeModel(1, 2, std::move(nodes));
}

Rat random_rat(std::mt19937_64& rng, int lo_num, int hi_num, int max_denom) {
  std::uniform_int_distribution<int> num(lo_num, hi_num);
  std::uniform_int_distribution<int> den(1, max_denom);
  return make_rat(num(rng), den(rng));
}

namespace {

struct ShapeNode {
  int parent = -1;
  int t = 0;
};

// Random tree shape within bounds; resamples toward fewer branches when the
// leaf budget is tight.
std::vector<ShapeNode> random_shape(std::mt19937_64& rng,
                                    const RandomTreeOptions& opt, int periods) {
  std::vector<ShapeNode> shape{{-1, 0}};
  std::vector<int> frontier{0};
  for (int t = 1; t <= periods; ++t) {
    std::vector<int> next;
    for (int v : frontier) {
      int remaining_leaves = static_cast<int>(frontier.size()) + static_cast<int>(next.size());
      int budget = opt.max_leaves - remaining_leaves;
      int max_b = std::min(opt.max_branches, std::max(1, budget));
      std::uniform_int_distribution<int> branches(1, max_b);
      int b = branches(rng);
      for (int j = 0; j < b; ++j) {
        shape.push_back({v, t});
        next.push_back(static_cast<int>(shape.size()) - 1);
      }
    }
    frontier = std::move(next);
  }
  return shape;
}

std::vector<Rat> random_branch_probs(std::mt19937_64& rng, int count, int denom) {
  // Positive integers w_i, probabilities w_i / sum: exact, sum to 1.
  std::uniform_int_distribution<int> w(1, denom);
  std::vector<int> weights(count);
  int total = 0;
  for (int& x : weights) {
    x = w(rng);
    total += x;
  }
  std::vector<Rat> out;
  for (int x : weights) out.push_back(make_rat(x, total));
  return out;
}

TreeModel assemble(const std::vector<ShapeNode>& shape, int periods, int d,
                   const std::vector<std::vector<Rat>>& prices,
                   const std::vector<Rat>& probs) {
  std::vector<NodeRecord> nodes(shape.size());
  for (std::size_t i = 0; i < shape.size(); ++i) {
    nodes[i].id = "n" + std::to_string(i);
    if (shape[i].parent >= 0)
      nodes[i].parent = "n" + std::to_string(shape[i].parent);
    nodes[i].t = shape[i].t;
    nodes[i].prob = probs[i];
    nodes[i].prices = prices[i];
  }
  return TreeModel(d, periods, std::move(nodes));
}

}  // namespace

TreeModel random_viable_tree(std::mt19937_64& rng, const RandomTreeOptions& opt) {
  std::uniform_int_distribution<int> periods_dist(1, opt.max_periods);
  const int periods = periods_dist(rng);
  auto shape = random_shape(rng, opt, periods);
  const int n = static_cast<int>(shape.size());

  std::vector<std::vector<int>> children(n);
  for (int i = 1; i < n; ++i) children[shape[i].parent].push_back(i);

  // Physical branch probabilities.
  std::vector<Rat> probs(n, Rat(1));
  // Construction-measure branch probabilities (independent of physical).
  std::vector<Rat> q(n, Rat(1));
  for (int i = 0; i < n; ++i) {
    if (children[i].empty()) continue;
    auto ps = random_branch_probs(rng, static_cast<int>(children[i].size()), opt.denom);
    auto qs = random_branch_probs(rng, static_cast<int>(children[i].size()), opt.denom);
    for (std::size_t j = 0; j < children[i].size(); ++j) {
      probs[children[i][j]] = ps[j];
      q[children[i][j]] = qs[j];
    }
  }

  // Leaf prices random and positive; interior prices backward conditional
  // expectations under q, optionally shrunk on supermartingale coordinates.
  std::vector<std::vector<Rat>> prices(n, std::vector<Rat>(opt.num_assets));
  for (int i = n - 1; i >= 0; --i) {
    for (int a = 0; a < opt.num_assets; ++a) {
      if (children[i].empty()) {
        prices[i][a] = random_rat(rng, 1, 16, opt.denom);
      } else {
        Rat e = 0;
        for (int c : children[i]) e += q[c] * prices[c][a];
        if (a < opt.supermartingale_coords) {
          std::uniform_int_distribution<int> bump(0, 3);
          e += make_rat(bump(rng), 8);  // price above the q-expectation: drift down
        }
        prices[i][a] = e;
      }
    }
  }
  return assemble(shape, periods, opt.num_assets, prices, probs);
}

TreeModel random_generic_tree(std::mt19937_64& rng, const RandomTreeOptions& opt) {
  std::uniform_int_distribution<int> periods_dist(1, opt.max_periods);
  const int periods = periods_dist(rng);
  auto shape = random_shape(rng, opt, periods);
  const int n = static_cast<int>(shape.size());
  std::vector<std::vector<int>> children(n);
  for (int i = 1; i < n; ++i) children[shape[i].parent].push_back(i);
  std::vector<Rat> probs(n, Rat(1));
  for (int i = 0; i < n; ++i) {
    if (children[i].empty()) continue;
    auto ps = random_branch_probs(rng, static_cast<int>(children[i].size()), opt.denom);
    for (std::size_t j = 0; j < children[i].size(); ++j)
      probs[children[i][j]] = ps[j];
  }
  std::vector<std::vector<Rat>> prices(n, std::vector<Rat>(opt.num_assets));
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < opt.num_assets; ++a)
      prices[i][a] = random_rat(rng, 1, 16, opt.denom);
  return assemble(shape, periods, opt.num_assets, prices, probs);
}

StoppingTime random_stopping_time(std::mt19937_64& rng, const TreeModel& model,
                                  double stop_bias) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<int> stops;
  std::function<void(int)> walk = [&](int v) {
    if (model.is_leaf(v) || coin(rng) < stop_bias) {
      stops.push_back(v);
      return;
    }
    for (int c : model.children(v)) walk(c);
  };
  walk(model.root());
  return StoppingTime(model, std::move(stops));
}

LocalizingSequence random_localizing_sequence(std::mt19937_64& rng,
                                              const TreeModel& model,
                                              int length, bool exhaustive) {
  // Draw stopping times and sort them pathwise by iterated refinement: each
  // next element stops at or below the previous one's stop nodes.
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<StoppingTime> seq;
  std::vector<int> current;
  {
    std::function<void(int)> walk = [&](int v) {
      if (model.is_leaf(v) || coin(rng) < 0.5) {
        current.push_back(v);
        return;
      }
      for (int c : model.children(v)) walk(c);
    };
    walk(model.root());
  }
  seq.emplace_back(model, current);
  for (int k = 1; k < length; ++k) {
    const bool last = (k == length - 1);
    std::vector<int> next;
    for (int s : current) {
      std::function<void(int)> walk = [&](int v) {
        if (model.is_leaf(v)) {
          next.push_back(v);
          return;
        }
        if (!(last && exhaustive) && coin(rng) < 0.4) {
          next.push_back(v);
          return;
        }
        for (int c : model.children(v)) walk(c);
      };
      if (last && exhaustive) {
        for (int leaf : model.leaves_under(s)) next.push_back(leaf);
      } else {
        walk(s);
      }
    }
    current = next;
    seq.emplace_back(model, current);
  }
  const bool is_exh = seq.back().identically_terminal(model);
  return LocalizingSequence(model, std::move(seq), is_exh);
}

Payoff random_american_payoff(std::mt19937_64& rng, const TreeModel& model,
                              int scale, int denom) {
  Payoff p;
  p.kind = PayoffKind::American;
  for (int v = 0; v < model.num_nodes(); ++v)
    p.values[v] = random_rat(rng, 0, scale, denom);
  p.validate(model);
  return p;
}

Payoff random_european_payoff(std::mt19937_64& rng, const TreeModel& model,
                              int maturity, int scale, int denom) {
  Payoff p;
  p.kind = PayoffKind::European;
  p.maturity = maturity;
  for (int v : model.nodes_at_time(maturity))
    p.values[v] = random_rat(rng, 0, scale, denom);
  p.validate(model);
  return p;
}

}  // namespace viab
