#pragma once

#include <map>
#include <optional>
#include <vector>

#include "viab/market_tree.hpp"

namespace viab {

// Predictable trading strategy: the position held over the outgoing period
// of each non-terminal node, indexed by the decision node.
struct Strategy {
  // pos[node] is a d-vector; empty for leaves and for nodes a leg does not
  // cover (treated as zero positions).
  std::vector<std::vector<Rat>> pos;

  static Strategy zeros(const TreeModel& model) {
    Strategy s;
    s.pos.assign(model.num_nodes(), {});
    return s;
  }
  const std::vector<Rat>* at(int node) const {
    if (node < 0 || node >= static_cast<int>(pos.size()) || pos[node].empty())
      return nullptr;
    return &pos[node];
  }
};

// Pre-exercise strategy plus one post-exercise continuation leg per grid
// date theta; the pasted strategy plays `pre` on steps ending at or before
// theta and `post[theta]` strictly after.
struct GeneralizedStrategy {
  Strategy pre;
  std::vector<int> thetas;       // exercise grid, increasing
  std::map<int, Strategy> post;  // theta -> continuation leg
};

// Node-indexed wealth including the initial capital z.
struct WealthProcess {
  Rat z = 0;
  std::vector<Rat> value;  // per node
};

// Wealth of the pasted strategy H(theta) (or of the pre leg alone when
// theta is absent): exact telescoping sums of position * price increment.
WealthProcess wealth(const TreeModel& model, const GeneralizedStrategy& h,
                     std::optional<int> theta, const Rat& z);

// Wealth of a plain strategy.
WealthProcess wealth_plain(const TreeModel& model, const Strategy& h, const Rat& z);

struct AdmissibilityResult {
  bool admissible = true;
  int violation_node = -1;     // first violating node, document order
  std::string violation_kind;  // "floor" or "cone"
  int violation_theta = -2;    // leg (-1 pre; theta for post legs)
};

// True iff every leg's wealth stays >= -bound at every node and every
// position lies in the cone. Checks the pre leg and each pasted leg.
AdmissibilityResult check_admissible(const TreeModel& model,
                                     const GeneralizedStrategy& h,
                                     const Rat& bound, const Cone& cone);

}  // namespace viab
