#include "viab/strategy.hpp"

#include "viab/errors.hpp"

namespace viab {

namespace {

void check_dims(const TreeModel& model, const Strategy& s) {
  if (static_cast<int>(s.pos.size()) != model.num_nodes())
    throw DimensionError("strategy not indexed by the model's nodes");
  for (int v = 0; v < model.num_nodes(); ++v)
    if (!s.pos[v].empty() &&
        static_cast<int>(s.pos[v].size()) != model.num_assets())
      throw DimensionError("position at node '" + model.node(v).id +
                           "' has wrong dimension");
}

Rat dot_increment(const TreeModel& model, const std::vector<Rat>& pos, int from,
                  int to) {
  Rat acc = 0;
  for (int a = 0; a < model.num_assets(); ++a)
    acc += pos[a] * (model.price(to, a) - model.price(from, a));
  return acc;
}

}  // namespace

WealthProcess wealth_plain(const TreeModel& model, const Strategy& h_in,
                           const Rat& z_in) {
  Strategy h = h_in;
  for (auto& pos : h.pos)
    for (Rat& v : pos) v.canonicalize();
  Rat z = z_in;
  z.canonicalize();
  check_dims(model, h);
  WealthProcess w;
  w.z = z;
  w.value.assign(model.num_nodes(), z);
  for (int v = 0; v < model.num_nodes(); ++v) {
    const int par = model.parent(v);
    if (par < 0) continue;
    w.value[v] = w.value[par];
    if (const auto* pos = h.at(par))
      w.value[v] += dot_increment(model, *pos, par, v);
  }
  return w;
}

WealthProcess wealth(const TreeModel& model, const GeneralizedStrategy& h_in,
                     std::optional<int> theta, const Rat& z_in) {
  GeneralizedStrategy h = h_in;
  for (auto& pos : h.pre.pos)
    for (Rat& v : pos) v.canonicalize();
  for (auto& [t, leg] : h.post)
    for (auto& pos : leg.pos)
      for (Rat& v : pos) v.canonicalize();
  Rat z = z_in;
  z.canonicalize();
  check_dims(model, h.pre);
  // A missing continuation leg is the zero leg: wealth freezes after theta.
  const Strategy* post = nullptr;
  if (theta) {
    auto it = h.post.find(*theta);
    if (it != h.post.end()) {
      check_dims(model, it->second);
      post = &it->second;
    }
  }
  WealthProcess w;
  w.z = z;
  w.value.assign(model.num_nodes(), z);
  for (int v = 0; v < model.num_nodes(); ++v) {
    const int par = model.parent(v);
    if (par < 0) continue;
    w.value[v] = w.value[par];
    // Step ends at time(v): pre leg while time(v) <= theta, post leg after.
    const bool use_post = theta && model.time(v) > *theta;
    if (use_post && !post) continue;
    const Strategy& leg = use_post ? *post : h.pre;
    if (const auto* pos = leg.at(par))
      w.value[v] += dot_increment(model, *pos, par, v);
  }
  return w;
}

AdmissibilityResult check_admissible(const TreeModel& model,
                                     const GeneralizedStrategy& h,
                                     const Rat& bound, const Cone& cone) {
  AdmissibilityResult res;
  auto check_cone = [&](const Strategy& s, int theta_tag) {
    for (int v = 0; v < model.num_nodes(); ++v) {
      if (s.pos[v].empty()) continue;
      if (!cone.contains(s.pos[v])) {
        res.admissible = false;
        res.violation_node = v;
        res.violation_kind = "cone";
        res.violation_theta = theta_tag;
        return false;
      }
    }
    return true;
  };
  auto check_floor = [&](const WealthProcess& w, int theta_tag) {
    for (int v = 0; v < model.num_nodes(); ++v) {
      if (w.value[v] < -bound) {
        res.admissible = false;
        res.violation_node = v;
        res.violation_kind = "floor";
        res.violation_theta = theta_tag;
        return false;
      }
    }
    return true;
  };

  if (!check_cone(h.pre, -1)) return res;
  for (const auto& [theta, leg] : h.post)
    if (!check_cone(leg, theta)) return res;

  if (!check_floor(wealth(model, h, std::nullopt, Rat(0)), -1)) return res;
  for (int theta : h.thetas) {
    if (theta >= model.num_periods()) continue;  // pasted = pre leg
    if (!check_floor(wealth(model, h, theta, Rat(0)), theta)) return res;
  }
  return res;
}

}  // namespace viab
