#include "viab/report_json.hpp"

#include <json.hpp>

namespace viab {

using nlohmann::json;

namespace {

json strategy_to_json(const TreeModel& model, const Strategy& s) {
  json out = json::object();
  for (int v = 0; v < model.num_nodes(); ++v) {
    if (v >= static_cast<int>(s.pos.size()) || s.pos[v].empty()) continue;
    bool all_zero = true;
    for (const Rat& x : s.pos[v])
      if (x != 0) all_zero = false;
    if (all_zero) continue;
    json arr = json::array();
    for (const Rat& x : s.pos[v]) arr.push_back(rat_to_string(x));
    out[model.node(v).id] = arr;
  }
  return out;
}

json system_to_json(const TreeModel& model, const PricingSystem& ps) {
  json out;
  json idx = json::array();
  for (auto [k, theta] : ps.index_set) idx.push_back({k, theta});
  out["index_set"] = idx;
  json dens = json::object();
  for (const auto& [key, den] : ps.densities) {
    json per_atom = json::object();
    for (int i = 0; i < model.num_leaves(); ++i)
      if (den[i] != 0)
        per_atom[model.node(model.leaves()[i]).id] = rat_to_string(den[i]);
    dens[std::to_string(key.first) + "," + std::to_string(key.second)] = per_atom;
  }
  out["densities"] = dens;
  return out;
}

}  // namespace

std::string verdict_to_json(const TreeModel& model, const Verdict& v) {
  json out;
  out["condition"] = v.condition;
  out["holds"] = v.holds;
  if (!v.note.empty()) out["note"] = v.note;
  if (v.experimental) out["experimental"] = true;
  if (!v.per_k.empty()) {
    json per_k = json::array();
    for (const auto& pk : v.per_k) {
      json e;
      e["k"] = pk.k;
      e["holds"] = pk.holds;
      if (pk.epsilon) e["epsilon"] = rat_to_string(*pk.epsilon);
      per_k.push_back(e);
    }
    out["per_k"] = per_k;
  }
  if (v.witness) out["witness"] = strategy_to_json(model, *v.witness);
  if (v.state_prices) {
    json q = json::object();
    for (int i = 0; i < model.num_leaves(); ++i)
      q[model.node(model.leaves()[i]).id] = rat_to_string((*v.state_prices)[i]);
    out["certificate"] = {{"state_prices", q}};
  }
  if (v.certificate) {
    if (!out.contains("certificate")) out["certificate"] = json::object();
    out["certificate"]["pricing_system"] = system_to_json(model, *v.certificate);
  }
  return out.dump(2) + "\n";
}

std::string price_report_to_json(const TreeModel& model, const PriceReport& r) {
  json out;
  const bool exact = (r.mode == ArithMode::Exact);
  out["mode"] = exact ? "exact" : "float";
  out["price"] = exact ? rat_to_string(r.price) : double_to_string(r.price_f);
  out["x"] = rat_to_string(r.x);
  out["cone"] = r.cone_desc;
  json strat;
  strat["pre"] = strategy_to_json(model, r.strategy.pre);
  json post = json::object();
  for (const auto& [theta, leg] : r.strategy.post) {
    json leg_json = strategy_to_json(model, leg);
    if (!leg_json.empty()) post[std::to_string(theta)] = leg_json;
  }
  strat["post"] = post;
  out["strategy"] = strat;
  switch (r.dual_status) {
    case LpStatus::Optimal:
      out["dual_value"] =
          exact ? rat_to_string(r.dual_value) : double_to_string(r.dual_value_f);
      break;
    case LpStatus::Infeasible:
      out["dual_status"] = "infeasible";
      break;
    case LpStatus::Unbounded:
      out["dual_status"] = "unbounded";
      break;
  }
  if (r.has_gap)
    out["gap"] = exact ? rat_to_string(r.gap) : double_to_string(r.gap_f);
  if (r.system) {
    out["pricing_system"] = system_to_json(model, *r.system);
    out["pricing_system"]["source"] = r.dual_source;
    out["pricing_system"]["verified"] = r.verified;
  }
  if (r.binding_credit_rows > 0)
    out["binding_credit_rows"] = r.binding_credit_rows;
  if (!r.sweep.empty()) {
    json arr = json::array();
    for (const Rat& v : r.sweep) arr.push_back(rat_to_string(v));
    out["sweep"] = arr;
  }
  return out.dump(2) + "\n";
}

std::string ps_report_to_json(const PsReport& r) {
  json out;
  out["ok"] = r.ok;
  json arr = json::array();
  for (const auto& v : r.violations) {
    json e;
    e["condition"] = v.condition;
    if (v.ray >= 0) e["ray"] = v.ray;
    if (v.theta >= 0) e[v.condition == "window" ? "step" : "theta"] = v.theta;
    if (!v.node.empty()) e["node"] = v.node;
    e["residual"] = rat_to_string(v.residual);
    arr.push_back(e);
  }
  out["violations"] = arr;
  return out.dump(2) + "\n";
}

std::string sweep_to_json(const SweepReport& r, const Rat& x,
                          const std::string& cone_desc) {
  json out;
  json arr = json::array();
  for (const Rat& v : r.pi) arr.push_back(rat_to_string(v));
  out["pi_k"] = arr;
  out["pi_full"] = rat_to_string(r.pi_full);
  out["exhaustive"] = r.exhaustive;
  out["converged"] = r.converged;
  out["x"] = rat_to_string(x);
  out["cone"] = cone_desc;
  return out.dump(2) + "\n";
}

std::string sweep_to_csv(const SweepReport& r) {
  std::string out = "k,pi_k\n";
  for (std::size_t k = 0; k < r.pi.size(); ++k)
    out += std::to_string(k + 1) + "," + rat_to_string(r.pi[k]) + "\n";
  out += "full," + rat_to_string(r.pi_full) + "\n";
  return out;
}

std::string sensitivity_to_csv(const std::vector<std::pair<Rat, Rat>>& curve) {
  std::string out = "x,pi\n";
  for (const auto& [x, pi] : curve)
    out += rat_to_string(x) + "," + rat_to_string(pi) + "\n";
  return out;
}

std::string gap_search_to_json(const GapSearchResult& r) {
  json out;
  out["evaluated"] = r.evaluated;
  out["viable"] = r.viable;
  if (r.best) {
    json b;
    b["gap"] = rat_to_string(r.best->gap);
    b["pi_full"] = rat_to_string(r.best->pi_full);
    json arr = json::array();
    for (const Rat& v : r.best->pi_k) arr.push_back(rat_to_string(v));
    b["pi_k"] = arr;
    b["model"] = json::parse(r.best->model_json);
    out["best"] = b;
  }
  return out.dump(2) + "\n";
}

}  // namespace viab
