#include "viab/model_io.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "viab/errors.hpp"

namespace viab {

using nlohmann::json;

namespace {

Rat rat_from_json(const json& j, const std::string& where) {
  if (j.is_string()) return rat_from_string(j.get<std::string>());
  if (j.is_number_integer())
    return Rat(static_cast<long>(j.get<std::int64_t>()));
  if (j.is_number_float())
    throw SchemaError(where +
                      ": non-integer JSON numbers are inexact; quote the "
                      "value as a decimal or \"p/q\" string");
  throw SchemaError(where + ": expected a rational");
}

std::string id_from_json(const json& j, const std::string& where) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<std::int64_t>());
  throw SchemaError(where + ": expected a node id");
}

const json& require(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(where + ": missing field '" + key + "'");
  return *it;
}

Payoff parse_payoff(const json& j, const TreeModel& model) {
  Payoff p;
  const std::string kind = require(j, "kind", "payoff").get<std::string>();
  if (kind == "european")
    p.kind = PayoffKind::European;
  else if (kind == "american")
    p.kind = PayoffKind::American;
  else if (kind == "bermudan")
    p.kind = PayoffKind::Bermudan;
  else
    throw SchemaError("payoff: unknown kind '" + kind + "'");

  if (p.kind == PayoffKind::European) {
    auto it = j.find("maturity");
    p.maturity = (it != j.end()) ? it->get<int>() : model.num_periods();
  }
  if (p.kind == PayoffKind::Bermudan) {
    for (const auto& t : require(j, "exercise_times", "payoff"))
      p.exercise_times.push_back(t.get<int>());
  }
  const json& values = require(j, "values", "payoff");
  if (!values.is_object()) throw SchemaError("payoff: values must be an object");
  for (auto it = values.begin(); it != values.end(); ++it)
    p.values[model.index_of(it.key())] =
        rat_from_json(it.value(), "payoff value at '" + it.key() + "'");
  p.validate(model);
  return p;
}

Cone parse_cone(const json& j, int d) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "unconstrained") return Cone::unconstrained(d);
    throw SchemaError("cone: unknown variant '" + s + "'");
  }
  if (j.is_object()) {
    if (j.contains("no_short")) return Cone::no_short(j["no_short"].get<int>(), d);
    if (j.contains("polyhedral")) {
      std::vector<std::vector<Rat>> rows;
      for (const auto& row : j["polyhedral"]) {
        std::vector<Rat> r;
        for (const auto& v : row) r.push_back(rat_from_json(v, "cone row"));
        rows.push_back(std::move(r));
      }
      std::vector<std::vector<Rat>> rays;
      if (j.contains("rays")) {
        for (const auto& ray : j["rays"]) {
          std::vector<Rat> r;
          for (const auto& v : ray) r.push_back(rat_from_json(v, "cone ray"));
          rays.push_back(std::move(r));
        }
      }
      return Cone::polyhedral(std::move(rows), d, std::move(rays));
    }
  }
  throw SchemaError("cone: expected \"unconstrained\", {\"no_short\": n} or "
                    "{\"polyhedral\": rows}");
}

}  // namespace

ModelDocument parse_model(const std::string& bytes) {
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("top level must be an object");

  const int d = require(j, "d", "model").get<int>();
  const int T = require(j, "T", "model").get<int>();
  const json& jnodes = require(j, "nodes", "model");
  if (!jnodes.is_array()) throw SchemaError("nodes must be an array");

  std::vector<NodeRecord> nodes;
  nodes.reserve(jnodes.size());
  for (const auto& jn : jnodes) {
    NodeRecord nd;
    nd.id = id_from_json(require(jn, "id", "node"), "node id");
    const std::string where = "node '" + nd.id + "'";
    if (jn.contains("parent") && !jn["parent"].is_null())
      nd.parent = id_from_json(jn["parent"], where + " parent");
    nd.t = require(jn, "t", where).get<int>();
    nd.prob = rat_from_json(require(jn, "prob", where), where + " prob");
    const json& jp = require(jn, "prices", where);
    if (!jp.is_array()) throw SchemaError(where + ": prices must be an array");
    for (const auto& v : jp) nd.prices.push_back(rat_from_json(v, where + " price"));
    if (jn.contains("label")) nd.label = jn["label"].get<std::string>();
    nodes.push_back(std::move(nd));
  }

  TreeModel model(d, T, std::move(nodes));

  ModelDocument doc{std::move(model), std::nullopt, std::nullopt, std::nullopt};

  if (j.contains("localizing")) {
    const json& jl = j["localizing"];
    const json& jtimes = jl.is_object() ? require(jl, "times", "localizing") : jl;
    bool exhaustive = jl.is_object() && jl.contains("exhaustive")
                          ? jl["exhaustive"].get<bool>()
                          : false;
    std::vector<StoppingTime> times;
    for (const auto& jt : jtimes) {
      std::vector<int> stop;
      for (const auto& v : jt)
        stop.push_back(doc.model.index_of(id_from_json(v, "localizing")));
      times.emplace_back(doc.model, std::move(stop));
    }
    doc.localizing = LocalizingSequence(doc.model, std::move(times), exhaustive);
  }

  if (j.contains("payoff")) doc.payoff = parse_payoff(j["payoff"], doc.model);
  if (j.contains("cone")) doc.cone = parse_cone(j["cone"], d);
  return doc;
}

std::string serialize_model(const ModelDocument& doc) {
  const TreeModel& m = doc.model;
  json j;
  j["d"] = m.num_assets();
  j["T"] = m.num_periods();
  json jnodes = json::array();
  for (const NodeRecord& nd : m.nodes()) {
    json jn;
    jn["id"] = nd.id;
    if (nd.parent)
      jn["parent"] = *nd.parent;
    else
      jn["parent"] = nullptr;
    jn["t"] = nd.t;
    jn["prob"] = rat_to_string(nd.prob);
    json prices = json::array();
    for (const Rat& p : nd.prices) prices.push_back(rat_to_string(p));
    jn["prices"] = prices;
    if (!nd.label.empty()) jn["label"] = nd.label;
    jnodes.push_back(jn);
  }
  j["nodes"] = jnodes;

  if (doc.localizing) {
    json jtimes = json::array();
    for (const StoppingTime& st : doc.localizing->times()) {
      json ids = json::array();
      for (int v : st.stop_nodes()) ids.push_back(m.node(v).id);
      jtimes.push_back(ids);
    }
    j["localizing"] = {{"times", jtimes},
                       {"exhaustive", doc.localizing->exhaustive()}};
  }

  if (doc.payoff) {
    const Payoff& p = *doc.payoff;
    json jp;
    switch (p.kind) {
      case PayoffKind::European:
        jp["kind"] = "european";
        jp["maturity"] = p.maturity;
        break;
      case PayoffKind::American:
        jp["kind"] = "american";
        break;
      case PayoffKind::Bermudan:
        jp["kind"] = "bermudan";
        jp["exercise_times"] = p.exercise_times;
        break;
    }
    json values;
    for (const auto& [idx, val] : p.values)
      values[m.node(idx).id] = rat_to_string(val);
    jp["values"] = values;
    j["payoff"] = jp;
  }

  if (doc.cone) {
    const Cone& c = *doc.cone;
    switch (c.kind) {
      case ConeKind::Unconstrained:
        j["cone"] = "unconstrained";
        break;
      case ConeKind::NoShort:
        j["cone"] = {{"no_short", c.no_short_n}};
        break;
      case ConeKind::Polyhedral: {
        json rows = json::array();
        for (const auto& row : c.rows) {
          json r = json::array();
          for (const Rat& v : row) r.push_back(rat_to_string(v));
          rows.push_back(r);
        }
        json jc;
        jc["polyhedral"] = rows;
        if (!c.rays.empty()) {
          json rays = json::array();
          for (const auto& ray : c.rays) {
            json r = json::array();
            for (const Rat& v : ray) r.push_back(rat_to_string(v));
            rays.push_back(r);
          }
          jc["rays"] = rays;
        }
        j["cone"] = jc;
        break;
      }
    }
  }

  return j.dump(2) + "\n";
}

ModelDocument load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

}  // namespace viab
