// viabhedge: superhedging prices, arbitrage checks and pricing-system
// verification on scenario-tree market models.

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "viab/errors.hpp"
#include "viab/generators.hpp"
#include "viab/model_io.hpp"
#include "viab/report_json.hpp"
#include "viab/superhedge.hpp"
#include "viab/viability.hpp"

using namespace viab;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kConditionFails = 1, kInputError = 2, kNumError = 3 };

int log_level() {
  const char* env = std::getenv("VIABHEDGE_LOG");
  if (!env) return 0;
  const std::string v = env;
  if (v == "debug") return 2;
  if (v == "info") return 1;
  return 0;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[info] " << msg << "\n";
}

void log_debug(const std::string& msg) {
  if (log_level() >= 2) std::cerr << "[debug] " << msg << "\n";
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw SchemaError("cannot write '" + out_path + "'");
  out << text;
}

Cone parse_cone_flag(const std::string& flag, int d,
                     const std::optional<Cone>& from_model) {
  if (flag.empty()) {
    if (from_model) return *from_model;
    return Cone::unconstrained(d);
  }
  if (flag == "unconstrained") return Cone::unconstrained(d);
  if (flag.rfind("no-short:", 0) == 0)
    return Cone::no_short(std::stoi(flag.substr(9)), d);
  if (flag.rfind("polyhedral:", 0) == 0) {
    std::ifstream in(flag.substr(11));
    if (!in) throw SchemaError("cannot open cone file '" + flag.substr(11) + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    json j = json::parse(ss.str(), nullptr, false);
    if (j.is_discarded() || !j.contains("polyhedral"))
      throw SchemaError("cone file must carry a 'polyhedral' row matrix");
    std::vector<std::vector<Rat>> rows, rays;
    for (const auto& row : j["polyhedral"]) {
      std::vector<Rat> r;
      for (const auto& v : row) r.push_back(rat_from_string(v.get<std::string>()));
      rows.push_back(std::move(r));
    }
    if (j.contains("rays"))
      for (const auto& ray : j["rays"]) {
        std::vector<Rat> r;
        for (const auto& v : ray) r.push_back(rat_from_string(v.get<std::string>()));
        rays.push_back(std::move(r));
      }
    return Cone::polyhedral(std::move(rows), d, std::move(rays));
  }
  throw SchemaError("bad --cone value '" + flag + "'");
}

std::vector<int> parse_theta_flag(const std::string& flag) {
  std::vector<int> out;
  if (flag.empty() || flag == "all") return out;
  std::stringstream ss(flag);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  return out;
}

PricingSystem parse_system_json(const TreeModel& model, const json& j) {
  if (!j.contains("pricing_system"))
    throw SchemaError("report carries no 'pricing_system'");
  const json& ps = j["pricing_system"];
  PricingSystem out;
  for (const auto& pair : ps.at("index_set"))
    out.index_set.emplace_back(pair.at(0).get<int>(), pair.at(1).get<int>());
  for (auto [k, theta] : out.index_set) {
    const std::string key = std::to_string(k) + "," + std::to_string(theta);
    std::vector<Rat> den(model.num_leaves(), Rat(0));
    const json& atoms = ps.at("densities").at(key);
    for (auto it = atoms.begin(); it != atoms.end(); ++it) {
      const int node = model.index_of(it.key());
      const int ord = model.leaf_ordinal(node);
      if (ord < 0) throw SchemaError("density key is not a leaf: " + it.key());
      den[ord] = rat_from_string(it.value().get<std::string>());
    }
    out.densities[{k, theta}] = std::move(den);
  }
  return out;
}

struct CommonFlags {
  std::string model_path;
  std::string x = "0";
  std::string cone;
  std::string mode = "exact";
  double tol = 1e-7;
  std::string theta = "all";
  std::string format = "json";
  std::string out;
  bool verify = false;
  int k = 0;
  int k_max = 0;
};

HedgeQuery make_query(const ModelDocument& doc, const CommonFlags& f,
                      bool need_european) {
  if (!doc.payoff) throw SchemaError("model file carries no payoff");
  if (need_european && doc.payoff->kind != PayoffKind::European)
    throw SchemaError("this command expects a European payoff");
  if (!need_european && doc.payoff->kind == PayoffKind::European)
    throw SchemaError("this command expects an American or Bermudan payoff");
  HedgeQuery q;
  q.payoff = *doc.payoff;
  q.x = rat_from_string(f.x);
  q.cone = parse_cone_flag(f.cone, doc.model.num_assets(), doc.cone);
  q.seq = doc.localizing;
  q.thetas = parse_theta_flag(f.theta);
  q.mode = (f.mode == "float") ? ArithMode::Float : ArithMode::Exact;
  q.tol = f.tol;
  return q;
}

int run_price(const CommonFlags& f, bool european) {
  ModelDocument doc = load_model_file(f.model_path);
  HedgeQuery q = make_query(doc, f, european);
  log_info("pricing " + f.model_path + " in " + f.mode + " mode");
  log_debug("model: " + std::to_string(doc.model.num_nodes()) + " nodes, " +
            std::to_string(doc.model.num_leaves()) + " atoms, horizon " +
            std::to_string(doc.model.num_periods()) + ", cone " +
            q.cone.describe());
  PriceReport rep =
      european ? price_european(doc.model, q) : price_american(doc.model, q);
  if (f.verify) {
    if (!rep.system) throw NumericalBreakdown("no pricing system extracted");
    const LocalizingSequence seq =
        q.seq ? *q.seq : LocalizingSequence::trivial(doc.model);
    const Rat tol = q.mode == ArithMode::Exact ? Rat(0) : Rat(q.tol);
    PsReport check =
        verify_pricing_system(doc.model, seq, *rep.system, q.cone, tol);
    if (!check.ok)
      throw NumericalBreakdown("dual verification failed: " +
                               ps_report_to_json(check));
  }
  emit(price_report_to_json(doc.model, rep), f.out);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"superhedging and viability toolkit for scenario-tree models"};
  app.require_subcommand(1);
  CommonFlags f;

  auto add_common = [&](CLI::App* cmd, bool with_model = true) {
    if (with_model) cmd->add_option("model", f.model_path, "model JSON file")->required();
    cmd->add_option("--x", f.x, "credit constraint (rational)");
    cmd->add_option("--cone", f.cone,
                    "unconstrained | no-short:<n> | polyhedral:<file>");
    cmd->add_option("--mode", f.mode, "exact | float");
    cmd->add_option("--tol", f.tol, "float-mode tolerance");
    cmd->add_option("--theta", f.theta, "all | comma-separated grid times");
    cmd->add_option("--format", f.format, "json | csv");
    cmd->add_option("--out", f.out, "output path (default stdout)");
    cmd->add_flag("--verify", f.verify, "re-verify the extracted dual");
    cmd->add_option("--k", f.k, "single localizing index");
    cmd->add_option("--k-max", f.k_max, "truncate the localizing sequence");
  };

  auto* validate = app.add_subcommand("validate", "parse and validate a model");
  add_common(validate);

  auto* check_na_cmd = app.add_subcommand("check-na", "global no-arbitrage check");
  add_common(check_na_cmd);

  auto* check_local_cmd =
      app.add_subcommand("check-local", "per-k no-arbitrage on stopped markets");
  add_common(check_local_cmd);

  auto* price_eur = app.add_subcommand("price-eur", "European superhedging price");
  add_common(price_eur);

  auto* price_am = app.add_subcommand("price-am", "American superhedging price");
  add_common(price_am);

  auto* sweep_cmd =
      app.add_subcommand("sweep", "per-k localizing sweep of a European claim");
  add_common(sweep_cmd);
  std::string x_list;
  sweep_cmd->add_option("--x-list", x_list,
                        "comma-separated credit bounds: emits the (x, pi) "
                        "sensitivity curve for the --k component (default 1)");

  auto* dual_verify =
      app.add_subcommand("dual-verify", "verify a pricing system from a report");
  add_common(dual_verify);
  std::string system_path;
  dual_verify->add_option("--system", system_path, "price report JSON")->required();

  auto* brute =
      app.add_subcommand("brute", "stopping-time enumeration price oracle");
  add_common(brute);
  std::uint64_t cap = 64;
  brute->add_option("--cap", cap, "stopping-time enumeration cap");

  auto* gen = app.add_subcommand("gen", "emit a generated model");
  std::string gen_kind = "binomial";
  std::string gs0 = "1", gup = "2", gdown = "1/2", gp = "1/2";
  int gperiods = 1, gbranches = 2, gdepth = 3, gd = 1;
  std::uint64_t gen_seed = 1;
  gen->add_option("kind", gen_kind, "binomial | arb-demo | random")->required();
  gen->add_option("--s0", gs0, "initial price");
  gen->add_option("--up", gup, "up factor");
  gen->add_option("--down", gdown, "down factor");
  gen->add_option("--p", gp, "up probability");
  gen->add_option("--periods", gperiods, "number of periods");
  gen->add_option("--branches", gbranches, "max branches (random)");
  gen->add_option("--depth", gdepth, "max periods (random)");
  gen->add_option("--d", gd, "number of assets (random)");
  gen->add_option("--seed", gen_seed, "random seed");
  gen->add_option("--out", f.out, "output path (default stdout)");

  auto* search = app.add_subcommand("search", "local-viability gap probe");
  std::uint64_t search_seed = 1;
  int budget = 50, s_depth = 3, s_branch = 2, s_len = 2;
  bool s_exhaustive = false;
  std::string s_x = "0";
  search->add_option("--seed", search_seed, "random seed");
  search->add_option("--budget", budget, "candidates to evaluate");
  search->add_option("--depth", s_depth, "max periods");
  search->add_option("--branches", s_branch, "max branches");
  search->add_option("--len", s_len, "sequence length");
  search->add_flag("--exhaustive", s_exhaustive, "force exhaustive sequences");
  search->add_option("--x", s_x, "credit constraint");
  search->add_option("--out", f.out, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    if (validate->parsed()) {
      load_model_file(f.model_path);
      emit("{\n  \"valid\": true\n}\n", f.out);
      return kOk;
    }
    if (check_na_cmd->parsed() || check_local_cmd->parsed()) {
      ModelDocument doc = load_model_file(f.model_path);
      Cone cone = parse_cone_flag(f.cone, doc.model.num_assets(), doc.cone);
      Verdict v;
      if (check_na_cmd->parsed()) {
        v = check_na(doc.model, cone);
      } else {
        if (!doc.localizing)
          throw SchemaError("model file carries no localizing sequence");
        LocalizingSequence seq = *doc.localizing;
        if (f.k_max > 0 && f.k_max < seq.size()) {
          std::vector<StoppingTime> cut(seq.times().begin(),
                                        seq.times().begin() + f.k_max);
          const bool exh = cut.back().identically_terminal(doc.model);
          seq = LocalizingSequence(doc.model, std::move(cut), exh);
        }
        v = check_local_na(doc.model, seq, cone);
      }
      emit(verdict_to_json(doc.model, v), f.out);
      return v.holds ? kOk : kConditionFails;
    }
    if (price_eur->parsed()) return run_price(f, true);
    if (price_am->parsed()) return run_price(f, false);
    if (sweep_cmd->parsed()) {
      ModelDocument doc = load_model_file(f.model_path);
      if (!doc.localizing)
        throw SchemaError("model file carries no localizing sequence");
      HedgeQuery q = make_query(doc, f, true);
      if (f.k_max > 0 && f.k_max < doc.localizing->size()) {
        std::vector<StoppingTime> cut(doc.localizing->times().begin(),
                                      doc.localizing->times().begin() + f.k_max);
        const bool exh = cut.back().identically_terminal(doc.model);
        q.seq = LocalizingSequence(doc.model, std::move(cut), exh);
      }
      if (!x_list.empty()) {
        std::vector<std::pair<Rat, Rat>> curve;
        std::stringstream ss(x_list);
        std::string item;
        const int k = f.k >= 1 ? f.k : 1;
        while (std::getline(ss, item, ',')) {
          HedgeQuery qx = q;
          qx.x = rat_from_string(item);
          SweepReport rep = localize_sweep(doc.model, qx);
          if (k > static_cast<int>(rep.pi.size()))
            throw ParamError("--k beyond the sequence length");
          curve.emplace_back(qx.x, rep.pi[k - 1]);
        }
        if (f.format == "csv") {
          emit(sensitivity_to_csv(curve), f.out);
        } else {
          json out = json::array();
          for (const auto& [x, pi] : curve)
            out.push_back({{"x", rat_to_string(x)}, {"pi", rat_to_string(pi)}});
          emit(out.dump(2) + "\n", f.out);
        }
        return kOk;
      }
      SweepReport rep = localize_sweep(doc.model, q);
      if (f.k >= 1) {
        if (f.k > static_cast<int>(rep.pi.size()))
          throw ParamError("--k beyond the sequence length");
        json out;
        out["k"] = f.k;
        out["pi_k"] = rat_to_string(rep.pi[f.k - 1]);
        out["dual"] = rat_to_string(elmd_dual_value(doc.model, q, f.k));
        emit(out.dump(2) + "\n", f.out);
        return kOk;
      }
      emit(f.format == "csv" ? sweep_to_csv(rep)
                             : sweep_to_json(rep, q.x, q.cone.describe()),
           f.out);
      return kOk;
    }
    if (dual_verify->parsed()) {
      ModelDocument doc = load_model_file(f.model_path);
      std::ifstream in(system_path);
      if (!in) throw SchemaError("cannot open '" + system_path + "'");
      std::ostringstream ss;
      ss << in.rdbuf();
      json report = json::parse(ss.str(), nullptr, false);
      if (report.is_discarded()) throw SchemaError("report is not valid JSON");
      PricingSystem ps = parse_system_json(doc.model, report);
      const LocalizingSequence seq = doc.localizing
                                         ? *doc.localizing
                                         : LocalizingSequence::trivial(doc.model);
      Cone cone = parse_cone_flag(f.cone, doc.model.num_assets(), doc.cone);
      const Rat tol = (f.mode == "float") ? Rat(f.tol) : Rat(0);
      PsReport rep = verify_pricing_system(doc.model, seq, ps, cone, tol);
      emit(ps_report_to_json(rep), f.out);
      return rep.ok ? kOk : kConditionFails;
    }
    if (brute->parsed()) {
      ModelDocument doc = load_model_file(f.model_path);
      if (!doc.payoff || doc.payoff->kind == PayoffKind::European)
        throw SchemaError("brute expects an American or Bermudan payoff");
      Cone cone = parse_cone_flag(f.cone, doc.model.num_assets(), doc.cone);
      Rat price = brute_force_american(doc.model, *doc.payoff,
                                       rat_from_string(f.x), cone, cap);
      json out;
      out["price"] = rat_to_string(price);
      out["cap"] = cap;
      emit(out.dump(2) + "\n", f.out);
      return kOk;
    }
    if (gen->parsed()) {
      ModelDocument doc{TreeModel(1, 1,
                                  {{"a", std::nullopt, 0, Rat(1), {Rat(1)}, ""},
                                   {"b", std::string("a"), 1, Rat(1), {Rat(1)}, ""}}),
                        std::nullopt, std::nullopt, std::nullopt};
      if (gen_kind == "binomial") {
        doc.model = generate_binomial(rat_from_string(gs0), rat_from_string(gup),
                                      rat_from_string(gdown), rat_from_string(gp),
                                      gperiods);
      } else if (gen_kind == "arb-demo") {
        doc.model = generate_arbitrage_demo();
      } else if (gen_kind == "random") {
        std::mt19937_64 rng(gen_seed);
        RandomTreeOptions opt;
        opt.max_periods = gdepth;
        opt.max_branches = gbranches;
        opt.num_assets = gd;
        doc.model = random_viable_tree(rng, opt);
      } else {
        throw SchemaError("unknown generator '" + gen_kind + "'");
      }
      emit(serialize_model(doc), f.out);
      return kOk;
    }
    if (search->parsed()) {
      GapSearchParams params;
      params.seed = search_seed;
      params.max_periods = s_depth;
      params.max_branches = s_branch;
      params.seq_length = s_len;
      params.exhaustive = s_exhaustive;
      params.x = rat_from_string(s_x);
      GapSearchResult r = search_local_viability_gap(params, budget);
      emit(gap_search_to_json(r), f.out);
      return kOk;
    }
  } catch (const NumericalBreakdown& e) {
    std::cerr << "error: " << e.what() << " (retry with --mode exact)\n";
    return kNumError;
  } catch (const MismatchError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumError;
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const InvariantError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const InvalidStoppingTime& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const ParamError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const CapExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const UnsupportedCone& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const InfeasibleHedge& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumError;
  }
  return kOk;
}
