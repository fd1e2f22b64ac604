#include "pcap/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace pcap {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError((path.empty() ? std::string("config") : path) + ": " + what);
}

void only_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) fail(path.empty() ? key : path + "." + key, "unknown key");
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

int integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<int>();
}

std::string text(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

/// A number or an array of numbers.
std::vector<double> numbers(const json& v, const std::string& path) {
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array() || v.empty()) fail(path, "expected a number or a non-empty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

ModelSpec parse_model(const json& j, const std::string& path, const std::string& base_dir) {
  only_keys(j, path, {"id", "n", "aperture", "mass", "path", "nonneg_ricci"});
  if (!j.contains("id")) fail(path, "missing key 'id'");
  ModelSpec m;
  m.id = text(j["id"], join(path, "id"));
  if (j.contains("n")) m.n = integer(j["n"], join(path, "n"));
  if (j.contains("aperture")) {
    if (m.id != "cone") fail(join(path, "aperture"), "only cones have an aperture");
    m.parameter = number(j["aperture"], join(path, "aperture"));
  }
  if (j.contains("mass")) {
    if (m.id != "schwarzschild") fail(join(path, "mass"), "only schwarzschild has a mass");
    m.parameter = number(j["mass"], join(path, "mass"));
  }
  if (j.contains("path")) {
    if (m.id != "tabulated") fail(join(path, "path"), "only tabulated models read a file");
    std::filesystem::path p = text(j["path"], join(path, "path"));
    m.path = (p.is_relative() ? std::filesystem::path(base_dir) / p : p).string();
  }
  if (j.contains("nonneg_ricci")) {
    if (!j["nonneg_ricci"].is_boolean()) fail(join(path, "nonneg_ricci"), "expected true or false");
    m.nonneg_ricci = j["nonneg_ricci"].get<bool>();
  }
  return m;
}

ExperimentSpec parse_experiment(const json& j, const std::string& path, const std::string& base_dir,
                                const std::set<std::string>& extra) {
  std::set<std::string> keys = {"experiment", "suite",  "model",       "models",     "solver",
                                "r0",         "R",      "outer_datum", "p",          "alpha",
                                "eps",        "levels", "functionals", "tolerances", "domain",
                                "grids"};
  keys.insert(extra.begin(), extra.end());
  only_keys(j, path, keys);
  ExperimentSpec s;
  if (!j.contains("experiment")) fail(path, "missing key 'experiment'");
  s.name = text(j["experiment"], join(path, "experiment"));
  if (j.contains("suite")) s.suite = text(j["suite"], join(path, "suite"));
  if (j.contains("model") && j.contains("models")) fail(path, "give either 'model' or 'models'");
  if (j.contains("model")) s.models = {parse_model(j["model"], join(path, "model"), base_dir)};
  if (j.contains("models")) {
    const auto& arr = j["models"];
    if (!arr.is_array() || arr.empty()) fail(join(path, "models"), "expected a non-empty array");
    s.models.clear();
    for (std::size_t i = 0; i < arr.size(); ++i)
      s.models.push_back(parse_model(arr[i], join(path, "models") + "[" + std::to_string(i) + "]", base_dir));
  }
  if (j.contains("solver")) s.solver = text(j["solver"], join(path, "solver"));
  if (s.suite == "solver2d" && !j.contains("solver")) s.solver = "2d";
  if (j.contains("r0")) s.r0 = number(j["r0"], join(path, "r0"));
  if (j.contains("R")) s.R = number(j["R"], join(path, "R"));
  if (j.contains("outer_datum")) {
    const auto& o = j["outer_datum"];
    const std::string op = join(path, "outer_datum");
    if (o.is_number()) {
      s.outer = OuterDatum::explicit_value;
      s.phi_R = o.get<double>();
    } else {
      const std::string v = text(o, op);
      if (v == "imcf") s.outer = OuterDatum::imcf;
      else if (v == "scale_invariant") s.outer = OuterDatum::scale_invariant;
      else fail(op, "expected imcf, scale_invariant or a number");
    }
  }
  if (j.contains("p")) s.p_list = numbers(j["p"], join(path, "p"));
  if (j.contains("alpha")) s.alpha_list = numbers(j["alpha"], join(path, "alpha"));
  if (j.contains("eps")) s.eps_list = numbers(j["eps"], join(path, "eps"));
  if (j.contains("levels")) {
    const std::string lp = join(path, "levels");
    only_keys(j["levels"], lp, {"T", "count"});
    if (j["levels"].contains("T")) s.T = number(j["levels"]["T"], join(lp, "T"));
    if (j["levels"].contains("count")) s.levels = integer(j["levels"]["count"], join(lp, "count"));
  }
  if (j.contains("functionals")) {
    const auto& arr = j["functionals"];
    if (!arr.is_array() || arr.empty()) fail(join(path, "functionals"), "expected a non-empty array");
    s.functionals.clear();
    for (std::size_t i = 0; i < arr.size(); ++i)
      s.functionals.push_back(text(arr[i], join(path, "functionals") + "[" + std::to_string(i) + "]"));
  }
  if (j.contains("tolerances")) {
    const std::string tp = join(path, "tolerances");
    std::set<std::string> known;
    for (const auto& [k, _] : default_tolerances()) known.insert(k);
    only_keys(j["tolerances"], tp, known);
    for (const auto& [k, v] : j["tolerances"].items()) s.tolerances[k] = number(v, join(tp, k));
  }
  if (j.contains("domain")) {
    const std::string dp = join(path, "domain");
    const auto& d = j["domain"];
    only_keys(d, dp, {"shape", "axis", "equator", "R", "u_R"});
    if (d.contains("shape")) s.domain.shape = text(d["shape"], join(dp, "shape"));
    if (d.contains("axis")) s.domain.axis = number(d["axis"], join(dp, "axis"));
    if (d.contains("equator")) s.domain.equator = number(d["equator"], join(dp, "equator"));
    if (d.contains("R")) s.domain.R = number(d["R"], join(dp, "R"));
    if (d.contains("u_R")) s.domain.u_R = number(d["u_R"], join(dp, "u_R"));
  }
  if (j.contains("grids")) {
    const auto& arr = j["grids"];
    const std::string gp = join(path, "grids");
    if (!arr.is_array() || arr.empty()) fail(gp, "expected a non-empty array");
    s.grids.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) s.grids.push_back(integer(arr[i], gp + "[" + std::to_string(i) + "]"));
  }
  try {
    s.validate();
  } catch (const ParameterError& e) {
    fail(path, e.what());
  }
  return s;
}

}  // namespace

Config parse_config(const std::string& text_in, const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(text_in);
  } catch (const json::parse_error& e) {
    // translate the byte offset into a line and column
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text_in.size(); ++i) {
      if (text_in[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream msg;
    msg << "line " << line << ", column " << col << ": malformed JSON";
    throw ConfigError(msg.str());
  }
  Config cfg;
  if (!doc.is_object()) fail("", "top level must be an object");
  auto meta = [&](const json& j) {
    if (j.contains("output")) cfg.output = text(j["output"], "output");
    if (j.contains("verbosity")) cfg.verbosity = integer(j["verbosity"], "verbosity");
  };
  if (doc.contains("experiments")) {
    only_keys(doc, "", {"experiments", "output", "verbosity"});
    const auto& arr = doc["experiments"];
    if (!arr.is_array() || arr.empty()) fail("experiments", "expected a non-empty array");
    for (std::size_t i = 0; i < arr.size(); ++i)
      cfg.experiments.push_back(parse_experiment(arr[i], "experiments[" + std::to_string(i) + "]", base_dir, {}));
  } else {
    cfg.experiments.push_back(parse_experiment(doc, "", base_dir, {"output", "verbosity"}));
  }
  meta(doc);
  std::set<std::string> names;
  for (const auto& e : cfg.experiments)
    if (!names.insert(e.name).second) fail("experiments", "duplicate experiment name '" + e.name + "'");
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot read file");
  std::stringstream buf;
  buf << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  try {
    return parse_config(buf.str(), dir.empty() ? "." : dir.string());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace pcap
