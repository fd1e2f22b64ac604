#include "pcap/verify.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <set>
#include <sstream>

namespace pcap {

using nlohmann::json;

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::not_guaranteed: return "not-guaranteed";
  }
  return "?";
}

MonotoneCheck check_monotone(const std::vector<double>& v, double slack) {
  if (v.size() < 3) throw ParameterError("check_monotone: series needs at least 3 values");
  if (!(slack >= 0)) throw ParameterError("check_monotone: slack must be >= 0");
  MonotoneCheck out;
  for (std::size_t k = 1; k < v.size(); ++k) {
    const double drop = v[k - 1] - v[k];
    const double scale = 1.0 + std::max(std::abs(v[k - 1]), std::abs(v[k]));
    if (!(drop <= slack * scale)) out.violations.emplace_back(k - 1, k);
    if (drop > out.worst_drop || std::isnan(drop)) out.worst_drop = drop;
  }
  out.pass = out.violations.empty();
  return out;
}

// --- tables and reports -----------------------------------------------------

void Table::add_row(std::vector<double> row) {
  if (row.size() != columns.size()) throw ConsistencyError("table " + name + ": row width mismatch");
  rows.push_back(std::move(row));
}

std::vector<double> Table::column(const std::string& col) const {
  auto it = std::find(columns.begin(), columns.end(), col);
  if (it == columns.end()) throw ParameterError("table " + name + ": no column " + col);
  const auto k = static_cast<std::size_t>(it - columns.begin());
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[k]);
  return out;
}

void Table::write_csv(std::ostream& out) const {
  for (std::size_t k = 0; k < columns.size(); ++k) out << (k ? "," : "") << columns[k];
  out << '\n' << std::setprecision(17);
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < r.size(); ++k) out << (k ? "," : "") << r[k];
    out << '\n';
  }
}

const std::map<std::string, std::string>& check_anchors() {
  static const std::map<std::string, std::string> anchors = {
      {"F_p nondecreasing", "monotonicity of F_p along level sets of the p-capacitary potential"},
      {"F_1 nondecreasing", "monotonicity of F_1 along the weak inverse mean curvature flow"},
      {"F_p derivative identity", "dF_p/dt equals the weighted integral of Q_p for p > 1"},
      {"G_p derivative identity", "dG_p/dt expressed through F_p and the Ricci bulk term"},
      {"F_1 derivative identity", "dF_1/dt equals the weighted integral of Q_1"},
      {"F_p constant", "rigidity: F_p is constant on cones over round spheres"},
      {"G_p constant", "rigidity: G_p is constant on cones over round spheres"},
      {"F_1 constant", "rigidity: F_1 is constant on cones over round spheres"},
      {"Hawking mass nondecreasing", "Geroch monotonicity under nonnegative scalar curvature"},
      {"Hawking mass constant", "Hawking mass of Schwarzschild coordinate spheres equals m"},
      {"Hawking mass zero", "Hawking mass of Euclidean round spheres vanishes"},
      {"Geroch integrand nonnegative", "Geroch monotonicity: the integrand of dm_H/dt is nonnegative"},
      {"area growth", "exponential growth of level areas along the inverse mean curvature flow"},
      {"Minkowski inequality", "Minkowski-type inequality under nonnegative Ricci curvature and Euclidean volume growth"},
      {"Minkowski equality", "equality in the Minkowski-type inequality on conical ends"},
      {"p->1 sup error", "local uniform convergence of w_p to the weak IMCF potential"},
      {"p->1 gradient L2 error", "strong L^q convergence of the gradients as p -> 1"},
      {"p->1 gradient L4 error", "strong L^q convergence of the gradients as p -> 1"},
      {"p->1 capacity gap", "normalized p-capacity tends to the hull area as p -> 1"},
      {"p->1 mean curvature defect", "(H - |grad w_p|)^2 tends to zero in L^1 as p -> 1"},
      {"p->1 area defect", "areas of level sets converge as p -> 1"},
      {"eps->0 sup error", "eps-regularized potentials converge to w_p as eps -> 0"},
      {"eps->0 theta sup", "the regularization weight theta_eps vanishes as eps -> 0"},
      {"eps->0 theta bound", "theta_eps <= eps^2 / (min |grad u|^2 + eps^2)"},
      {"2d flux conservation", "the p-flux through every closed surface around the domain is constant"},
      {"2d radial oracle", "the axisymmetric solve reproduces the radial solution on spherical domains"},
      {"2d Gauss-Bonnet", "the total scalar curvature of level sets lies in 8 pi Z"},
      {"2d F_p derivative identity", "dF_p/dt equals the weighted integral of Q_p for p > 1"},
      {"2d F_p nondecreasing", "monotonicity of F_p along level sets of the p-capacitary potential"},
      {"2d divergence order J", "pointwise divergence formula for the field J"},
      {"2d divergence order Y", "pointwise divergence formula for the field Y"},
  };
  return anchors;
}

Check& Report::add(const std::string& name, json values, double threshold, Verdict verdict) {
  const auto& anchors = check_anchors();
  auto it = anchors.find(name);
  if (it == anchors.end() || it->second.empty())
    throw ConsistencyError("report: check '" + name + "' has no registered anchor");
  checks.push_back(Check{name, it->second, std::move(values), threshold, verdict});
  return checks.back();
}

bool Report::any_fail() const {
  return std::any_of(checks.begin(), checks.end(),
                     [](const Check& c) { return c.verdict == Verdict::fail; });
}

json Report::to_json() const {
  json out;
  out["experiment"] = experiment;
  out["checks"] = json::array();
  for (const auto& c : checks) {
    out["checks"].push_back({{"name", c.name},
                             {"anchor", c.anchor},
                             {"values", c.values},
                             {"threshold", c.threshold},
                             {"verdict", to_string(c.verdict)}});
  }
  out["environment"] = environment;
  return out;
}

void Report::write_summary(std::ostream& out) const {
  std::size_t pass = 0, fail = 0, ng = 0;
  for (const auto& c : checks) {
    pass += c.verdict == Verdict::pass;
    fail += c.verdict == Verdict::fail;
    ng += c.verdict == Verdict::not_guaranteed;
  }
  out << experiment << ": " << pass << " pass, " << fail << " fail, " << ng << " not-guaranteed\n";
  for (const auto& c : checks) {
    out << "  [" << to_string(c.verdict) << "] " << c.name;
    if (c.values.is_object() && c.values.contains("cell")) out << " (" << c.values["cell"].get<std::string>() << ")";
    out << "  threshold " << std::setprecision(3) << c.threshold << '\n';
  }
}

// --- models ----------------------------------------------------------------

ManifoldPtr build_model(const ModelSpec& s) {
  if (s.id == "euclidean") return make_euclidean(s.n);
  if (s.id == "cone") return make_cone(s.n, s.parameter > 0 ? s.parameter : 0.5);
  if (s.id == "schwarzschild") {
    if (s.n != 3) throw ParameterError("schwarzschild is three-dimensional");
    return make_schwarzschild(s.parameter > 0 ? s.parameter : 1.0);
  }
  if (s.id == "tabulated") {
    if (s.path.empty()) throw ParameterError("tabulated model needs a path");
    return load_tabulated(s.n, s.path, s.nonneg_ricci);
  }
  throw ParameterError("unknown model '" + s.id + "'");
}

std::vector<ModelInfo> list_models() {
  std::vector<ModelInfo> out;
  auto add = [&](const std::string& id, const std::string& params, const ManifoldPtr& M) {
    ModelInfo info{id, params, std::nullopt, std::nullopt};
    if (M) {
      info.r_min = M->r_min;
      try {
        info.avr = avr(*M);
      } catch (const Error&) {
      }
    }
    out.push_back(info);
  };
  add("euclidean", "n=3", make_euclidean(3));
  add("cone", "n=3 aperture=0.5", make_cone(3, 0.5));
  add("schwarzschild", "n=3 mass=1", make_schwarzschild(1.0));
  add("tabulated", "n=3 path=<json samples>", nullptr);
  return out;
}

// --- experiment spec -----------------------------------------------------------

const std::map<std::string, double>& default_tolerances() {
  static const std::map<std::string, double> d = {
      {"monotone_slack", 1e-8},
      {"identity_residual", 1e-4},
      {"constancy", 1e-8},
      {"hawking", 1e-9},
      {"hawking_zero", 1e-10},
      {"area_growth", 1e-10},
      {"minkowski_slack", 1e-8},
      {"minkowski_equality", 1e-8},
      {"p1_sup", 1e-2},
      {"p1_grad_l2", 0.1},
      {"p1_grad_l4", 0.1},
      {"p1_capacity", 0.02},
      {"p1_defect", 0.05},
      {"p1_area", 0.01},
      {"eps_sup", 1e-4},
      {"eps_theta", 1e-6},
      {"flux", 1e-6},
      {"l_inf", 5e-4},
      {"gauss_bonnet", 0.01},
      {"identity_2d", 0.05},
      {"divergence_order", 1.7},
  };
  return d;
}

double ExperimentSpec::tol(const std::string& key) const {
  if (auto it = tolerances.find(key); it != tolerances.end()) return it->second;
  const auto& d = default_tolerances();
  if (auto it = d.find(key); it != d.end()) return it->second;
  throw ParameterError("unknown tolerance '" + key + "'");
}

namespace {

const std::set<std::string> kSuites = {"series",     "monotonicity", "p_to_1",  "eps_to_0",
                                       "inequality", "equality",     "solver2d"};
const std::set<std::string> kFunctionals = {"F_p", "G_p", "F_1", "hawking"};

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t k = 1; k < v.size(); ++k)
    if (!(v[k] < v[k - 1])) return false;
  return true;
}

}  // namespace

void ExperimentSpec::validate() const {
  if (name.empty()) throw ParameterError("experiment: name missing");
  for (char ch : name)
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_' && ch != '-' && ch != '.')
      throw ParameterError("experiment name '" + name + "' may only use letters, digits, '_', '-', '.'");
  if (!kSuites.count(suite)) throw ParameterError("experiment " + name + ": unknown suite '" + suite + "'");
  if (solver != "radial" && solver != "2d") throw ParameterError("solver must be radial or 2d");
  if ((suite == "solver2d") != (solver == "2d"))
    throw ParameterError("suite solver2d goes with solver 2d and vice versa");
  if (models.empty()) throw ParameterError("experiment " + name + ": model list empty");
  if (p_list.empty() || alpha_list.empty()) throw ParameterError("p and alpha lists must be non-empty");
  for (double p : p_list)
    if (!(p >= 1.0 && p <= 2.0)) throw ParameterError("p must lie in [1, 2]");
  for (double a : alpha_list)
    if (!(a > 0)) throw ParameterError("alpha must be > 0");
  for (double e : eps_list)
    if (!(e > 0)) throw ParameterError("eps must be > 0 (use the unregularized solver for eps = 0)");
  if (!(r0 > 0 && R > r0)) throw ParameterError("need 0 < r0 < R");
  if (outer == OuterDatum::explicit_value && !(phi_R > 0)) throw ParameterError("outer datum must be > 0");
  if (!(T >= 0)) throw ParameterError("T must be >= 0");
  if (levels < 3) throw ParameterError("levels must be >= 3");
  for (const auto& f : functionals)
    if (!kFunctionals.count(f)) throw ParameterError("unknown functional '" + f + "'");
  for (const auto& [k, v] : tolerances) {
    if (!default_tolerances().count(k)) throw ParameterError("unknown tolerance '" + k + "'");
    if (!(v > 0)) throw ParameterError("tolerance " + k + " must be positive");
  }
  if (grids.empty()) throw ParameterError("grid list empty");
  for (int g : grids)
    if (g < 16 || g % 4 != 0) throw ParameterError("grid sizes must be multiples of 4, at least 16");
  if (!std::is_sorted(grids.begin(), grids.end())) throw ParameterError("grid sizes must increase");
  if (suite == "p_to_1") {
    if (!strictly_decreasing(p_list) || p_list.back() <= 1.0)
      throw ParameterError("p_to_1: p list must decrease towards 1 and stay above it");
  }
  if (suite == "eps_to_0") {
    if (eps_list.empty() || !strictly_decreasing(eps_list))
      throw ParameterError("eps_to_0: eps list must be non-empty and decreasing");
    if (p_list.front() <= 1.0) throw ParameterError("eps_to_0: p must be > 1");
  }
  if (suite == "solver2d") {
    if (!(p_list.front() > 1.0)) throw ParameterError("solver2d: p must be > 1");
    if (domain.shape != "sphere" && domain.shape != "spheroid")
      throw ParameterError("domain shape must be sphere or spheroid");
  }
  for (const auto& m : models) {
    if (m.n < 3) throw ParameterError("dimension must be >= 3");
    if (!(m.parameter >= 0)) throw ParameterError("model parameter must be >= 0");
  }
}

RadialPotential build_potential(const ExperimentSpec& spec, const ManifoldPtr& M, double p) {
  if (p == 1.0) return solve_w1(M, spec.r0, spec.R);
  double phi = spec.phi_R;
  if (spec.outer == OuterDatum::imcf) phi = imcf_outer_datum(*M, spec.r0, spec.R);
  if (spec.outer == OuterDatum::scale_invariant) phi = scale_invariant_outer_datum(*M, spec.r0, spec.R, p);
  return solve_wp(M, spec.r0, spec.R, p, phi);
}

double level_cap(const ExperimentSpec& spec, const RadialPotential& pot) {
  if (spec.T > 0) {
    if (spec.T > pot.phi_R()) throw DomainError("T exceeds the outer datum");
    return spec.T;
  }
  return std::min(2.0, 0.8 * pot.w(0.5 * spec.R));
}

namespace {

std::string fmt(double x) {
  std::ostringstream s;
  s << x;
  return s.str();
}

std::string model_tag(const ModelSpec& m, const RadialManifold& M) {
  if (m.id == "cone") return "cone" + fmt(M.parameter);
  if (m.id == "schwarzschild") return "schwarzschild" + fmt(M.parameter);
  return m.id;
}

std::string cell(const std::string& tag, double p, double alpha) {
  return tag + "_p" + fmt(p) + "_a" + fmt(alpha);
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

/// Residual of a derivative identity, relative to the right side, or to the
/// functional itself when both sides vanish identically.
double identity_metric(const MonotoneSeries& s) {
  const double rhs = max_abs(s.rhs_qp);
  const double val = max_abs(s.value);
  const double res = max_abs(s.residual);
  if (rhs <= 1e-8 * val) return val > 0 ? res / val : res;
  return s.relative_residual();
}

Table series_table(const std::string& name, const MonotoneSeries& s) {
  Table t{name, {"t", "value", "bulk_term", "rhs_Qp", "residual"}, {}};
  for (std::size_t k = 0; k < s.t.size(); ++k)
    t.add_row({s.t[k], s.value[k], s.bulk[k], s.rhs_qp[k], s.residual[k]});
  return t;
}

json monotone_values(const std::string& cell_name, const MonotoneCheck& m, bool guaranteed) {
  json v{{"cell", cell_name}, {"worst_drop", m.worst_drop}, {"guaranteed", guaranteed},
         {"observed_monotone", m.pass}};
  v["violations"] = json::array();
  for (auto [a, b] : m.violations) v["violations"].push_back({a, b});
  return v;
}

Verdict monotone_verdict(const MonotoneCheck& m, bool guaranteed) {
  if (!guaranteed) return Verdict::not_guaranteed;
  return m.pass ? Verdict::pass : Verdict::fail;
}

void add_environment(Report& rep, const ExperimentSpec& spec) {
  json tol = json::object();
  for (const auto& [k, v] : default_tolerances()) tol[k] = spec.tol(k);
  rep.environment = {{"grid", {{"levels", spec.levels}, {"T", spec.T}, {"r0", spec.r0}, {"R", spec.R}}},
                     {"tolerances", tol},
                     {"version", kVersion}};
  if (spec.solver == "2d") rep.environment["grid"]["sizes"] = spec.grids;
}

/// F_p for p > 1, F_1 at p = 1, with the monotonicity and identity checks.
void functional_checks(Report& rep, const ExperimentSpec& spec, const LevelSource& src,
                       const std::string& name, double alpha, double T) {
  const double p = src.p();
  auto prm = make_params(src.n(), p, alpha, uniform_levels(T, spec.levels));
  const bool imcf = (p == 1.0);
  MonotoneSeries F = imcf ? F_1(src, prm) : F_p(src, prm);
  const std::string label = imcf ? "F_1" : "F_p";
  auto mono = check_monotone(F.value, spec.tol("monotone_slack"));
  rep.add(label + " nondecreasing", monotone_values(name, mono, F.guaranteed), spec.tol("monotone_slack"),
          monotone_verdict(mono, F.guaranteed));
  const double res = identity_metric(F);
  rep.add(label + " derivative identity", {{"cell", name}, {"relative_residual", res}},
          spec.tol("identity_residual"), res < spec.tol("identity_residual") ? Verdict::pass : Verdict::fail);
  rep.tables.push_back(series_table(name + "_" + label, F));
}

std::vector<double> sample(double a, double b, int n) {
  std::vector<double> out(n + 1);
  for (int i = 0; i <= n; ++i) out[i] = a + (b - a) * i / n;
  out[n] = b;
  return out;
}

void hawking_checks(Report& rep, const ExperimentSpec& spec, const ModelSpec& ms,
                    const RadialLevelSource& src, const std::string& tag, double T) {
  const auto ts = uniform_levels(T, spec.levels);
  Table tab{tag + "_hawking", {"t", "m_H", "area", "willmore", "geroch_rhs"}, {}};
  std::vector<double> mh, rhs;
  bool scalar_nonneg = true;
  for (double t : ts) {
    auto L = src.level(t);
    mh.push_back(hawking_mass(L));
    // undefined where H vanishes (a horizon as initial surface)
    rhs.push_back((L.H > 0).all() ? geroch_rhs(L) : std::numeric_limits<double>::quiet_NaN());
    scalar_nonneg = scalar_nonneg && (L.scalar >= -1e-12).all();
    tab.add_row({t, mh.back(), L.area(), L.integral(L.H * L.H), rhs.back()});
  }
  auto mono = check_monotone(mh, spec.tol("monotone_slack"));
  rep.add("Hawking mass nondecreasing", monotone_values(tag, mono, scalar_nonneg), spec.tol("monotone_slack"),
          monotone_verdict(mono, scalar_nonneg));
  double min_rhs = std::numeric_limits<double>::infinity();
  for (double v : rhs)
    if (!std::isnan(v)) min_rhs = std::min(min_rhs, v);
  rep.add("Geroch integrand nonnegative", {{"cell", tag}, {"min", min_rhs}}, 0.0,
          !scalar_nonneg ? Verdict::not_guaranteed : (min_rhs >= -1e-12 ? Verdict::pass : Verdict::fail));
  const auto& M = src.potential().manifold();
  if (ms.id == "schwarzschild") {
    double dev = 0.0;
    for (double m : mh) dev = std::max(dev, std::abs(m - M.parameter));
    const double spread = *std::max_element(mh.begin(), mh.end()) - *std::min_element(mh.begin(), mh.end());
    rep.add("Hawking mass constant",
            {{"cell", tag}, {"mass", M.parameter}, {"max_deviation", dev}, {"spread", spread}},
            spec.tol("hawking"), dev < spec.tol("hawking") ? Verdict::pass : Verdict::fail);
  }
  if (ms.id == "euclidean") {
    const double m = max_abs(mh);
    rep.add("Hawking mass zero", {{"cell", tag}, {"max_abs", m}}, spec.tol("hawking_zero"),
            m < spec.tol("hawking_zero") ? Verdict::pass : Verdict::fail);
  }
  rep.tables.push_back(std::move(tab));
}

}  // namespace

// --- suites ---------------------------------------------------------------------

Report series_suite(const ExperimentSpec& spec) {
  Report rep;
  rep.experiment = spec.name;
  add_environment(rep, spec);
  for (const auto& ms : spec.models) {
    auto M = build_model(ms);
    const std::string tag = model_tag(ms, *M);
    for (double p : spec.p_list) {
      RadialLevelSource src(build_potential(spec, M, p));
      const double T = level_cap(spec, src.potential());
      for (const auto& fn : spec.functionals) {
        if (fn == "hawking") {
          if (p != 1.0 || M->n != 3) throw ParameterError("hawking series needs p = 1 and n = 3");
          hawking_checks(rep, spec, ms, src, tag, T);
          continue;
        }
        for (double alpha : spec.alpha_list) {
          const std::string name = cell(tag, p, alpha);
          if (fn == "F_1" && p != 1.0) throw ParameterError("F_1 needs p = 1");
          if (fn == "F_p" || fn == "F_1") {
            if ((fn == "F_p") == (p == 1.0)) throw ParameterError(fn + " does not match p = " + fmt(p));
            functional_checks(rep, spec, src, name, alpha, T);
          } else if (fn == "G_p") {
            if (p == 1.0) throw ParameterError("G_p needs p > 1");
            auto G = G_p(src, make_params(M->n, p, alpha, uniform_levels(T, spec.levels)));
            const double res = identity_metric(G);
            rep.add("G_p derivative identity", {{"cell", name}, {"relative_residual", res}},
                    spec.tol("identity_residual"),
                    res < spec.tol("identity_residual") ? Verdict::pass : Verdict::fail);
            rep.tables.push_back(series_table(name + "_G_p", G));
          }
        }
      }
    }
  }
  return rep;
}

Report monotonicity_suite(const ExperimentSpec& spec) {
  Report rep;
  rep.experiment = spec.name;
  add_environment(rep, spec);
  for (const auto& ms : spec.models) {
    auto M = build_model(ms);
    const std::string tag = model_tag(ms, *M);
    for (double p : spec.p_list) {
      RadialLevelSource src(build_potential(spec, M, p));
      const double T = level_cap(spec, src.potential());
      for (double alpha : spec.alpha_list) functional_checks(rep, spec, src, cell(tag, p, alpha), alpha, T);
    }
  }
  return rep;
}

Report equality_suite(const ExperimentSpec& spec) {
  Report rep;
  rep.experiment = spec.name;
  add_environment(rep, spec);
  ExperimentSpec si = spec;
  si.outer = OuterDatum::scale_invariant;  // the whole-space potential on cones
  for (const auto& ms : spec.models) {
    auto M = build_model(ms);
    const std::string tag = model_tag(ms, *M);
    const int n = M->n;
    // cone of aperture a: spheres of area |S| a^{n-1} r^{n-1}, |grad w| = (n-p)/r, H = (n-1)/r
    std::optional<double> scale;
    if (ms.id == "euclidean") scale = unit_sphere_area(n - 1);
    if (ms.id == "cone") scale = unit_sphere_area(n - 1) * std::pow(M->parameter, n - 1);
    for (double p : spec.p_list) {
      RadialLevelSource src(build_potential(si, M, p));
      const double T = level_cap(si, src.potential());
      for (double alpha : spec.alpha_list) {
        const std::string name = cell(tag, p, alpha);
        auto prm = make_params(n, p, alpha, uniform_levels(T, spec.levels));
        auto judge = [&](const std::string& label, const MonotoneSeries& s, std::optional<double> expect) {
          const double v0 = s.value.front();
          double spread = 0.0, dev = 0.0;
          for (double v : s.value) {
            spread = std::max(spread, std::abs(v - v0) / std::abs(v0));
            if (expect) dev = std::max(dev, std::abs(v - *expect) / std::abs(*expect));
          }
          json vals{{"cell", name}, {"value", v0}, {"spread", spread}};
          if (expect) {
            vals["expected"] = *expect;
            vals["max_deviation"] = dev;
          }
          const bool ok = spread < spec.tol("constancy") && dev < spec.tol("constancy");
          rep.add(label + " constant", vals, spec.tol("constancy"), ok ? Verdict::pass : Verdict::fail);
          rep.tables.push_back(series_table(name + "_" + label, s));
        };
        std::optional<double> eF, eG;
        if (scale) {
          eF = -*scale * std::pow(n - p, alpha + p - 1) / alpha;
          eG = *scale * std::pow(n - p, alpha + p - 1);
        }
        if (p == 1.0) {
          judge("F_1", F_1(src, prm), eF);
        } else {
          judge("F_p", F_p(src, prm), eF);
          judge("G_p", G_p(src, prm), eG);
        }
      }
    }
  }
  return rep;
}

Report p_to_1_suite(const ExperimentSpec& spec) {
  Report rep;
  rep.experiment = spec.name;
  add_environment(rep, spec);
  const Tolerance qtol{1e-300, 1e-10, 50};
  for (const auto& ms : spec.models) {
    auto M = build_model(ms);
    const std::string tag = model_tag(ms, *M);
    const int n = M->n;
    const double S = unit_sphere_area(n - 1);
    auto w1 = solve_w1(M, spec.r0, spec.R);
    const double b = 0.5 * spec.R;
    const double T = spec.T > 0 ? spec.T : std::min(2.0, 0.8 * w1.w(b));
    const auto rs = sample(spec.r0, b, 400);
    constexpr int kLevels = 80;  // Simpson panels in t
    const Eigen::VectorXd wt = simpson_weights(kLevels, T / kLevels);
    std::vector<double> area1(kLevels + 1);
    for (int k = 0; k <= kLevels; ++k)
      area1[k] = cross_section(*M, w1.level_radius(T * k / kLevels)).area;

    Table tab{tag + "_p_to_1",
              {"p", "sup_error", "grad_L2", "grad_L4", "capacity_gap", "H_defect", "area_defect"},
              {}};
    for (double p : spec.p_list) {
      auto pot = build_potential(spec, M, p);
      double sup = 0.0;
      for (double r : rs) sup = std::max(sup, std::abs(pot.w(r) - w1.w(r)));
      auto lq = [&](double q) {
        auto g = [&](double r) {
          const double d = std::abs(pot.grad_norm(r) - w1.grad_norm(r));
          return std::pow(d, q) * std::pow(M->h(r), n - 1) * M->f(r) * S;
        };
        return std::pow(integrate(g, spec.r0, b, qtol), 1.0 / q);
      };
      const double l2 = lq(2.0), l4 = lq(4.0);
      const double cap = capacity(pot, 0.0, pot.phi_R());
      const double gap = std::abs(cap / std::pow(M->h(spec.r0), n - 1) - 1.0);
      double defect = 0.0, darea = 0.0, total = 0.0;
      for (int k = 0; k <= kLevels; ++k) {
        const double r = pot.level_radius(T * k / kLevels);
        const double A = cross_section(*M, r).area;
        const double d = mean_curvature_sphere(*M, r) - pot.grad_norm(r);
        defect += wt(k) * d * d * A;
        darea += wt(k) * std::abs(A - area1[k]);
        total += wt(k) * area1[k];
      }
      tab.add_row({p, sup, l2, l4, gap, defect, darea / total});
    }
    struct Col {
      const char* column;
      const char* check;
      const char* tol;
    };
    const Col cols[] = {{"sup_error", "p->1 sup error", "p1_sup"},
                        {"grad_L2", "p->1 gradient L2 error", "p1_grad_l2"},
                        {"grad_L4", "p->1 gradient L4 error", "p1_grad_l4"},
                        {"capacity_gap", "p->1 capacity gap", "p1_capacity"},
                        {"H_defect", "p->1 mean curvature defect", "p1_defect"},
                        {"area_defect", "p->1 area defect", "p1_area"}};
    for (const auto& c : cols) {
      const auto v = tab.column(c.column);
      const bool ok = strictly_decreasing(v) && v.back() < spec.tol(c.tol);
      rep.add(c.check, {{"cell", tag}, {"p", spec.p_list}, {"values", v}, {"T", T}}, spec.tol(c.tol),
              ok ? Verdict::pass : Verdict::fail);
    }
    rep.tables.push_back(std::move(tab));
  }
  return rep;
}

Report eps_to_0_suite(const ExperimentSpec& spec) {
  Report rep;
  rep.experiment = spec.name;
  add_environment(rep, spec);
  const double p = spec.p_list.front();
  for (const auto& ms : spec.models) {
    auto M = build_model(ms);
    const std::string tag = model_tag(ms, *M);
    auto ref = build_potential(spec, M, p);
    const auto rs = sample(spec.r0, 0.5 * spec.R, 400);
    Table tab{tag + "_eps_to_0", {"eps", "sup_error", "theta_sup", "theta_bound"}, {}};
    bool bound_ok = true;
    for (double eps : spec.eps_list) {
      auto pe = solve_wp_eps(M, spec.r0, spec.R, p, ref.phi_R(), eps);
      double sup = 0.0, th = 0.0, smin = std::numeric_limits<double>::infinity();
      for (double r : rs) {
        sup = std::max(sup, std::abs(pe.w(r) - ref.w(r)));
        th = std::max(th, pe.theta_eps(r));
        smin = std::min(smin, pe.slope(r));
      }
      const double bound = eps * eps / (smin * smin + eps * eps);
      bound_ok = bound_ok && th <= bound * (1 + 1e-12);
      tab.add_row({eps, sup, th, bound});
    }
    const auto sup = tab.column("sup_error");
    const auto th = tab.column("theta_sup");
    rep.add("eps->0 sup error", {{"cell", tag + "_p" + fmt(p)}, {"eps", spec.eps_list}, {"values", sup}},
            spec.tol("eps_sup"),
            strictly_decreasing(sup) && sup.back() < spec.tol("eps_sup") ? Verdict::pass : Verdict::fail);
    rep.add("eps->0 theta sup", {{"cell", tag + "_p" + fmt(p)}, {"eps", spec.eps_list}, {"values", th}},
            spec.tol("eps_theta"),
            strictly_decreasing(th) && th.back() < spec.tol("eps_theta") ? Verdict::pass : Verdict::fail);
    rep.add("eps->0 theta bound", {{"cell", tag + "_p" + fmt(p)}, {"bounds", tab.column("theta_bound")}}, 0.0,
            bound_ok ? Verdict::pass : Verdict::fail);
    rep.tables.push_back(std::move(tab));
  }
  return rep;
}

Report inequality_suite(const ExperimentSpec& spec) {
  Report rep;
  rep.experiment = spec.name;
  add_environment(rep, spec);
  for (const auto& ms : spec.models) {
    auto M = build_model(ms);
    const std::string tag = model_tag(ms, *M);
    const int n = M->n;
    RadialLevelSource src(solve_w1(M, spec.r0, spec.R));
    const double T = level_cap(spec, src.potential());
    const auto ts = uniform_levels(T, spec.levels);
    std::vector<LevelData> levels;
    for (double t : ts) levels.push_back(src.level(t));

    double growth = 0.0;
    for (const auto& L : levels)
      growth = std::max(growth, std::abs(L.area() / (levels.front().area() * std::exp(L.t)) - 1.0));
    rep.add("area growth", {{"cell", tag}, {"max_relative_error", growth}}, spec.tol("area_growth"),
            growth < spec.tol("area_growth") ? Verdict::pass : Verdict::fail);

    if (M->nonneg_ricci) {
      const double V = avr(*M);
      const bool conical = ms.id == "euclidean" || ms.id == "cone";
      for (double alpha : spec.alpha_list) {
        const double bound = std::pow(V * unit_sphere_area(n - 1), alpha / (n - 1));
        double worst = std::numeric_limits<double>::infinity(), eq = 0.0;
        bool hull_ok = true;
        std::vector<double> values;
        for (const auto& L : levels) {
          // h' >= 0 makes every coordinate sphere its own outward minimizing hull
          hull_ok = hull_ok && M->dh(src.potential().level_radius(L.t)) >= 0.0;
          const double m = minkowski_M(L, alpha, L.area(), n);
          values.push_back(m);
          worst = std::min(worst, m - bound);
          eq = std::max(eq, std::abs(m - bound) / bound);
        }
        const bool equality = eq < spec.tol("minkowski_equality");
        const std::string name = cell(tag, 1.0, alpha);
        rep.add("Minkowski inequality",
                {{"cell", name}, {"bound", bound}, {"avr", V}, {"min_margin", worst}, {"equality", equality}},
                spec.tol("minkowski_slack"),
                !hull_ok ? Verdict::not_guaranteed
                         : (worst >= -spec.tol("minkowski_slack") ? Verdict::pass : Verdict::fail));
        if (conical) {
          rep.add("Minkowski equality",
                  {{"cell", name}, {"expected", bound}, {"value", values.front()}, {"max_relative_error", eq}},
                  spec.tol("minkowski_equality"), equality ? Verdict::pass : Verdict::fail);
        }
        Table tab{name + "_minkowski", {"t", "M_alpha", "bound"}, {}};
        for (std::size_t k = 0; k < levels.size(); ++k) tab.add_row({levels[k].t, values[k], bound});
        rep.tables.push_back(std::move(tab));
      }
    }
    if (n == 3) hawking_checks(rep, spec, ms, src, tag, T);
  }
  return rep;
}

Report solver2d_suite(const ExperimentSpec& spec) {
  using std::numbers::pi;
  Report rep;
  rep.experiment = spec.name;
  add_environment(rep, spec);
  const double p = spec.p_list.front();
  const double alpha = spec.alpha_list.front();
  const auto& ds = spec.domain;
  const bool sphere = ds.shape == "sphere";
  auto domain = sphere ? make_sphere_domain(ds.equator, ds.R) : make_spheroid_domain(ds.axis, ds.equator, ds.R);
  const double T = spec.T > 0 ? spec.T : 1.0;
  const auto ts = sample(0.1 * T, T, spec.levels - 1);
  const std::string tag = domain.label;

  Table grid_tab{"grids",
                 {"n_sigma", "n_theta", "residual", "flux_spread", "identity_residual", "div_J", "div_Y",
                  "monotone_slack"},
                 {}};
  std::vector<double> identity, divJ, divY;
  std::vector<LevelSummary> finest;
  for (int N : spec.grids) {
    SolverOptions opt;
    opt.n_sigma = N;
    opt.n_theta = N / 2;
    auto f = spec.eps_list.empty() ? solve_2d(domain, p, ds.u_R, opt)
                                   : solve_2d(domain, p, spec.eps_list.front(), ds.u_R, opt);
    if (!f.converged) throw ConsistencyError("solver2d: nonlinear iteration did not converge");
    const std::string gname = tag + " " + std::to_string(N) + "x" + std::to_string(N / 2);
    rep.add("2d flux conservation", {{"cell", gname}, {"spread", f.flux_spread()}}, spec.tol("flux"),
            f.flux_spread() < spec.tol("flux") ? Verdict::pass : Verdict::fail);
    if (sphere) {
      auto rad = solve_wp_eps(make_euclidean(3), ds.equator, ds.R, p, -(p - 1) * std::log(ds.u_R), f.eps);
      // radii repeat along each ray on a sphere domain, and rad.u is a quadrature
      std::map<double, double> u_of_r;
      double err = 0.0;
      for (int i = 0; i <= f.n_sigma; ++i)
        for (int j = 0; j <= f.n_theta; ++j) {
          const double r = f.radius(f.xi(i), f.theta(j));
          auto it = u_of_r.find(r);
          if (it == u_of_r.end()) it = u_of_r.emplace(r, rad.u(r)).first;
          err = std::max(err, std::abs(f.u(i, j) - it->second));
        }
      rep.add("2d radial oracle", {{"cell", gname}, {"l_inf", err}}, spec.tol("l_inf"),
              err < spec.tol("l_inf") ? Verdict::pass : Verdict::fail);
    }
    auto geo = std::make_shared<const FieldGeometry>(std::make_shared<const Field2D>(std::move(f)));
    if (ts.back() >= geo->field().t_max()) throw DomainError("solver2d: level cap exceeds the grid");
    auto summary = level_functionals(*geo, ts);
    std::vector<double> gb;
    for (const auto& s : summary) gb.push_back(s.gauss_bonnet);
    double gb_dev = 0.0;
    for (double g : gb) gb_dev = std::max(gb_dev, std::abs(g - 1.0));
    rep.add("2d Gauss-Bonnet", {{"cell", gname}, {"values", gb}}, spec.tol("gauss_bonnet"),
            gb_dev <= spec.tol("gauss_bonnet") ? Verdict::pass : Verdict::fail);

    FieldLevelSource src(geo);
    auto F = F_p(src, make_params(3, p, alpha, ts));
    identity.push_back(F.relative_residual());

    // slack from the round control at the same resolution, where F_p is constant
    SolverOptions copt = opt;
    const double uc = std::pow(ds.R / ds.equator, -(3.0 - p) / (p - 1.0));
    auto control = std::make_shared<const FieldGeometry>(
        std::make_shared<const Field2D>(solve_2d(make_sphere_domain(ds.equator, ds.R), p, uc, copt)));
    const double ct = std::min(T, 0.9 * control->field().t_max());
    auto Fc = F_p(FieldLevelSource(control), make_params(3, p, alpha, sample(0.1 * ct, ct, spec.levels - 1)));
    double jitter = 0.0;
    for (std::size_t k = 1; k < Fc.value.size(); ++k)
      jitter = std::max(jitter, std::abs(Fc.value[k] - Fc.value[k - 1]));
    const double slack = 2.0 * jitter / (1.0 + max_abs(F.value));
    auto mono = check_monotone(F.value, slack);
    const bool guaranteed = make_params(3, p, alpha, {0.0}).theorem_range();
    auto vals = monotone_values(gname, mono, guaranteed);
    vals["control_jitter"] = jitter;
    rep.add("2d F_p nondecreasing", vals, slack, monotone_verdict(mono, guaranteed));

    auto dr = divergence_residuals(*geo, alpha, 0.1, 0.5, pi / 4, 3 * pi / 4);
    divJ.push_back(dr.J);
    divY.push_back(dr.Y);
    grid_tab.add_row({double(N), double(N / 2), geo->field().residual, geo->field().flux_spread(),
                      identity.back(), dr.J, dr.Y, slack});
    finest = std::move(summary);
  }
  const bool id_ok = identity.front() < spec.tol("identity_2d") &&
                     (identity.size() < 2 || strictly_decreasing(identity));
  rep.add("2d F_p derivative identity", {{"cell", tag}, {"grids", spec.grids}, {"values", identity}},
          spec.tol("identity_2d"), id_ok ? Verdict::pass : Verdict::fail);
  if (spec.grids.size() >= 2) {
    auto orders = [](const std::vector<double>& r) {
      std::vector<double> o;
      for (std::size_t k = 1; k < r.size(); ++k) o.push_back(std::log2(r[k - 1] / r[k]));
      return o;
    };
    for (auto [name, res] : {std::pair{"2d divergence order J", &divJ}, std::pair{"2d divergence order Y", &divY}}) {
      const auto o = orders(*res);
      const bool ok = *std::min_element(o.begin(), o.end()) >= spec.tol("divergence_order");
      rep.add(name, {{"cell", tag}, {"residuals", *res}, {"orders", o}}, spec.tol("divergence_order"),
              ok ? Verdict::pass : Verdict::fail);
    }
  }
  Table lv{"levels", {"t", "area", "G_power", "willmore", "traceless", "tangential", "gauss_bonnet",
                      "curvature_mismatch"}, {}};
  for (const auto& s : finest)
    lv.add_row({s.t, s.area, s.G_power, s.willmore, s.traceless, s.tangential, s.gauss_bonnet,
                s.curvature_mismatch});
  rep.tables.push_back(std::move(grid_tab));
  rep.tables.push_back(std::move(lv));
  return rep;
}

Report run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  if (spec.suite == "series") return series_suite(spec);
  if (spec.suite == "monotonicity") return monotonicity_suite(spec);
  if (spec.suite == "p_to_1") return p_to_1_suite(spec);
  if (spec.suite == "eps_to_0") return eps_to_0_suite(spec);
  if (spec.suite == "inequality") return inequality_suite(spec);
  if (spec.suite == "equality") return equality_suite(spec);
  return solver2d_suite(spec);
}

}  // namespace pcap
