#include "pcap/geometry.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace pcap {

double unit_sphere_area(int k) {
  if (k < 0) throw ParameterError("unit_sphere_area: negative dimension");
  const double m = k + 1.0;
  return 2.0 * std::pow(std::numbers::pi, 0.5 * m) / std::tgamma(0.5 * m);
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::euclidean: return "euclidean";
    case ModelKind::cone: return "cone";
    case ModelKind::schwarzschild: return "schwarzschild";
    case ModelKind::tabulated: return "tabulated";
  }
  return "unknown";
}

void RadialManifold::check_radius(double r) const {
  if (!(r >= r_min) || !(r <= r_max)) {
    std::ostringstream msg;
    msg << label << ": radius " << r << " outside [" << r_min << ", " << r_max << "]";
    throw DomainError(msg.str());
  }
}

namespace {

void validate_samples(const RadialManifold& M, double lo, double hi) {
  constexpr int kSamples = 400;
  for (int i = 0; i <= kSamples; ++i) {
    const double r = lo + (hi - lo) * i / kSamples;
    const double hv = M.h(r), gv = M.g_inv(r), dhv = M.dh(r);
    if (!(hv > 0) || !(gv >= 0) || !std::isfinite(gv)) {
      std::ostringstream msg;
      msg << M.label << ": f or h not positive at r = " << r;
      throw DomainError(msg.str());
    }
    if (dhv < -1e-12 * std::abs(hv)) {
      std::ostringstream msg;
      msg << M.label << ": h' < 0 at r = " << r << " (coordinate spheres not outward minimizing)";
      throw DomainError(msg.str());
    }
  }
}

}  // namespace

ManifoldPtr make_cone(int n, double a) {
  if (n < 3) throw ParameterError("dimension must be >= 3");
  if (!(a > 0.0 && a <= 1.0)) throw ParameterError("cone aperture must lie in (0, 1]");
  auto M = std::make_shared<RadialManifold>();
  M->n = n;
  M->f = [](double) { return 1.0; };
  M->df = [](double) { return 0.0; };
  M->g_inv = [](double) { return 1.0; };
  M->g_dg = [](double) { return 0.0; };
  M->h = [a](double r) { return a * r; };
  M->dh = [a](double) { return a; };
  M->d2h = [](double) { return 0.0; };
  M->r_min = 0.0;
  M->avr_hint = std::pow(a, n - 1);
  M->nonneg_ricci = true;
  M->parameter = a;
  if (a == 1.0) {
    M->kind = ModelKind::euclidean;
    M->label = "euclidean";
  } else {
    M->kind = ModelKind::cone;
    std::ostringstream lbl;
    lbl << "cone(a=" << a << ")";
    M->label = lbl.str();
  }
  return M;
}

ManifoldPtr make_euclidean(int n) { return make_cone(n, 1.0); }

ManifoldPtr make_schwarzschild(double m) {
  if (!(m > 0.0)) throw ParameterError("schwarzschild mass must be > 0");
  auto M = std::make_shared<RadialManifold>();
  M->n = 3;
  M->f = [m](double r) { return std::sqrt(r / (r - 2.0 * m)); };
  M->df = [m](double r) { return -m / (r * r) * std::pow(r / (r - 2.0 * m), 1.5); };
  M->g_inv = [m](double r) { return std::sqrt((r - 2.0 * m) / r); };
  M->g_dg = [m](double r) { return m / (r * r); };
  M->h = [](double r) { return r; };
  M->dh = [](double) { return 1.0; };
  M->d2h = [](double) { return 0.0; };
  M->horizon_weight = [m](double x) { return 2.0 * std::sqrt(2.0 * m + x * x); };
  M->r_min = 2.0 * m;
  M->kind = ModelKind::schwarzschild;
  M->parameter = m;
  std::ostringstream lbl;
  lbl << "schwarzschild(m=" << m << ")";
  M->label = lbl.str();
  return M;
}

ManifoldPtr make_tabulated(int n, const std::vector<TabulatedSample>& samples,
                           bool nonneg_ricci, std::string label) {
  if (n < 3) throw ParameterError("dimension must be >= 3");
  const auto k = static_cast<Eigen::Index>(samples.size());
  if (k < 4) throw ParameterError("tabulated model needs at least 4 samples");
  Eigen::VectorXd r(k), f(k), h(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    r(i) = samples[i].r;
    f(i) = samples[i].f;
    h(i) = samples[i].h;
    if (i > 0 && !(r(i) > r(i - 1)))
      throw ParameterError("tabulated model: r must be strictly increasing");
    if (!(h(i) > 0)) throw ParameterError("tabulated model: h must be > 0");
    if (!(f(i) > 0)) throw ParameterError("tabulated model: f must be > 0");
  }
  auto fs = std::make_shared<CubicSpline>(r, f);
  auto hs = std::make_shared<CubicSpline>(r, h);
  auto M = std::make_shared<RadialManifold>();
  M->n = n;
  M->f = [fs](double x) { return (*fs)(x); };
  M->df = [fs](double x) { return fs->d1(x); };
  M->g_inv = [fs](double x) { return 1.0 / (*fs)(x); };
  M->g_dg = [fs](double x) {
    const double fv = (*fs)(x);
    return -fs->d1(x) / (fv * fv * fv);
  };
  M->h = [hs](double x) { return (*hs)(x); };
  M->dh = [hs](double x) { return hs->d1(x); };
  M->d2h = [hs](double x) { return hs->d2(x); };
  M->r_min = r(0);
  M->r_max = r(k - 1);
  M->kind = ModelKind::tabulated;
  M->label = std::move(label);
  M->nonneg_ricci = nonneg_ricci;
  validate_samples(*M, M->r_min, M->r_max);
  for (Eigen::Index i = 0; i + 1 < k; ++i) {
    // the interpolant itself must stay positive between knots
    for (int j = 1; j < 8; ++j) {
      const double x = r(i) + (r(i + 1) - r(i)) * j / 8.0;
      if (!((*hs)(x) > 0) || !((*fs)(x) > 0))
        throw ParameterError("tabulated model: interpolated f or h not positive");
    }
  }
  if (nonneg_ricci) {
    constexpr int kSamples = 400;
    for (int i = 0; i <= kSamples; ++i) {
      const double x = M->r_min + (M->r_max - M->r_min) * i / kSamples;
      const double scale = 1.0 / (M->h(x) * M->h(x));
      if (ricci_radial(*M, x) < -1e-8 * scale || ricci_tangential(*M, x) < -1e-8 * scale) {
        std::ostringstream msg;
        msg << M->label << ": flagged nonneg-Ricci but Ricci < 0 at r = " << x;
        throw DomainError(msg.str());
      }
    }
  }
  return M;
}

ManifoldPtr load_tabulated(int n, const std::string& path, bool nonneg_ricci) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open tabulated model file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(path + ": " + e.what());
  }
  if (!doc.is_array()) throw ParameterError(path + ": expected a JSON array of {r, f, h}");
  std::vector<TabulatedSample> samples;
  for (const auto& row : doc) {
    if (!row.is_object() || !row.contains("r") || !row.contains("f") || !row.contains("h") ||
        row.size() != 3)
      throw ParameterError(path + ": each entry must be an object with keys r, f, h");
    samples.push_back({row.at("r").get<double>(), row.at("f").get<double>(),
                       row.at("h").get<double>()});
  }
  return make_tabulated(n, samples, nonneg_ricci, "tabulated(" + path + ")");
}

double mean_curvature_sphere(const RadialManifold& M, double r) {
  M.check_radius(r);
  return (M.n - 1) * M.g_inv(r) * M.dh(r) / M.h(r);
}

namespace {

// second derivative of h in proper distance: g (g h')'
double h_ss(const RadialManifold& M, double r) {
  const double g = M.g_inv(r);
  return g * g * M.d2h(r) + M.g_dg(r) * M.dh(r);
}

double h_s(const RadialManifold& M, double r) { return M.g_inv(r) * M.dh(r); }

}  // namespace

double ricci_radial(const RadialManifold& M, double r) {
  M.check_radius(r);
  return -(M.n - 1) * h_ss(M, r) / M.h(r);
}

double ricci_tangential(const RadialManifold& M, double r) {
  M.check_radius(r);
  const double hv = M.h(r);
  const double hs = h_s(M, r);
  return -h_ss(M, r) / hv + (M.n - 2) * (1.0 - hs * hs) / (hv * hv);
}

double scalar_curvature(const RadialManifold& M, double r) {
  M.check_radius(r);
  const double hv = M.h(r);
  const double hs = h_s(M, r);
  return -2.0 * (M.n - 1) * h_ss(M, r) / hv +
         (M.n - 1.0) * (M.n - 2.0) * (1.0 - hs * hs) / (hv * hv);
}

CrossSection cross_section(const RadialManifold& M, double r) {
  M.check_radius(r);
  const double hv = M.h(r);
  return {unit_sphere_area(M.n - 1) * std::pow(hv, M.n - 1),
          (M.n - 1.0) * (M.n - 2.0) / (hv * hv)};
}

double avr(const RadialManifold& M) {
  if (M.avr_hint) return *M.avr_hint;
  if (std::isfinite(M.r_max)) throw DomainError(M.label + ": AVR undefined (bounded radial range)");
  const double R = std::max(100.0, 100.0 * M.r_min);
  double v[4];
  for (int k = 0; k < 4; ++k) {
    const double r = R * std::ldexp(1.0, k);
    v[k] = std::pow(M.h(r) / r, M.n - 1);
  }
  // first-order Richardson on a 1/r tail
  double e[3];
  for (int k = 0; k < 3; ++k) e[k] = 2.0 * v[k + 1] - v[k];
  const double hi = std::max({e[0], e[1], e[2]});
  const double lo = std::min({e[0], e[1], e[2]});
  if (!std::isfinite(e[2]) || !(e[2] > 0) || (hi - lo) > 1e-4 * std::abs(e[2]))
    throw DomainError(M.label + ": AVR undefined (extrapolation does not settle)");
  return e[2];
}

double proper_distance(const RadialManifold& M, double a, double b, const Tolerance& tol) {
  M.check_radius(a);
  M.check_radius(b);
  if (std::isfinite(M.f(a))) return integrate(M.f, a, b, tol);
  if (a != M.r_min || !M.horizon_weight)
    throw DomainError(M.label + ": lapse singular at r = " + std::to_string(a));
  return integrate(M.horizon_weight, 0.0, std::sqrt(b - a), tol);
}

}  // namespace pcap
