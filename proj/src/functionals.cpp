#include "pcap/functionals.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace pcap {

using std::numbers::pi;

LevelData RadialLevelSource::level(double t) const {
  {
    std::lock_guard lock(cache_->mutex);
    if (auto it = cache_->levels.find(t); it != cache_->levels.end()) return it->second;
  }
  const RadialManifold& M = pot_.manifold();
  const double r = radius(t);
  const CrossSection cs = cross_section(M, r);
  LevelData L;
  L.t = t;
  auto one = [](double v) { return Eigen::ArrayXd::Constant(1, v); };
  L.weight = one(cs.area);
  L.G = one(pot_.grad_norm(r));
  L.H = one(mean_curvature_sphere(M, r));
  L.traceless2 = one(0.0);
  L.tangential_G2 = one(0.0);
  L.tangential_H2 = one(0.0);
  L.ricci = one(ricci_radial(M, r));
  L.scalar = one(scalar_curvature(M, r));
  L.scalar_induced = one(cs.induced_scalar);
  L.theta = one(pot_.theta_eps(r));
  std::lock_guard lock(cache_->mutex);
  cache_->levels.emplace(t, L);
  return L;
}

double RadialLevelSource::radius(double t) const {
  {
    std::lock_guard lock(cache_->mutex);
    if (auto it = cache_->radii.find(t); it != cache_->radii.end()) return it->second;
  }
  const double r = pot_.level_radius(t);
  std::lock_guard lock(cache_->mutex);
  cache_->radii.emplace(t, r);
  return r;
}

double RadialLevelSource::ricci_bulk(double a, double b, double c, double beta) const {
  if (b <= a) return 0.0;
  const RadialManifold& M = pot_.manifold();
  if (M.kind == ModelKind::euclidean || M.kind == ModelKind::cone) return 0.0;
  const double ra = radius(a);
  const double rb = radius(b);
  const int n = M.n;
  const double area_unit = unit_sphere_area(n - 1);
  auto integrand = [&](double r) {
    double w, G, dw_dr;
    if (pot_.kind() == PotentialKind::imcf) {
      w = pot_.w(r);
      G = pot_.grad_norm(r);
      dw_dr = (n - 1) * M.dh(r) / M.h(r);
    } else {
      const double p = pot_.p();
      const double lu = pot_.log_u(r);
      w = -(p - 1) * lu;
      G = (p - 1) * std::exp(pot_.log_slope(r) - lu);
      dw_dr = M.f(r) * G;
    }
    const double area = area_unit * std::pow(M.h(r), n - 1);
    return std::exp(c * w) * area * std::pow(G, beta) * ricci_radial(M, r) * dw_dr;
  };
  // smooth integrand with costly evaluations: high-order rule, few nodes
  double err = 0.0;
  const double v =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, ra, rb, 12, 1e-11, &err);
  if (!(err <= 1e-9 * std::abs(v) + 1e-300))
    throw QuadratureError("ricci_bulk: Gauss-Kronrod did not converge", v);
  return v;
}

std::string RadialLevelSource::describe() const {
  std::ostringstream s;
  s << to_string(pot_.kind()) << " on " << pot_.manifold().label << ", r0=" << pot_.r0()
    << ", R=" << pot_.R();
  if (pot_.kind() != PotentialKind::imcf) s << ", p=" << pot_.p();
  if (pot_.kind() == PotentialKind::eps_regularized) s << ", eps=" << pot_.eps();
  return s.str();
}

bool FunctionalParams::theorem_range() const { return alpha > (n - p) / (n - 1.0); }

bool FunctionalParams::termwise_nonnegative() const {
  return alpha >= std::max(2.0 - p, (n - p) / (n - 1.0));
}

bool FunctionalParams::introduction_range() const {
  return p < n && alpha >= (n - 1.0) / (n - p);
}

void FunctionalParams::validate() const {
  if (n < 3) throw ParameterError("dimension must be >= 3");
  if (!(p >= 1.0 && p <= 2.0)) throw ParameterError("p must lie in [1, 2]");
  if (!(alpha > 0)) throw ParameterError("alpha must be > 0");
  if (t_grid.empty()) throw ParameterError("empty t grid");
  if (t_grid.front() < 0) throw ParameterError("t grid must start at t >= 0");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1])) throw ParameterError("t grid must be strictly increasing");
  if (!(fd_step > 0)) throw ParameterError("fd_step must be > 0");
}

FunctionalParams make_params(int n, double p, double alpha, std::vector<double> t_grid) {
  FunctionalParams prm;
  prm.n = n;
  prm.p = p;
  prm.alpha = alpha;
  prm.t_grid = std::move(t_grid);
  prm.validate();
  return prm;
}

std::vector<double> uniform_levels(double T, int count) {
  if (count < 2 || !(T > 0)) throw ParameterError("uniform_levels: need count >= 2 and T > 0");
  std::vector<double> t(count);
  for (int k = 0; k < count; ++k) t[k] = T * k / (count - 1);
  t.back() = T;
  return t;
}

double MonotoneSeries::relative_residual() const {
  double num = 0, den = 0, scale = 0;
  for (std::size_t k = 0; k < residual.size(); ++k) {
    if (std::isfinite(residual[k])) num = std::max(num, residual[k]);
    den = std::max(den, std::abs(rhs_qp[k]));
    scale = std::max(scale, std::abs(value[k]));
  }
  return num / std::max(den, 1e-8 * scale);
}

namespace {

void check_source(const LevelSource& src, const FunctionalParams& prm) {
  prm.validate();
  if (src.n() != prm.n) throw ParameterError("dimension of source and parameters differ");
  if (std::abs(src.p() - prm.p) > 1e-15) throw ParameterError("p of source and parameters differ");
  if (prm.t_grid.back() > src.t_max() * (1 + 1e-14))
    throw DomainError("t grid exceeds the range of the solution");
}

double growth(const FunctionalParams& prm) {
  return prm.alpha / (prm.n - prm.p) - 1.0;
}

// signed bulk from a to b
double bulk_between(const LevelSource& src, double a, double b, double c, double beta) {
  if (b >= a) return src.ricci_bulk(a, b, c, beta);
  return -src.ricci_bulk(b, a, c, beta);
}

}  // namespace

double five_point_derivative(const std::function<double(double)>& fn, double t, double step,
                             double lo, double hi) {
  if (t - 2 * step >= lo && t + 2 * step <= hi)
    return (fn(t - 2 * step) - 8 * fn(t - step) + 8 * fn(t + step) - fn(t + 2 * step)) /
           (12 * step);
  const double h = (t - 2 * step < lo) ? step : -step;
  return (-25 * fn(t) + 48 * fn(t + h) - 36 * fn(t + 2 * h) + 16 * fn(t + 3 * h) -
          3 * fn(t + 4 * h)) / (12 * h);
}

double F_p_boundary_term(const LevelData& L, int n, double p, double alpha) {
  const double c = alpha / (n - p) - 1.0;
  const double k = (n - 1.0) / (n - p) - 1.0 / alpha;
  const Eigen::ArrayXd f = L.G.pow(alpha + p - 2) * (L.G * k - L.H);
  return std::exp(c * L.t) * L.integral(f);
}

double Q_p_integral(const LevelData& L, int n, double p, double alpha) {
  Eigen::ArrayXd q = (alpha - (2.0 - p)) * L.tangential_G2 + L.traceless2;
  if (p > 1.0) {
    const Eigen::ArrayXd d = L.H - (n - 1.0) / (n - p) * L.G;
    q += (alpha - (n - p) / (n - 1.0)) / (p - 1.0) * d.square();
  }
  return L.integral(L.G.pow(alpha + p - 3) * q);
}

double Q_p_integral(const LevelSource& src, const FunctionalParams& prm, double t) {
  check_source(src, prm);
  return Q_p_integral(src.level(t), prm.n, prm.p, prm.alpha);
}

MonotoneSeries F_p(const LevelSource& src, const FunctionalParams& prm) {
  check_source(src, prm);
  if (prm.p <= 1.0) throw ParameterError("F_p requires p > 1; use F_1");
  const double c = growth(prm);
  const double beta = prm.alpha + prm.p - 3.0;
  MonotoneSeries s;
  s.name = "F_p";
  s.source = src.describe();
  s.guaranteed = prm.theorem_range();
  double bulk = 0.0, t_prev = 0.0;
  for (double t : prm.t_grid) {
    bulk += src.ricci_bulk(t_prev, t, c, beta);
    t_prev = t;
    const LevelData L = src.level(t);
    const double value = F_p_boundary_term(L, prm.n, prm.p, prm.alpha) - bulk;
    const double rhs = std::exp(c * t) * Q_p_integral(L, prm.n, prm.p, prm.alpha);
    auto F_at = [&, bulk_t = bulk, t0 = t](double tt) {
      return F_p_boundary_term(src.level(tt), prm.n, prm.p, prm.alpha) -
             (bulk_t + bulk_between(src, t0, tt, c, beta));
    };
    const double dF = five_point_derivative(F_at, t, prm.fd_step, 0.0, src.t_max());
    s.t.push_back(t);
    s.value.push_back(value);
    s.bulk.push_back(bulk);
    s.rhs_qp.push_back(rhs);
    s.residual.push_back(std::abs(dF - rhs));
  }
  return s;
}

double F_p_jump(const LevelSource& src, const FunctionalParams& prm) {
  FunctionalParams one = prm;
  one.t_grid = {0.0, prm.fd_step};
  const MonotoneSeries s = F_p(src, one);
  return s.value[1] - s.value[0];
}

MonotoneSeries G_p(const LevelSource& src, const FunctionalParams& prm) {
  const MonotoneSeries F = F_p(src, prm);
  const double c = growth(prm);
  const double gamma = prm.alpha + prm.p - 1.0;
  auto G_at = [&](double tt) {
    const LevelData L = src.level(tt);
    return std::exp(c * tt) * L.integral(L.G.pow(gamma));
  };
  MonotoneSeries s;
  s.name = "G_p";
  s.source = F.source;
  s.guaranteed = F.guaranteed;
  for (std::size_t k = 0; k < F.t.size(); ++k) {
    const double t = F.t[k];
    const double g = G_at(t);
    const double rhs = (g + prm.alpha * F.value[k] + prm.alpha * F.bulk[k]) / (prm.p - 1.0);
    const double dG = five_point_derivative(G_at, t, prm.fd_step, 0.0, src.t_max());
    s.t.push_back(t);
    s.value.push_back(g);
    s.bulk.push_back(F.bulk[k]);
    s.rhs_qp.push_back(rhs);
    s.residual.push_back(std::abs(dG - rhs));
  }
  return s;
}

MonotoneSeries F_1(const LevelSource& src, const FunctionalParams& prm) {
  check_source(src, prm);
  if (src.p() != 1.0) throw ParameterError("F_1 requires the inverse mean curvature flow potential");
  if (prm.alpha < 1.0) throw ParameterError("F_1 requires alpha >= 1");
  const int n = prm.n;
  const double alpha = prm.alpha;
  const double c = alpha / (n - 1.0) - 1.0;
  const double beta = alpha - 2.0;
  MonotoneSeries s;
  s.name = "F_1";
  s.source = src.describe();
  s.guaranteed = true;
  auto g_form = [&](const LevelData& L) {
    return -std::exp(c * L.t) / alpha * L.integral(L.G.pow(alpha));
  };
  auto h_form = [&](const LevelData& L) {
    return -std::exp(c * L.t) / alpha * L.integral(L.H.abs().pow(alpha));
  };
  double bulk = 0.0, t_prev = 0.0;
  for (double t : prm.t_grid) {
    bulk += src.ricci_bulk(t_prev, t, c, beta);
    t_prev = t;
    const LevelData L = src.level(t);
    const double rhs = std::exp(c * t) * Q_p_integral(L, n, 1.0, alpha);
    auto F_at = [&, bulk_t = bulk, t0 = t](double tt) {
      return g_form(src.level(tt)) - (bulk_t + bulk_between(src, t0, tt, c, beta));
    };
    const double dF = five_point_derivative(F_at, t, prm.fd_step, 0.0, src.t_max());
    s.t.push_back(t);
    s.value.push_back(g_form(L) - bulk);
    s.alt_value.push_back(h_form(L) - bulk);
    s.bulk.push_back(bulk);
    s.rhs_qp.push_back(rhs);
    s.residual.push_back(std::abs(dF - rhs));
  }
  return s;
}

double hawking_mass(double area, double willmore) {
  if (!(area > 0)) throw DomainError("hawking_mass: area must be > 0");
  return std::sqrt(area / (16 * pi)) * (1.0 - willmore / (16 * pi));
}

double hawking_mass(const LevelData& L) {
  return hawking_mass(L.area(), L.integral(L.H.square()));
}

double minkowski_M(const LevelData& L, double alpha, double area_hull, int n) {
  if (!(area_hull > 0)) throw DomainError("minkowski_M: hull area must be > 0");
  return std::pow(area_hull, alpha / (n - 1.0) - 1.0) *
         L.integral((L.H / (n - 1.0)).abs().pow(alpha));
}

double gauss_bonnet_number(const LevelData& L) {
  return L.integral(L.scalar_induced) / (8 * pi);
}

double geroch_rhs(const LevelData& L) {
  if ((L.H <= 0).any()) throw DomainError("geroch_rhs: mean curvature must be > 0");
  const double A = L.area();
  const double chi = L.integral(L.scalar_induced) / (4 * pi);
  const double bracket =
      4 * pi * (2 - chi) +
      L.integral(2 * L.tangential_H2 / L.H.square() + L.traceless2 + L.scalar);
  return std::sqrt(A / std::pow(16 * pi, 3)) * bracket;
}

}  // namespace pcap
