#include "pcap/radial.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pcap {

std::string to_string(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::p_potential: return "p-potential";
    case PotentialKind::imcf: return "imcf";
    case PotentialKind::eps_regularized: return "eps-regularized";
  }
  return "unknown";
}

namespace {

void check_annulus(const RadialManifold& M, double r0, double R) {
  if (!(r0 < R)) throw ParameterError("annulus requires r0 < R");
  M.check_radius(r0);
  M.check_radius(R);
}

void check_p(double p) {
  if (!(p > 1.0 && p <= 2.0)) throw ParameterError("p must lie in (1, 2]");
}

void check_regular_lapse(const RadialManifold& M, double r0) {
  if (!std::isfinite(M.f(r0)))
    throw DomainError(M.label + ": lapse singular at r0; choose r0 > r_min");
}

// log(1 - e^{-x}) for x > 0
double log_one_minus_exp_neg(double x) { return std::log(-std::expm1(-x)); }

}  // namespace

double imcf_outer_datum(const RadialManifold& M, double r0, double R) {
  return (M.n - 1) * std::log(M.h(R) / M.h(r0));
}

double scale_invariant_outer_datum(const RadialManifold& M, double r0, double R, double p) {
  return (M.n - p) / (M.n - 1.0) * imcf_outer_datum(M, r0, R);
}

double RadialPotential::log_phi_integral(double r) const {
  if (r >= R_) return -std::numeric_limits<double>::infinity();
  const double k = (n() - 1) / (p_ - 1);
  const double log_hr = std::log(M_->h(r));
  auto fn = [&](double s) { return M_->f(s) * std::exp(-k * (std::log(M_->h(s)) - log_hr)); };
  return std::log(integrate(fn, r, R_, opt_.quad));
}

double regularized_slope(double y, double p, double eps, const Tolerance& tol) {
  if (!(y > 0)) throw DomainError("regularized_slope: y must be > 0");
  if (p == 2.0) return y;
  const double ly = std::log(y);
  const double le = std::log(eps);
  // F(l) = l + (p-2)/2 log(e^{2l} + eps^2) - log y, slope in [p-1, 1]
  auto F = [&](double l) { return l + 0.5 * (p - 2.0) * log_sum_exp(2.0 * l, 2.0 * le) - ly; };
  const double lo = std::max(ly / (p - 1.0), ly - (p - 2.0) * le);
  const double flo = F(lo);
  if (flo >= 0.0) return std::exp(lo);
  const double hi = lo - flo / (p - 1.0) + 1e-12 * (1.0 + std::abs(lo));
  return std::exp(find_root(F, lo, hi, tol));
}

double RadialPotential::eps_log_slope(double r, double log_c) const {
  const double log_y = log_c - (n() - 1) * std::log(M_->h(r));
  return std::log(regularized_slope(std::exp(log_y), p_, eps_, opt_.root));
}

double RadialPotential::eps_slope_integral(double a, double b, double log_c) const {
  auto fn = [&](double s) { return M_->f(s) * std::exp(eps_log_slope(s, log_c)); };
  return integrate(fn, a, b, opt_.quad);
}

RadialPotential solve_wp(ManifoldPtr M, double r0, double R, double p, double phi_R,
                         const RadialOptions& opt) {
  check_annulus(*M, r0, R);
  check_p(p);
  check_regular_lapse(*M, r0);
  if (!(phi_R > 0)) throw ParameterError("phi_R must be > 0");
  RadialPotential pot;
  pot.M_ = std::move(M);
  pot.kind_ = PotentialKind::p_potential;
  pot.p_ = p;
  pot.r0_ = r0;
  pot.R_ = R;
  pot.phi_R_ = phi_R;
  pot.opt_ = opt;
  pot.log_uR_ = -phi_R / (p - 1.0);
  pot.log_one_minus_uR_ = log_one_minus_exp_neg(phi_R / (p - 1.0));
  pot.log_phi_r0_ = pot.log_phi_integral(r0);
  pot.log_flux_ = (pot.n() - 1) * std::log(pot.M_->h(r0)) +
                  (p - 1.0) * (pot.log_one_minus_uR_ - pot.log_phi_r0_);
  return pot;
}

RadialPotential solve_w1(ManifoldPtr M, double r0, double R, const RadialOptions& opt) {
  check_annulus(*M, r0, R);
  constexpr int kSamples = 400;
  for (int i = 0; i <= kSamples; ++i) {
    const double r = r0 + (R - r0) * i / kSamples;
    if (!(M->dh(r) > 0)) {
      std::ostringstream msg;
      msg << M->label << ": h' <= 0 at r = " << r << "; not outward minimizing";
      throw DomainError(msg.str());
    }
  }
  RadialPotential pot;
  pot.M_ = std::move(M);
  pot.kind_ = PotentialKind::imcf;
  pot.p_ = 1.0;
  pot.r0_ = r0;
  pot.R_ = R;
  pot.opt_ = opt;
  pot.phi_R_ = imcf_outer_datum(*pot.M_, r0, R);
  return pot;
}

RadialPotential solve_wp_eps(ManifoldPtr M, double r0, double R, double p, double phi_R,
                             double eps, const RadialOptions& opt) {
  if (!(eps > 0)) throw ParameterError("eps must be > 0 (use solve_wp for eps = 0)");
  RadialPotential base = solve_wp(M, r0, R, p, phi_R, opt);
  RadialPotential pot = base;
  pot.kind_ = PotentialKind::eps_regularized;
  pot.eps_ = eps;
  const double target = pot.log_one_minus_uR_;
  // int_{r0}^R f s dr increases with C
  auto mismatch = [&](double log_c) {
    return std::log(pot.eps_slope_integral(r0, R, log_c)) - target;
  };
  double lo = base.log_flux_ - 0.5, hi = base.log_flux_ + 0.5;
  double flo = mismatch(lo), fhi = mismatch(hi);
  const double step = std::log(10.0);
  for (int i = 0; i < 60 && flo > 0; ++i) {
    hi = lo;
    fhi = flo;
    lo -= step;
    flo = mismatch(lo);
  }
  for (int i = 0; i < 60 && fhi < 0; ++i) {
    lo = hi;
    flo = fhi;
    hi += step;
    fhi = mismatch(hi);
  }
  if (flo > 0 || fhi < 0) throw BracketError("solve_wp_eps: shooting bracket not found");
  Tolerance shoot{1e-14, 1e-14, 200};
  pot.log_flux_ = find_root(mismatch, lo, hi, shoot);
  pot.log_J_r0_ = std::log(pot.eps_slope_integral(r0, R, pot.log_flux_));
  return pot;
}

double RadialPotential::log_u(double r) const {
  M_->check_radius(r);
  if (r < r0_ - 1e-14 * r0_ || r > R_ + 1e-14 * R_) {
    std::ostringstream msg;
    msg << "radius " << r << " outside annulus [" << r0_ << ", " << R_ << "]";
    throw DomainError(msg.str());
  }
  r = std::clamp(r, r0_, R_);
  switch (kind_) {
    case PotentialKind::p_potential: {
      const double k = (n() - 1) / (p_ - 1);
      const double inner = log_one_minus_uR_ + k * std::log(M_->h(r0_) / M_->h(r)) +
                           log_phi_integral(r) - log_phi_r0_;
      return log_sum_exp(log_uR_, inner);
    }
    case PotentialKind::eps_regularized: {
      if (r >= R_) return log_uR_;
      const double J = eps_slope_integral(r, R_, log_flux_);
      return log_sum_exp(log_uR_, log_one_minus_uR_ + std::log(J) - log_J_r0_);
    }
    case PotentialKind::imcf:
      break;
  }
  throw DomainError("u is not defined for the imcf potential");
}

double RadialPotential::w(double r) const {
  if (kind_ == PotentialKind::imcf) {
    M_->check_radius(r);
    return (n() - 1) * std::log(M_->h(r) / M_->h(r0_));
  }
  if (r <= r0_) {
    if (r < r0_ - 1e-14 * r0_) throw DomainError("radius below r0");
    return 0.0;
  }
  return -(p_ - 1.0) * log_u(r);
}

double RadialPotential::log_slope(double r) const {
  M_->check_radius(r);
  switch (kind_) {
    case PotentialKind::p_potential: {
      const double k = (n() - 1) / (p_ - 1);
      return log_one_minus_uR_ + k * std::log(M_->h(r0_) / M_->h(r)) - log_phi_r0_;
    }
    case PotentialKind::eps_regularized:
      return eps_log_slope(r, log_flux_) + log_one_minus_uR_ - log_J_r0_;
    case PotentialKind::imcf:
      break;
  }
  throw DomainError("slope is not defined for the imcf potential");
}

double RadialPotential::slope(double r) const { return std::exp(log_slope(r)); }

double RadialPotential::grad_norm(double r) const {
  if (kind_ == PotentialKind::imcf) return mean_curvature_sphere(*M_, r);
  return (p_ - 1.0) * std::exp(log_slope(r) - log_u(r));
}

double RadialPotential::theta_eps(double r) const {
  if (kind_ != PotentialKind::eps_regularized) return 0.0;
  const double s = slope(r);
  return eps_ * eps_ / (s * s + eps_ * eps_);
}

double RadialPotential::grad_norm_radial_derivative(double r) const {
  const RadialManifold& M = *M_;
  const double g = M.g_inv(r);
  const double hv = M.h(r);
  const double hs = g * M.dh(r);                         // dh/d(rho)
  const double hss = g * g * M.d2h(r) + M.g_dg(r) * M.dh(r);  // d^2h/d(rho)^2
  if (kind_ == PotentialKind::imcf)
    return (n() - 1) * (hss / hv - hs * hs / (hv * hv));
  const double G = grad_norm(r);
  const double theta = theta_eps(r);
  // s_rho / s from differentiating h^{n-1} psi(s) = C
  const double ds_over_s = -(n() - 1) * (hs / hv) / ((p_ - 1.0) + (2.0 - p_) * theta);
  return G * (ds_over_s + G / (p_ - 1.0));
}

double RadialPotential::mean_curvature_from_potential(double r) const {
  if (kind_ == PotentialKind::imcf) return grad_norm(r);
  const double G = grad_norm(r);
  const double Gr = grad_norm_radial_derivative(r);
  const double theta = theta_eps(r);
  return (G - (p_ - 1.0) * Gr / G) * (1.0 + (2.0 - p_) * theta / (p_ - 1.0));
}

double RadialPotential::level_radius(double t) const {
  if (t < 0.0 || t > phi_R_ * (1.0 + 1e-14)) {
    std::ostringstream msg;
    msg << "level " << t << " outside [0, " << phi_R_ << "]";
    throw DomainError(msg.str());
  }
  if (t == 0.0) return r0_;
  if (kind_ == PotentialKind::imcf) {
    const double target = std::log(M_->h(r0_)) + t / (n() - 1);
    auto fn = [&](double r) { return std::log(M_->h(r)) - target; };
    return find_root(fn, r0_, R_, opt_.root);
  }
  if (t >= phi_R_) return R_;
  // -log u is increasing; compare in u-space to keep the root find cheap
  const double target = -t / (p_ - 1.0);
  auto fn = [&](double r) { return target - log_u(r); };
  return find_root(fn, r0_, R_, opt_.root);
}

double capacity_level_integral(const RadialPotential& pot, double tau) {
  if (pot.kind() != PotentialKind::p_potential)
    throw ParameterError("capacity requires a p-potential");
  const int n = pot.n();
  const double p = pot.p();
  const double r = pot.level_radius(tau);
  const double area = cross_section(pot.manifold(), r).area;
  const double G = pot.grad_norm(r);
  return std::exp(-tau) / unit_sphere_area(n - 1) * area * std::pow(G / (n - p), p - 1.0);
}

double capacity(const RadialPotential& pot, double t, double T, std::span<const double> taus) {
  if (pot.kind() != PotentialKind::p_potential)
    throw ParameterError("capacity requires a p-potential");
  if (!(t >= 0 && t < T && T <= pot.phi_R() * (1.0 + 1e-14)))
    throw DomainError("capacity requires 0 <= t < T <= phi_R");
  if (taus.empty()) throw ParameterError("capacity: no tau values");
  const double p = pot.p();
  // (e^{-t/(p-1)} - e^{-T/(p-1)})^{p-1} in log form
  const double log_den = -t + (p - 1.0) * log_one_minus_exp_neg((T - t) / (p - 1.0));
  double first = 0.0, lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    if (taus[i] < 0) throw DomainError("capacity: tau must be >= 0");
    const double v = capacity_level_integral(pot, taus[i]);
    if (i == 0) first = lo = hi = v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi - lo > 1e-8 * std::abs(first)) {
    std::ostringstream msg;
    msg << "capacity: level integral depends on tau (spread " << (hi - lo) / std::abs(first) << ")";
    throw ConsistencyError(msg.str());
  }
  return std::exp(std::log(first) - log_den);
}

double capacity(const RadialPotential& pot, double t, double T) {
  const double taus[] = {0.0, 0.5 * T, 0.75 * T};
  return capacity(pot, t, T, taus);
}

}  // namespace pcap
