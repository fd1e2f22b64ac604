#pragma once

#include "pcap/geometry.hpp"

#include <span>

namespace pcap {

enum class PotentialKind { p_potential, imcf, eps_regularized };

std::string to_string(PotentialKind kind);

struct RadialOptions {
  // pure relative control: the integrands span hundreds of orders of
  // magnitude when p is close to 1
  Tolerance quad{1e-300, 1e-13, 60};
  Tolerance root{1e-15, 4e-16, 400};
};

/// Radial solution on the annulus r0 <= r <= R. All evaluators are backed by
/// quadrature over the flux relation; nothing is stored on a grid.
class RadialPotential {
 public:
  PotentialKind kind() const { return kind_; }
  const RadialManifold& manifold() const { return *M_; }
  const ManifoldPtr& manifold_ptr() const { return M_; }
  int n() const { return M_->n; }
  double p() const { return p_; }  // 1 for imcf
  double eps() const { return eps_; }
  double r0() const { return r0_; }
  double R() const { return R_; }
  double phi_R() const { return phi_R_; }
  /// Flux constant C = h^{n-1} psi(|u'|/f), psi(s) = s (s^2 + eps^2)^{(p-2)/2}.
  double flux() const { return std::exp(log_flux_); }
  double log_flux() const { return log_flux_; }

  double w(double r) const;
  double log_u(double r) const;
  double u(double r) const { return std::exp(log_u(r)); }
  /// |u'|/f, the slope of u in proper distance.
  double slope(double r) const;
  double log_slope(double r) const;
  /// |grad w|.
  double grad_norm(double r) const;
  /// d|grad w|/d(proper distance), from the flux relation.
  double grad_norm_radial_derivative(double r) const;
  double theta_eps(double r) const;
  /// (|grad w| - (p-1) <grad|grad w|, grad w>/|grad w|^2)(1 + (2-p) theta/(p-1)).
  double mean_curvature_from_potential(double r) const;
  /// Radius of the level set {w = t}, t in [0, phi_R].
  double level_radius(double t) const;

  const RadialOptions& options() const { return opt_; }

 private:
  friend RadialPotential solve_wp(ManifoldPtr, double, double, double, double,
                                  const RadialOptions&);
  friend RadialPotential solve_w1(ManifoldPtr, double, double, const RadialOptions&);
  friend RadialPotential solve_wp_eps(ManifoldPtr, double, double, double, double,
                                      double, const RadialOptions&);

  RadialPotential() = default;

  // p-potential: int_r^R f(s) (h(s)/h(r))^{-k} ds
  double log_phi_integral(double r) const;
  // eps-regularized: slope recovered from the flux constant
  double eps_log_slope(double r, double log_c) const;
  double eps_slope_integral(double a, double b, double log_c) const;

  ManifoldPtr M_;
  PotentialKind kind_ = PotentialKind::p_potential;
  double p_ = 2.0;
  double eps_ = 0.0;
  double r0_ = 1.0;
  double R_ = 2.0;
  double phi_R_ = 0.0;
  double log_flux_ = 0.0;
  double log_uR_ = 0.0;
  double log_one_minus_uR_ = 0.0;
  double log_phi_r0_ = 0.0;  // p-potential: log int_{r0}^R f (h/h0)^{-k}
  double log_J_r0_ = 0.0;    // eps: log int_{r0}^R f s
  RadialOptions opt_;
};

/// Outer datum of the IMCF potential, w1(R) = (n-1) log(h(R)/h(r0)).
double imcf_outer_datum(const RadialManifold& M, double r0, double R);
/// (n-p)/(n-1) w1(R): reproduces the whole-space potential on cones.
double scale_invariant_outer_datum(const RadialManifold& M, double r0, double R, double p);

RadialPotential solve_wp(ManifoldPtr M, double r0, double R, double p, double phi_R,
                         const RadialOptions& opt = {});
RadialPotential solve_w1(ManifoldPtr M, double r0, double R, const RadialOptions& opt = {});
RadialPotential solve_wp_eps(ManifoldPtr M, double r0, double R, double p, double phi_R,
                             double eps, const RadialOptions& opt = {});

/// psi^{-1}: the s > 0 with s (s^2 + eps^2)^{(p-2)/2} = y.
double regularized_slope(double y, double p, double eps, const Tolerance& tol = {1e-15, 4e-16, 400});

/// e^{-tau}/|S^{n-1}| * |S_tau| * (|grad w|/(n-p))^{p-1} on the level {w = tau}.
double capacity_level_integral(const RadialPotential& pot, double tau);

/// Relative p-capacity of (Omega_t, U_T) from the level-set identity,
/// evaluated at each tau and checked for tau-independence (rel 1e-8).
double capacity(const RadialPotential& pot, double t, double T,
                std::span<const double> taus);
double capacity(const RadialPotential& pot, double t, double T);

}  // namespace pcap
