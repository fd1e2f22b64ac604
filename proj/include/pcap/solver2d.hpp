#pragma once

#include "pcap/functionals.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <ostream>
#include <string>

namespace pcap {

/// Star-shaped axisymmetric domain in flat R^3, boundary r = rho(theta) in
/// spherical coordinates around the symmetry axis theta = 0.
struct AxisymmetricDomain {
  std::function<double(double)> rho;
  std::function<double(double)> drho;
  std::function<double(double)> d2rho;
  double R = 8.0;
  std::string label;
  // for convex shapes the boundary is its own outward minimizing hull
  bool convex = false;

  void validate() const;
};

AxisymmetricDomain make_sphere_domain(double r0, double R);
/// Spheroid with semi-axis a_ax along the axis and b_eq in the equatorial plane.
AxisymmetricDomain make_spheroid_domain(double a_ax, double b_eq, double R);

struct SolverOptions {
  int n_sigma = 128;
  int n_theta = 64;
  /// 0 picks min(1e-3, 1/n_sigma)
  double eps = 0.0;
  double tol = 1e-10;
  int max_outer = 400;
  double damping = 0.7;
  int max_inner = 20000;
};

/// Nodal solution on the mapped grid. Rows index xi (i = 0 at the boundary of
/// the domain), columns index theta (j = 0 on the upper axis).
///
/// r(xi, theta) = rho(theta) + sigma(xi) (R - rho(theta)), with
/// sigma(xi) = (e^{beta xi} - 1)/(e^beta - 1) clustering nodes near the boundary.
struct Field2D {
  AxisymmetricDomain domain;
  int n_sigma = 0;
  int n_theta = 0;
  double p = 2.0;
  double eps = 0.0;
  double u_R = 0.5;
  double beta = 0.0;
  Eigen::ArrayXXd u;  // (n_sigma + 1) x (n_theta + 1)

  double residual = 0.0;      // relative discrete L2 residual at exit
  int iterations = 0;         // outer iterations
  long inner_iterations = 0;  // total conjugate gradient iterations
  bool converged = false;
  /// Discrete flux through each cell ring, i = 0 .. n_sigma - 1.
  Eigen::ArrayXd ring_flux;

  double xi(int i) const { return static_cast<double>(i) / n_sigma; }
  double theta(int j) const;
  double sigma(double xi) const;
  double dsigma(double xi) const;
  double radius(double xi, double theta) const;
  /// w = -(p-1) log u
  Eigen::ArrayXXd w() const;
  /// Largest level contained in the grid: min over theta of w at the outer boundary.
  double t_max() const;
  /// max relative deviation of ring fluxes from their mean
  double flux_spread() const;
};

Field2D solve_2d(const AxisymmetricDomain& domain, double p, double eps, double u_R,
                 const SolverOptions& opt = {});
Field2D solve_2d(const AxisymmetricDomain& domain, double p, double u_R,
                 const SolverOptions& opt = {});

/// Derivative fields at the nodes and per-ray splines, shared by all level
/// extractions from one field.
class FieldGeometry {
 public:
  explicit FieldGeometry(std::shared_ptr<const Field2D> field);

  const Field2D& field() const { return *field_; }
  const std::shared_ptr<const Field2D>& field_ptr() const { return field_; }

  // nodal arrays, (n_sigma + 1) x (n_theta + 1)
  const Eigen::ArrayXXd& w() const { return w_; }
  const Eigen::ArrayXXd& G() const { return G_; }
  /// <grad G, nu>
  const Eigen::ArrayXXd& G_normal() const { return Gn_; }
  /// component of grad G tangent to the level, signed along the meridian
  const Eigen::ArrayXXd& G_tangent() const { return Gt_; }
  const Eigen::ArrayXXd& nu_r() const { return nu_r_; }
  const Eigen::ArrayXXd& nu_t() const { return nu_t_; }
  const Eigen::ArrayXXd& theta_eps() const { return theta_eps_; }
  /// mean curvature of the level through the node, from the equation
  const Eigen::ArrayXXd& H() const { return H_; }
  /// curvature of the parallel circle through the node
  const Eigen::ArrayXXd& kappa_parallel() const { return kphi_; }

  /// Centered derivatives on the mapped grid with even/odd reflection at the axis.
  Eigen::ArrayXXd d_xi(const Eigen::ArrayXXd& f) const;
  Eigen::ArrayXXd d_theta(const Eigen::ArrayXXd& f, int parity) const;
  /// Physical derivatives along e_r and e_theta.
  Eigen::ArrayXXd d_r(const Eigen::ArrayXXd& f) const;
  Eigen::ArrayXXd d_t(const Eigen::ArrayXXd& f, int parity) const;
  /// Flat divergence of V = V_r e_r + V_t e_theta (V_t odd at the axis).
  Eigen::ArrayXXd divergence(const Eigen::ArrayXXd& Vr, const Eigen::ArrayXXd& Vt) const;

  /// Values along ray j at parameter xi from the natural spline of `f`.
  double ray_value(const std::vector<CubicSpline>& splines, int j, double xi) const;
  const std::vector<CubicSpline>& w_rays() const { return w_rays_; }
  const std::vector<CubicSpline>& G_rays() const { return G_rays_; }
  const std::vector<CubicSpline>& Gn_rays() const { return Gn_rays_; }
  const std::vector<CubicSpline>& theta_rays() const { return th_rays_; }

  // geometric factors at the nodes
  const Eigen::ArrayXXd& r() const { return r_; }
  const Eigen::ArrayXXd& r_xi() const { return r_xi_; }
  const Eigen::ArrayXXd& r_theta() const { return r_th_; }

 private:
  std::shared_ptr<const Field2D> field_;
  Eigen::ArrayXXd r_, r_xi_, r_th_;
  Eigen::ArrayXXd w_, G_, Gn_, Gt_, nu_r_, nu_t_, theta_eps_, H_, kphi_;
  std::vector<CubicSpline> w_rays_, G_rays_, Gn_rays_, th_rays_;
};

/// One extracted level {w = t}, sampled on the grid rays theta_j.
struct LevelCurve {
  double t = 0.0;
  double p = 2.0;
  Eigen::ArrayXd theta;
  Eigen::ArrayXd r;
  Eigen::ArrayXd dr;   // dr/dtheta
  Eigen::ArrayXd d2r;
  Eigen::ArrayXd G;
  Eigen::ArrayXd H;            // from the equation
  Eigen::ArrayXd H_geometric;  // kappa_meridian_geometric + kappa_parallel
  Eigen::ArrayXd kappa_meridian;  // H - kappa_parallel
  Eigen::ArrayXd kappa_meridian_geometric;
  Eigen::ArrayXd kappa_parallel;
  Eigen::ArrayXd traceless2;
  Eigen::ArrayXd grad_tangential_G;  // |grad^T G|
  Eigen::ArrayXd grad_tangential_H;  // |grad^T H|
  Eigen::ArrayXd theta_eps;
  Eigen::ArrayXd area_weight;  // Simpson weight times 2 pi r sin(theta) |dX/dtheta|

  double area() const { return area_weight.sum(); }
  /// max |H - H_geometric| over rays away from the axis
  double curvature_mismatch() const;
  LevelData to_level_data() const;
  void write_csv(std::ostream& out) const;
};

/// Extracts {w = t}. t = 0 returns the domain boundary with its own curvature.
LevelCurve extract_level(const FieldGeometry& geo, double t);
LevelCurve extract_level(const Field2D& field, double t);

struct LevelSummary {
  double t = 0.0;
  double area = 0.0;
  double G_power = 0.0;      // int G^beta
  double willmore = 0.0;     // int H^2
  double traceless = 0.0;    // int |h0|^2
  double tangential = 0.0;   // int |grad^T G|^2 / G^2
  double gauss_bonnet = 0.0; // (1/8 pi) int Sc^T
  double curvature_mismatch = 0.0;
};

std::vector<LevelSummary> level_functionals(const FieldGeometry& geo,
                                            const std::vector<double>& t_samples,
                                            double beta = 2.0);

/// Level source backed by a 2-D field; flat ambient, so the Ricci bulk vanishes.
class FieldLevelSource final : public LevelSource {
 public:
  explicit FieldLevelSource(std::shared_ptr<const FieldGeometry> geo) : geo_(std::move(geo)) {}
  int n() const override { return 3; }
  double p() const override { return geo_->field().p; }
  double t_max() const override { return geo_->field().t_max(); }
  LevelData level(double t) const override { return extract_level(*geo_, t).to_level_data(); }
  double ricci_bulk(double, double, double, double) const override { return 0.0; }
  std::string describe() const override;

 private:
  std::shared_ptr<const FieldGeometry> geo_;
};

/// Pointwise residuals of the divergence identities for J = G^{a+p-2} grad w
/// and Y = G^{a+p-3}(grad G + (p-2)(1-theta) grad^perp G).
struct DivergenceResiduals {
  double J = 0.0;  // max |div_h J - rhs| over the window
  double Y = 0.0;
  double J_scale = 0.0;  // max |rhs|
  double Y_scale = 0.0;
  int samples = 0;
};

DivergenceResiduals divergence_residuals(const FieldGeometry& geo, double alpha,
                                         double sigma_lo, double sigma_hi,
                                         double theta_lo, double theta_hi);

/// (sigma, theta, r, u) table
void write_field_csv(const Field2D& field, std::ostream& out);

}  // namespace pcap
