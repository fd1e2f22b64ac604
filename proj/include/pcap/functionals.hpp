#pragma once

#include "pcap/radial.hpp"

#include <Eigen/Dense>

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace pcap {

/// Samples of one level set {w = t}. Integrals are weighted sums, so a
/// round sphere is a single sample carrying the full area.
struct LevelData {
  double t = 0.0;
  Eigen::ArrayXd weight;          // area element times quadrature weight
  Eigen::ArrayXd G;               // |grad w|
  Eigen::ArrayXd H;               // mean curvature
  Eigen::ArrayXd traceless2;      // |h - H g/(n-1)|^2
  Eigen::ArrayXd tangential_G2;   // |grad^T G|^2 / G^2
  Eigen::ArrayXd tangential_H2;   // |grad^T H|^2
  Eigen::ArrayXd ricci;           // Ric(nu, nu)
  Eigen::ArrayXd scalar;          // ambient scalar curvature
  Eigen::ArrayXd scalar_induced;  // scalar curvature of the level
  Eigen::ArrayXd theta;           // regularization weight, 0 if none

  double area() const { return weight.sum(); }
  double integral(const Eigen::ArrayXd& f) const { return (weight * f).sum(); }
};

/// Anything that can produce level data at arbitrary t in [0, t_max].
class LevelSource {
 public:
  virtual ~LevelSource() = default;
  virtual int n() const = 0;
  /// 1 for the inverse mean curvature flow potential.
  virtual double p() const = 0;
  virtual double t_max() const = 0;
  virtual LevelData level(double t) const = 0;
  /// int_a^b e^{c s} int_{level s} G^beta Ric(nu, nu) ds.
  virtual double ricci_bulk(double a, double b, double c, double beta) const = 0;
  virtual std::string describe() const = 0;
};

class RadialLevelSource final : public LevelSource {
 public:
  explicit RadialLevelSource(RadialPotential pot)
      : pot_(std::move(pot)), cache_(std::make_shared<Cache>()) {}
  int n() const override { return pot_.n(); }
  double p() const override { return pot_.p(); }
  double t_max() const override { return pot_.phi_R(); }
  LevelData level(double t) const override;
  double ricci_bulk(double a, double b, double c, double beta) const override;
  std::string describe() const override;
  const RadialPotential& potential() const { return pot_; }

 private:
  // levels are requested repeatedly by the stencils and by alpha sweeps
  struct Cache {
    std::mutex mutex;
    std::map<double, LevelData> levels;
    std::map<double, double> radii;
  };
  double radius(double t) const;
  RadialPotential pot_;
  std::shared_ptr<Cache> cache_;
};

struct FunctionalParams {
  int n = 3;
  double p = 2.0;
  double alpha = 2.0;
  std::vector<double> t_grid;
  /// step of the five-point derivative stencil used for identity residuals
  double fd_step = 1e-3;

  /// alpha > (n-p)/(n-1): the monotonicity theorem applies.
  bool theorem_range() const;
  /// alpha >= max(2-p, (n-p)/(n-1)): every Q_p term is nonnegative.
  bool termwise_nonnegative() const;
  /// alpha >= (n-1)/(n-p), the threshold quoted in the introduction.
  bool introduction_range() const;
  void validate() const;
};

FunctionalParams make_params(int n, double p, double alpha, std::vector<double> t_grid);

/// Uniform grid of `count` levels on [0, T].
std::vector<double> uniform_levels(double T, int count);

struct MonotoneSeries {
  std::string name;
  std::string source;
  std::vector<double> t;
  std::vector<double> value;
  std::vector<double> bulk;      // accumulated Ricci term, 0 at t = 0
  std::vector<double> rhs_qp;    // e^{ct} int G^{alpha+p-3} Q_p (or the identity's right side)
  std::vector<double> residual;  // |derivative - right side| per level
  std::vector<double> alt_value; // second evaluation route, when one exists
  bool guaranteed = true;        // parameters inside the theorem's range
  /// max residual / max |right side| (floored by 1e-8 max |value|)
  double relative_residual() const;
};

/// First term of F_p at one level, without the Ricci bulk.
double F_p_boundary_term(const LevelData& L, int n, double p, double alpha);
/// int G^{alpha+p-3} Q_p over the level; p = 1 drops the last term.
double Q_p_integral(const LevelData& L, int n, double p, double alpha);
double Q_p_integral(const LevelSource& src, const FunctionalParams& prm, double t);

MonotoneSeries F_p(const LevelSource& src, const FunctionalParams& prm);
/// F_p(0+) - F_p(0) using a level at fd_step.
double F_p_jump(const LevelSource& src, const FunctionalParams& prm);
MonotoneSeries G_p(const LevelSource& src, const FunctionalParams& prm);
/// Inverse mean curvature flow version; requires p() == 1 and alpha >= 1.
MonotoneSeries F_1(const LevelSource& src, const FunctionalParams& prm);

double hawking_mass(double area, double willmore);
double hawking_mass(const LevelData& L);
double minkowski_M(const LevelData& L, double alpha, double area_hull, int n);
/// (1/8 pi) int Sc^T, the Euler characteristic over 2 for surfaces.
double gauss_bonnet_number(const LevelData& L);
double geroch_rhs(const LevelData& L);

/// Five-point derivative at t, one-sided near [lo, hi] ends.
double five_point_derivative(const std::function<double(double)>& fn, double t, double step,
                             double lo, double hi);

}  // namespace pcap
