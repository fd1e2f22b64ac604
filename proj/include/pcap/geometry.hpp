#pragma once

#include "pcap/numerics.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace pcap {

/// Volume of the unit round sphere S^{k}, embedded in R^{k+1}.
double unit_sphere_area(int k);

enum class ModelKind { euclidean, cone, schwarzschild, tabulated };

std::string to_string(ModelKind kind);

/// Warped product g = f(r)^2 dr^2 + h(r)^2 g_{S^{n-1}}.
///
/// The lapse enters only through its inverse g_inv = 1/f and the product
/// g_inv * g_inv', which stay finite at a Schwarzschild horizon.
///
/// Sign conventions: the normal of the coordinate spheres points towards
/// increasing r, and H is the trace of the second fundamental form with
/// respect to it, so round spheres in Euclidean space have H = (n-1)/r > 0.
struct RadialManifold {
  int n = 3;
  std::function<double(double)> f;      // lapse
  std::function<double(double)> df;     // f'
  std::function<double(double)> g_inv;  // 1/f
  std::function<double(double)> g_dg;  // (1/f) * (1/f)'
  std::function<double(double)> h;
  std::function<double(double)> dh;
  std::function<double(double)> d2h;
  // x -> 2x f(r_min + x^2), set when f blows up at r_min
  std::function<double(double)> horizon_weight;
  double r_min = 0.0;
  double r_max = std::numeric_limits<double>::infinity();
  std::string label;
  std::optional<double> avr_hint;
  ModelKind kind = ModelKind::euclidean;
  double parameter = 0.0;  // aperture for cones, mass for Schwarzschild
  bool nonneg_ricci = false;

  void check_radius(double r) const;
};

using ManifoldPtr = std::shared_ptr<const RadialManifold>;

ManifoldPtr make_euclidean(int n);
ManifoldPtr make_cone(int n, double aperture);
ManifoldPtr make_schwarzschild(double mass);

struct TabulatedSample {
  double r;
  double f;
  double h;
};

/// Spline-interpolated model; nonneg_ricci requests the validation gate.
ManifoldPtr make_tabulated(int n, const std::vector<TabulatedSample>& samples,
                           bool nonneg_ricci = false,
                           std::string label = "tabulated");

/// Reads a JSON array of {r, f, h} objects.
ManifoldPtr load_tabulated(int n, const std::string& path, bool nonneg_ricci = false);

double mean_curvature_sphere(const RadialManifold& M, double r);
double ricci_radial(const RadialManifold& M, double r);
/// Ric(e, e) for a unit vector e tangent to the coordinate sphere.
double ricci_tangential(const RadialManifold& M, double r);
double scalar_curvature(const RadialManifold& M, double r);

struct CrossSection {
  double area;
  double induced_scalar;
};

CrossSection cross_section(const RadialManifold& M, double r);

/// Asymptotic volume ratio lim (h/r)^{n-1}.
double avr(const RadialManifold& M);

/// Radial proper distance int_a^b f(s) ds; a may be a point where f blows up
/// with an integrable singularity, handled by the substitution s = a + x^2.
double proper_distance(const RadialManifold& M, double a, double b,
                       const Tolerance& tol = {});

}  // namespace pcap
