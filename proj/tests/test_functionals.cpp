#include "pcap/functionals.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace pcap;
using std::numbers::pi;

namespace {

RadialLevelSource euclid_source(double p, double R = 20.0) {
  auto E = make_euclidean(3);
  if (p == 1.0) return RadialLevelSource(solve_w1(E, 1.0, R));
  return RadialLevelSource(solve_wp(E, 1.0, R, p, scale_invariant_outer_datum(*E, 1.0, R, p)));
}

bool non_decreasing(const std::vector<double>& v, double slack) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] < v[i - 1] - slack) return false;
  return true;
}

}  // namespace

TEST_CASE("five_point_derivative: central and one-sided stencils") {
  auto f = [](double x) { return std::exp(x); };
  CHECK(five_point_derivative(f, 0.5, 1e-3, 0.0, 1.0) == doctest::Approx(std::exp(0.5)).epsilon(1e-11));
  CHECK(five_point_derivative(f, 0.0, 1e-3, 0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(five_point_derivative(f, 1.0, 1e-3, 0.0, 1.0) == doctest::Approx(std::exp(1.0)).epsilon(1e-10));
}

TEST_CASE("parameter flags") {
  auto a = make_params(3, 1.5, 0.8, {0.0});
  CHECK(a.theorem_range());
  CHECK(a.termwise_nonnegative());
  CHECK_FALSE(a.introduction_range());
  auto b = make_params(3, 1.5, 0.7, {0.0});
  CHECK_FALSE(b.theorem_range());
  // at the threshold itself only the termwise bound holds
  auto c = make_params(3, 1.2, 0.9, {0.0});
  CHECK_FALSE(c.theorem_range());
  CHECK(c.termwise_nonnegative());
  auto d = make_params(3, 1.5, 4.0, {0.0});
  CHECK(d.introduction_range());
  CHECK_THROWS_AS(make_params(3, 2.5, 1.0, {0.0}), ParameterError);
  CHECK_THROWS_AS(make_params(3, 1.5, 1.0, {0.5, 0.2}), ParameterError);
  CHECK_THROWS_AS(make_params(3, 1.5, -1.0, {0.0}), ParameterError);
}

TEST_CASE("F_p and G_p: Euclidean harmonic case") {
  auto src = euclid_source(2.0);
  auto prm = make_params(3, 2.0, 2.0, uniform_levels(2.0, 9));
  auto F = F_p(src, prm);
  auto G = G_p(src, prm);
  for (std::size_t k = 0; k < F.t.size(); ++k) {
    CHECK(F.value[k] == doctest::Approx(-2 * pi).epsilon(1e-10));
    CHECK(G.value[k] == doctest::Approx(4 * pi).epsilon(1e-10));
    CHECK(F.bulk[k] == 0.0);
    CHECK(std::abs(F.rhs_qp[k]) < 1e-12);
  }
  CHECK(F.residual.size() == F.t.size());
  CHECK(*std::max_element(F.residual.begin(), F.residual.end()) < 1e-7);
  for (double r : G.residual) CHECK(r < 1e-8);
}

TEST_CASE("G_p is constant on scale-invariant Euclidean data") {
  // |grad w| = (n-p)/r, so G_p = (n-p)^{a+p-1} |S| r0^{n-p-a} with r0 = 1
  for (double p : {1.2, 1.5, 1.8}) {
    for (double alpha : {1.0, 2.0, 3.0}) {
      auto src = euclid_source(p);
      auto prm = make_params(3, p, alpha, uniform_levels(1.5, 5));
      auto G = G_p(src, prm);
      const double expect = std::pow(3.0 - p, alpha + p - 1) * 4 * pi;
      for (double v : G.value) CHECK(v == doctest::Approx(expect).epsilon(1e-9));
      // both sides of the identity vanish here, so compare absolutely
      for (double r : G.residual) CHECK(r < 1e-8 * expect);
    }
  }
}

TEST_CASE("F_1: Euclidean spheres give -8 pi and both forms agree") {
  auto src = euclid_source(1.0);
  auto prm = make_params(3, 1.0, 1.0, uniform_levels(3.0, 7));
  auto F = F_1(src, prm);
  for (std::size_t k = 0; k < F.t.size(); ++k) {
    CHECK(F.value[k] == doctest::Approx(-8 * pi).epsilon(1e-10));
    CHECK(F.alt_value[k] == doctest::Approx(-8 * pi).epsilon(1e-10));
  }
  auto p15 = euclid_source(1.5);
  CHECK_THROWS_AS(F_1(p15, make_params(3, 1.5, 1.0, {0.0})), ParameterError);
  CHECK_THROWS_AS(F_p(src, prm), ParameterError);
}

TEST_CASE("monotonicity and identity residuals on Schwarzschild") {
  auto S = make_schwarzschild(1.0);
  const double r0 = 2.2, R = 30.0;
  for (double p : {1.3, 2.0}) {
    auto src = RadialLevelSource(solve_wp(S, r0, R, p, scale_invariant_outer_datum(*S, r0, R, p)));
    auto prm = make_params(3, p, 2.0, uniform_levels(1.5, 7));
    auto F = F_p(src, prm);
    CHECK(F.guaranteed);
    CHECK(non_decreasing(F.value, 1e-10 * std::abs(F.value.front())));
    CHECK(F.bulk.back() < 0.0);  // Ric(nu, nu) = -2m/r^3
    for (double q : F.rhs_qp) CHECK(q >= 0.0);
    CHECK(F.relative_residual() < 1e-4);
    auto G = G_p(src, prm);
    CHECK(G.relative_residual() < 1e-4);
  }
}

TEST_CASE("F_1 on Schwarzschild: constant, with the bulk balancing the boundary term") {
  auto S = make_schwarzschild(1.0);
  auto src = RadialLevelSource(solve_w1(S, 2.2, 1e4));
  for (double alpha : {1.0, 2.0, 3.0}) {
    auto prm = make_params(3, 1.0, alpha, uniform_levels(4.0, 9));
    auto F = F_1(src, prm);
    for (double v : F.value) CHECK(v == doctest::Approx(F.value.front()).epsilon(1e-10));
    for (std::size_t k = 0; k < F.t.size(); ++k) {
      CHECK(F.alt_value[k] == doctest::Approx(F.value[k]).epsilon(1e-10));
      CHECK(F.residual[k] < 1e-8 * std::abs(F.value[k]));
    }
    CHECK(F.bulk.back() < 0.0);
  }
}

TEST_CASE("F_p_jump vanishes for radial data") {
  auto S = make_schwarzschild(1.0);
  auto src = RadialLevelSource(solve_wp(S, 3.0, 20.0, 1.5, scale_invariant_outer_datum(*S, 3.0, 20.0, 1.5)));
  auto prm = make_params(3, 1.5, 2.0, {0.0});
  CHECK(std::abs(F_p_jump(src, prm)) < 1e-2);
}

TEST_CASE("Hawking mass examples") {
  CHECK(hawking_mass(4 * pi, 16 * pi) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(hawking_mass(16 * pi, 0.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(hawking_mass(0.0, 1.0), DomainError);
  auto S = make_schwarzschild(1.0);
  auto src = RadialLevelSource(solve_w1(S, 2.0, 1e3));
  for (double t : {0.0, 0.5, 2.0, 4.0}) CHECK(hawking_mass(src.level(t)) == doctest::Approx(1.0).epsilon(1e-10));
  auto E = euclid_source(1.0);
  CHECK(std::abs(hawking_mass(E.level(1.0))) < 1e-12);
}

TEST_CASE("Minkowski functional, Gauss-Bonnet and Geroch on spheres") {
  auto E = euclid_source(1.0);
  for (double t : {0.0, 1.0}) {
    auto L = E.level(t);
    CHECK(minkowski_M(L, 2.0, L.area(), 3) == doctest::Approx(4 * pi).epsilon(1e-12));
    CHECK(minkowski_M(L, 1.0, L.area(), 3) == doctest::Approx(std::sqrt(4 * pi)).epsilon(1e-12));
    CHECK(gauss_bonnet_number(L) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(geroch_rhs(L)) < 1e-12);
  }
  auto S = make_schwarzschild(1.0);
  auto src = RadialLevelSource(solve_w1(S, 2.5, 100.0));
  auto L = src.level(0.7);
  CHECK(gauss_bonnet_number(L) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(geroch_rhs(L)) < 1e-12);
  LevelData bad = L;
  bad.H(0) = -1.0;
  CHECK_THROWS_AS(geroch_rhs(bad), DomainError);
}

TEST_CASE("property: Q_p is nonnegative for random samples in the termwise range") {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double p = 1.0 + U(rng);
    const double lo = std::max(2.0 - p, (3.0 - p) / 2.0);
    const double alpha = lo + 3.0 * U(rng);
    const int m = 5;
    auto draw = [&](double lo, double hi) {
      Eigen::ArrayXd a(m);
      for (int i = 0; i < m; ++i) a(i) = lo + (hi - lo) * U(rng);
      return a;
    };
    LevelData L;
    L.weight = draw(0.1, 1.1);
    L.G = draw(0.1, 2.1);
    L.H = draw(-3.0, 3.0);
    L.traceless2 = draw(0.0, 1.0);
    L.tangential_G2 = draw(0.0, 1.0);
    CHECK(Q_p_integral(L, 3, p, alpha) >= 0.0);
  }
}
