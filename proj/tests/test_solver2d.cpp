#include "pcap/solver2d.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace pcap;
using std::numbers::pi;

namespace {

SolverOptions grid(int ns, int nt) {
  SolverOptions o;
  o.n_sigma = ns;
  o.n_theta = nt;
  return o;
}

std::shared_ptr<const FieldGeometry> geometry(Field2D f) {
  return std::make_shared<const FieldGeometry>(std::make_shared<const Field2D>(std::move(f)));
}

}  // namespace

TEST_CASE("domains: spheroid boundary and validation") {
  auto d = make_spheroid_domain(1.3, 1.0, 8.0);
  CHECK(d.rho(0.0) == doctest::Approx(1.3));
  CHECK(d.rho(pi / 2) == doctest::Approx(1.0));
  CHECK(d.rho(pi) == doctest::Approx(1.3));
  // derivative evaluators against finite differences
  for (double th : {0.3, 1.0, 2.2}) {
    const double h = 1e-5;
    CHECK(d.drho(th) == doctest::Approx((d.rho(th + h) - d.rho(th - h)) / (2 * h)).epsilon(1e-8));
    CHECK(d.d2rho(th) ==
          doctest::Approx((d.rho(th + h) - 2 * d.rho(th) + d.rho(th - h)) / (h * h)).epsilon(1e-4));
  }
  CHECK_THROWS_AS(make_sphere_domain(2.0, 1.5), ParameterError);
  CHECK_THROWS_AS(make_spheroid_domain(-1.0, 1.0, 8.0), ParameterError);
  AxisymmetricDomain bad = make_sphere_domain(1.0, 4.0);
  bad.drho = [](double) { return 0.1; };
  CHECK_THROWS_AS(bad.validate(), ParameterError);
}

TEST_CASE("solve_2d: parameter validation and the trivial datum") {
  auto d = make_sphere_domain(1.0, 4.0);
  CHECK_THROWS_AS(solve_2d(d, 1.5, 1e-9, 0.5, grid(32, 16)), ParameterError);
  CHECK_THROWS_AS(solve_2d(d, 1.5, 1e-3, 0.5, grid(8, 16)), ParameterError);
  CHECK_THROWS_AS(solve_2d(d, 1.5, 1e-3, 0.5, grid(32, 17)), ParameterError);
  CHECK_THROWS_AS(solve_2d(d, 2.5, 1e-3, 0.5, grid(32, 16)), ParameterError);
  CHECK_THROWS_AS(solve_2d(d, 1.5, 1e-3, 0.0, grid(32, 16)), ParameterError);
  auto f = solve_2d(d, 1.5, 1e-3, 1.0, grid(32, 16));
  CHECK(f.converged);
  CHECK((f.u == 1.0).all());
  CHECK((f.w() == 0.0).all());
  auto g = solve_2d(d, 1.5, 0.5, grid(32, 16));
  CHECK(g.eps == doctest::Approx(1e-3));
}

TEST_CASE("solve_2d: harmonic case on a sphere matches the closed form") {
  const double R = 8.0, uR = 0.2;
  auto f = solve_2d(make_sphere_domain(1.0, R), 2.0, 1e-3, uR, grid(64, 32));
  REQUIRE(f.converged);
  double err = 0.0;
  for (int i = 0; i <= f.n_sigma; ++i)
    for (int j = 0; j <= f.n_theta; ++j) {
      const double r = f.radius(f.xi(i), f.theta(j));
      const double exact = uR + (1 - uR) * (1 / r - 1 / R) / (1 - 1 / R);
      err = std::max(err, std::abs(f.u(i, j) - exact));
    }
  CHECK(err < 1e-5);
  CHECK(f.flux_spread() < 1e-6);
  // ring flux approximates 4 pi r^2 |u'| = 4 pi (1 - u_R)/(1 - 1/R)
  CHECK(f.ring_flux.mean() == doctest::Approx(4 * pi * (1 - uR) / (1 - 1 / R)).epsilon(1e-3));
}

TEST_CASE("solve_2d: sphere domain matches the radial regularized solution") {
  const double R = 8.0, p = 1.5, eps = 1e-4, uR = 0.125;
  auto f = solve_2d(make_sphere_domain(1.0, R), p, eps, uR, grid(128, 64));
  REQUIRE(f.converged);
  auto rad = solve_wp_eps(make_euclidean(3), 1.0, R, p, -(p - 1) * std::log(uR), eps);
  double err = 0.0;
  for (int i = 0; i <= f.n_sigma; ++i)
    for (int j = 0; j <= f.n_theta; j += 4)
      err = std::max(err, std::abs(f.u(i, j) - rad.u(f.radius(f.xi(i), f.theta(j)))));
  CHECK(err < 5e-4);
  CHECK(f.flux_spread() < 1e-6);
  CHECK(f.residual < 1e-10);

  auto geo = geometry(f);
  for (double t : {0.2, 0.5, 0.9}) {
    auto L = extract_level(*geo, t);
    CHECK((L.r - L.r(0)).abs().maxCoeff() < 1e-9);
    CHECK(L.traceless2.maxCoeff() < 1e-6);
    CHECK((L.kappa_meridian - L.kappa_parallel).abs().maxCoeff() < 1e-3);
    CHECK(L.area() == doctest::Approx(4 * pi * std::pow(rad.level_radius(t), 2)).epsilon(1e-3));
    CHECK(gauss_bonnet_number(L.to_level_data()) == doctest::Approx(1.0).epsilon(1e-2));
  }
}

TEST_CASE("extract_level: spheroid geometry") {
  auto f = solve_2d(make_spheroid_domain(1.3, 1.0, 8.0), 1.5, 0.05, grid(128, 64));
  REQUIRE(f.converged);
  auto geo = geometry(f);
  auto L0 = extract_level(*geo, 0.0);
  CHECK(L0.r(0) == doctest::Approx(1.3));
  // both principal curvatures at the pole equal a/b^2
  CHECK(L0.kappa_parallel(0) == doctest::Approx(1.3).epsilon(1e-3));
  CHECK(L0.kappa_meridian(0) == doctest::Approx(1.3).epsilon(1e-3));
  // at the equator: meridian b/a^2, parallel 1/b
  CHECK(L0.kappa_meridian(32) == doctest::Approx(1.0 / (1.3 * 1.3)).epsilon(1e-6));
  CHECK(L0.kappa_parallel(32) == doctest::Approx(1.0).epsilon(1e-6));

  auto small = extract_level(*geo, 0.1);
  CHECK(std::abs(small.kappa_meridian(32) - small.kappa_parallel(32)) > 0.05);
  CHECK(std::abs(small.kappa_meridian(0) - small.kappa_parallel(0)) < 5e-3);
  CHECK(small.curvature_mismatch() < 5e-3);
  double prev = small.traceless2.maxCoeff();
  for (double t : {0.2, 0.4, 0.8}) {
    auto L = extract_level(*geo, t);
    CHECK(L.traceless2.maxCoeff() < prev);
    prev = L.traceless2.maxCoeff();
    CHECK(gauss_bonnet_number(L.to_level_data()) == doctest::Approx(1.0).epsilon(1e-2));
    CHECK(Q_p_integral(L.to_level_data(), 3, 1.5, 2.0) > 0.0);
    CHECK(geroch_rhs(L.to_level_data()) > 0.0);
  }
  CHECK_THROWS_AS(extract_level(*geo, -0.1), DomainError);
  CHECK_THROWS_AS(extract_level(*geo, f.t_max()), DomainError);

  auto summary = level_functionals(*geo, {0.0, 0.3, 0.6});
  REQUIRE(summary.size() == 3);
  CHECK(summary[1].area > summary[0].area);
  CHECK(summary[2].traceless < summary[1].traceless);
  for (const auto& s : summary) CHECK(s.gauss_bonnet == doctest::Approx(1.0).epsilon(1e-2));
}

TEST_CASE("extract_level: refusals") {
  auto d = make_sphere_domain(1.0, 4.0);
  // with a huge regularization |grad w| never exceeds 10 eps
  auto f = solve_2d(d, 1.5, 0.5, 0.5, grid(32, 16));
  REQUIRE(f.converged);
  CHECK_THROWS_AS(extract_level(f, 0.1), DomainError);

  Field2D bad = solve_2d(d, 1.5, 1e-3, 0.5, grid(32, 16));
  bad.u(5, 3) = bad.u(4, 3) * 1.01;  // w decreases along ray 3
  try {
    extract_level(bad, 0.2);
    FAIL("expected an error");
  } catch (const ConsistencyError& e) {
    CHECK(std::string(e.what()).find("theta") != std::string::npos);
  }
}

TEST_CASE("F_p on a spheroid: monotone with a small identity residual") {
  auto geo = geometry(solve_2d(make_spheroid_domain(1.3, 1.0, 8.0), 1.5, 0.05, grid(128, 64)));
  FieldLevelSource src(geo);
  std::vector<double> ts;
  for (int k = 0; k < 10; ++k) ts.push_back(0.1 + 0.1 * k);
  auto F = F_p(src, make_params(3, 1.5, 2.0, ts));
  for (std::size_t k = 1; k < F.value.size(); ++k) CHECK(F.value[k] > F.value[k - 1]);
  for (double b : F.bulk) CHECK(b == 0.0);
  CHECK(F.relative_residual() < 0.05);
  CHECK(src.describe().find("spheroid") != std::string::npos);
}

TEST_CASE("divergence identities converge at second order") {
  auto d = make_spheroid_domain(1.3, 1.0, 8.0);
  auto coarse = geometry(solve_2d(d, 1.5, 0.05, grid(64, 32)));
  auto fine = geometry(solve_2d(d, 1.5, 0.05, grid(128, 64)));
  for (double alpha : {1.0, 2.0}) {
    auto a = divergence_residuals(*coarse, alpha, 0.1, 0.5, pi / 4, 3 * pi / 4);
    auto b = divergence_residuals(*fine, alpha, 0.1, 0.5, pi / 4, 3 * pi / 4);
    CHECK(std::log2(a.J / b.J) >= 1.7);
    CHECK(std::log2(a.Y / b.Y) >= 1.7);
    CHECK(b.J < 1e-2 * b.J_scale);
    CHECK(b.Y < 1e-2 * b.Y_scale);
  }
  CHECK_THROWS_AS(divergence_residuals(*coarse, 2.0, 0.9, 0.95, 0.1, 0.11), DomainError);
}

TEST_CASE("property: random spheroids conserve flux and keep Gauss-Bonnet") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const double a = 0.8 + 0.6 * U(rng);
    const double p = 1.3 + 0.7 * U(rng);
    const double uR = 0.05 + 0.3 * U(rng);
    auto f = solve_2d(make_spheroid_domain(a, 1.0, 6.0), p, uR, grid(64, 32));
    REQUIRE(f.converged);
    CHECK(f.flux_spread() < 1e-6);
    CHECK(f.u.maxCoeff() <= 1.0 + 1e-12);
    CHECK(f.u.minCoeff() >= uR - 1e-12);
    auto geo = geometry(f);
    const double t = 0.4 * f.t_max();
    auto L = extract_level(*geo, t);
    CHECK(gauss_bonnet_number(L.to_level_data()) == doctest::Approx(1.0).epsilon(2e-2));
    CHECK(L.area() > 0.0);
  }
}

TEST_CASE("CSV dumps") {
  auto f = solve_2d(make_sphere_domain(1.0, 4.0), 2.0, 1e-3, 0.5, grid(16, 16));
  std::ostringstream a, b;
  write_field_csv(f, a);
  CHECK(a.str().rfind("sigma,theta,r,u\n", 0) == 0);
  std::size_t lines = 0;
  for (char c : a.str()) lines += (c == '\n');
  CHECK(lines == 1 + 17 * 17);
  extract_level(f, 0.3).write_csv(b);
  CHECK(b.str().rfind("theta,r,grad_w,H,kappa_m,kappa_phi\n", 0) == 0);
}
