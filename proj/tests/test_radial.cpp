#include "pcap/radial.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace pcap;
using std::numbers::pi;

namespace {

double fd1(const std::function<double(double)>& fn, double r, double h) {
  return (fn(r - 2 * h) - 8 * fn(r - h) + 8 * fn(r + h) - fn(r + 2 * h)) / (12 * h);
}

// Energy of the capacitary minimizer (u - u_T)/(1 - u_T) between r0 and r_T,
// normalized so that the unit ball in R^n has capacity 1.
double capacity_by_energy(const RadialPotential& pot, double T) {
  const auto& M = pot.manifold();
  const int n = M.n;
  const double p = pot.p();
  const double rT = pot.level_radius(T);
  const double uT = std::exp(-T / (p - 1));
  auto integrand = [&](double r) {
    const double grad = pot.slope(r) / (1.0 - uT);
    return std::pow(grad, p) * std::pow(M.h(r), n - 1) * M.f(r);
  };
  const double energy = integrate(integrand, pot.r0(), rT, {1e-300, 1e-13, 60});
  return std::pow((p - 1) / (n - p), p - 1) * energy;
}

}  // namespace

TEST_CASE("solve_wp: scale-invariant Euclidean potentials") {
  auto E = make_euclidean(3);
  auto pot = solve_wp(E, 1.0, 10.0, 1.5, scale_invariant_outer_datum(*E, 1.0, 10.0, 1.5));
  CHECK(std::exp(-pot.phi_R() / 0.5) == doctest::Approx(1e-3).epsilon(1e-14));
  CHECK(pot.w(2.0) == doctest::Approx(1.5 * std::log(2.0)).epsilon(1e-12));
  CHECK(pot.w(2.0) == doctest::Approx(1.039720).epsilon(1e-6));
  for (double r = 1.0; r <= 10.0; r += 0.37) {
    CHECK(pot.w(r) == doctest::Approx(1.5 * std::log(r)).epsilon(1e-12));
    CHECK(pot.grad_norm(r) == doctest::Approx(1.5 / r).epsilon(1e-12));
  }
  auto harm = solve_wp(E, 1.0, 10.0, 2.0, std::log(10.0));
  CHECK(harm.w(3.0) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(harm.grad_norm(1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(harm.u(4.0) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("solve_wp: vanishing outer datum gives w close to 0") {
  auto S = make_schwarzschild(1.0);
  auto pot = solve_wp(S, 3.0, 10.0, 1.3, 1e-9);
  for (double r = 3.0; r <= 10.0; r += 0.5) CHECK(std::abs(pot.w(r)) <= 1e-9 * (1 + 1e-12));
  CHECK_THROWS_AS(solve_wp(S, 3.0, 10.0, 1.3, 0.0), ParameterError);
  CHECK_THROWS_AS(solve_wp(S, 3.0, 10.0, 2.3, 1.0), ParameterError);
  CHECK_THROWS_AS(solve_wp(S, 2.0, 10.0, 1.5, 1.0), DomainError);
  CHECK_THROWS_AS(solve_wp(S, 1.0, 10.0, 1.5, 1.0), DomainError);
}

TEST_CASE("solve_wp: flux conservation and monotonicity at sample radii") {
  std::vector<ManifoldPtr> models = {make_euclidean(3), make_cone(3, 0.5), make_schwarzschild(1.0),
                                     make_euclidean(4)};
  for (const auto& M : models) {
    const double r0 = M->kind == ModelKind::schwarzschild ? 2.5 : 1.0;
    const double R = 12.0;
    for (double p : {1.1, 1.5, 2.0}) {
      auto pot = solve_wp(M, r0, R, p, imcf_outer_datum(*M, r0, R));
      CHECK(pot.w(r0) == 0.0);
      double prev = -1.0;
      for (int i = 0; i <= 30; ++i) {
        const double r = r0 + (R - r0) * i / 30.0;
        const double w = pot.w(r);
        CHECK(w > prev);
        prev = w;
        if (i == 0 || i == 30) continue;
        const double step = 1e-3 * std::min(r - r0, R - r) ;
        const double du = fd1([&](double x) { return pot.u(x); }, r, step);
        const double flux = std::pow(M->h(r), M->n - 1) * std::pow(-du / M->f(r), p - 1);
        CHECK(flux == doctest::Approx(pot.flux()).epsilon(1e-8));
      }
      CHECK(pot.w(R) == doctest::Approx(pot.phi_R()).epsilon(1e-13));
    }
  }
}

TEST_CASE("solve_w1: closed forms") {
  auto E = make_euclidean(3);
  auto w1 = solve_w1(E, 1.0, 10.0);
  CHECK(w1.w(std::exp(1.0)) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(w1.level_radius(0.0) == 1.0);
  auto S = make_schwarzschild(1.0);
  auto ws = solve_w1(S, 2.0, 40.0);
  for (double t : {0.5, 1.0, 2.0, 4.0}) {
    CHECK(ws.w(3.3) == doctest::Approx(2 * std::log(3.3 / 2)).epsilon(1e-14));
    CHECK(ws.level_radius(t) == doctest::Approx(2 * std::exp(t / 2)).epsilon(1e-14));
  }
  for (double r = 2.0; r < 40.0; r += 1.9) CHECK(ws.grad_norm(r) == mean_curvature_sphere(*S, r));
  auto shrinking = std::make_shared<RadialManifold>(*E);
  shrinking->dh = [](double r) { return r < 3 ? 1.0 : 0.0; };
  CHECK_THROWS_AS(solve_w1(shrinking, 1.0, 5.0), DomainError);
}

TEST_CASE("solve_w1: area of level t is e^t times the initial area") {
  for (const auto& M : {make_euclidean(3), make_cone(4, 0.6), make_schwarzschild(1.0)}) {
    const double r0 = M->kind == ModelKind::schwarzschild ? 2.0 : 1.0;
    auto w1 = solve_w1(M, r0, 200.0);
    const double A0 = cross_section(*M, r0).area;
    for (int k = 0; k < 40; ++k) {
      const double t = 4.0 * k / 39.0;
      const double A = cross_section(*M, w1.level_radius(t)).area;
      CHECK(A / A0 == doctest::Approx(std::exp(t)).epsilon(1e-12));
    }
  }
}

TEST_CASE("regularized_slope inverts s (s^2+eps^2)^{(p-2)/2}") {
  for (double p : {1.01, 1.3, 1.5, 1.9, 2.0}) {
    for (double eps : {1e-8, 1e-4, 1e-1}) {
      for (double s : {1e-9, 1e-5, 1e-2, 1.0, 30.0}) {
        const double y = s * std::pow(s * s + eps * eps, 0.5 * (p - 2));
        CHECK(regularized_slope(y, p, eps) == doctest::Approx(s).epsilon(1e-12));
      }
      // at s = eps, theta = 1/2
      const double y = eps * std::pow(2 * eps * eps, 0.5 * (p - 2));
      const double s = regularized_slope(y, p, eps);
      CHECK(eps * eps / (s * s + eps * eps) == doctest::Approx(0.5).epsilon(1e-12));
    }
  }
}

TEST_CASE("solve_wp_eps: theta bounds and eps -> 0") {
  auto E = make_euclidean(3);
  const double phi = imcf_outer_datum(*E, 1.0, 2.0);
  auto base = solve_wp(E, 1.0, 2.0, 1.5, phi);
  auto pot = solve_wp_eps(E, 1.0, 2.0, 1.5, phi, 1e-6);
  double sup = 0.0;
  for (int i = 0; i <= 20; ++i) {
    const double r = 1.0 + i / 20.0;
    sup = std::max(sup, std::abs(pot.w(r) - base.w(r)));
    const double th = pot.theta_eps(r);
    CHECK(th >= 0.0);
    CHECK(th <= 1.0);
    CHECK(th < 1e-9);
  }
  CHECK(sup < 1e-4);
  CHECK(pot.w(1.0) == 0.0);
  CHECK(pot.w(2.0) == doctest::Approx(phi).epsilon(1e-13));
  CHECK_THROWS_AS(solve_wp_eps(E, 1.0, 2.0, 1.5, phi, 0.0), ParameterError);
  // large eps: regularization visible, still consistent
  auto big = solve_wp_eps(E, 1.0, 2.0, 1.5, phi, 0.5);
  for (double r = 1.0; r <= 2.0; r += 0.1) {
    CHECK(big.theta_eps(r) > 0.01);
    CHECK(big.theta_eps(r) < 1.0);
  }
}

TEST_CASE("mean-curvature identities at 50 random radii") {
  std::mt19937_64 rng(99);
  struct Case {
    ManifoldPtr M;
    double r0, R, p, eps;
  };
  std::vector<Case> cases = {{make_euclidean(3), 1.0, 10.0, 1.5, 0.0},
                             {make_cone(3, 0.5), 1.0, 10.0, 1.2, 0.0},
                             {make_schwarzschild(1.0), 2.2, 12.0, 1.1, 0.0},
                             {make_schwarzschild(1.0), 2.2, 12.0, 1.5, 0.05},
                             {make_euclidean(3), 1.0, 4.0, 1.3, 0.2}};
  for (const auto& c : cases) {
    const double phi = imcf_outer_datum(*c.M, c.r0, c.R);
    auto pot = c.eps > 0 ? solve_wp_eps(c.M, c.r0, c.R, c.p, phi, c.eps) : solve_wp(c.M, c.r0, c.R, c.p, phi);
    std::uniform_real_distribution<double> U(c.r0 + 0.01, c.R - 0.01);
    for (int i = 0; i < 50; ++i) {
      const double r = U(rng);
      const double H = mean_curvature_sphere(*c.M, r);
      CHECK(pot.mean_curvature_from_potential(r) == doctest::Approx(H).epsilon(1e-6));
      // the same identity with the radial derivative taken by finite differences
      const double step = 1e-3 * std::min({r - c.r0, c.R - r, 1.0});
      const double Gr = c.M->g_inv(r) * fd1([&](double x) { return pot.grad_norm(x); }, r, step);
      const double G = pot.grad_norm(r);
      const double th = pot.theta_eps(r);
      const double Hfd = (G - (c.p - 1) * Gr / G) * (1 + (2 - c.p) * th / (c.p - 1));
      CHECK(Hfd == doctest::Approx(H).epsilon(1e-5));
    }
  }
}

TEST_CASE("capacity examples") {
  auto E = make_euclidean(3);
  auto pot = solve_wp(E, 1.0, 2.0, 2.0, std::log(2.0));
  CHECK(capacity(pot, 0.0, pot.phi_R()) == doctest::Approx(2.0).epsilon(1e-10));
  auto pot2 = solve_wp(E, 1.0, 2.0, 2.0, imcf_outer_datum(*E, 1.0, 2.0));
  CHECK(capacity(pot2, 0.0, pot2.phi_R()) == doctest::Approx(2.0).epsilon(1e-10));

  for (int n : {3, 4}) {
    auto En = make_euclidean(n);
    for (double p : {1.3, 1.7, 2.0}) {
      auto big = solve_wp(En, 1.0, 1e3, p, scale_invariant_outer_datum(*En, 1.0, 1e3, p));
      const double cap = capacity(big, 0.0, big.phi_R());
      CHECK(cap == doctest::Approx(capacity_by_energy(big, big.phi_R())).epsilon(1e-8));
      const double closed = std::pow(1.0 - std::pow(1e3, -(n - p) / (p - 1)), -(p - 1));
      CHECK(cap == doctest::Approx(closed).epsilon(1e-10));
      CHECK(cap == doctest::Approx(1.0).epsilon(2e-3));
    }
  }
}

TEST_CASE("capacity: level integral independent of tau, energy oracle on curved models") {
  for (const auto& M : {make_schwarzschild(1.0), make_cone(3, 0.5)}) {
    const double r0 = 3.0, R = 9.0;
    auto pot = solve_wp(M, r0, R, 1.4, imcf_outer_datum(*M, r0, R));
    const double T = pot.phi_R();
    const double taus[] = {0.0, 0.1 * T, 0.5 * T, 0.75 * T, T};
    const double cap = capacity(pot, 0.0, T, taus);
    CHECK(cap == doctest::Approx(capacity_by_energy(pot, T)).epsilon(1e-8));
    // radially the capacity is ((p-1)/(n-p))^{p-1} times the flux constant
    CHECK(cap == doctest::Approx(std::pow(0.4 / 1.6, 0.4) * pot.flux() /
                                 std::pow(1 - std::exp(-T / 0.4), 0.4)).epsilon(1e-10));
  }
  auto E = make_euclidean(3);
  auto pot = solve_wp(E, 1.0, 2.0, 2.0, std::log(2.0));
  CHECK_THROWS_AS(capacity(pot, 0.5, 0.2), DomainError);
  CHECK_THROWS_AS(capacity(solve_w1(E, 1.0, 2.0), 0.0, 0.1), ParameterError);
}

TEST_CASE("capacity tends to h(r0)^{n-1} as p -> 1") {
  auto E = make_euclidean(3);
  const double r0 = 1.5, R = 3.0;
  double prev = 1e300;
  for (double p : {1.2, 1.1, 1.05, 1.01}) {
    auto pot = solve_wp(E, r0, R, p, imcf_outer_datum(*E, r0, R));
    const double gap = std::abs(capacity(pot, 0.0, pot.phi_R()) - r0 * r0);
    CHECK(gap < prev);
    prev = gap;
  }
  CHECK(prev < 0.01 * r0 * r0);
}

TEST_CASE("gradient and energy bounds are uniform in p") {
  auto S = make_schwarzschild(1.0);
  const double r0 = 2.5, R = 20.0, Rp = 8.0;
  auto w1 = solve_w1(S, r0, R);
  double sup1 = 0.0;
  for (double r = r0; r <= Rp; r += 0.05) sup1 = std::max(sup1, w1.grad_norm(r));
  for (double p : {2.0, 1.5, 1.2, 1.1, 1.05, 1.01}) {
    auto pot = solve_wp(S, r0, R, p, w1.phi_R());
    double sup = 0.0;
    for (double r = r0; r <= Rp; r += 0.05) sup = std::max(sup, pot.grad_norm(r));
    CHECK(sup <= 2.0 * sup1);
    const double T = std::min(2.0, 0.8 * pot.w(0.5 * R));
    for (int k = 0; k <= 10; ++k) {
      const double t = T * k / 10.0;
      const double r = pot.level_radius(t);
      const double e = std::exp(-t) * cross_section(*S, r).area * std::pow(pot.grad_norm(r), p - 1);
      CHECK(e <= 4.0 * cross_section(*S, r0).area * std::max(1.0, sup1));
    }
  }
}
