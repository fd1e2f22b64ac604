#include "pcap/solver2d.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace pcap {

using std::numbers::pi;
using Eigen::ArrayXd;
using Eigen::ArrayXXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------- domains

void AxisymmetricDomain::validate() const {
  if (!rho || !drho || !d2rho) throw ParameterError("domain: boundary functions missing");
  for (int k = 0; k <= 64; ++k) {
    const double th = pi * k / 64;
    const double r = rho(th);
    if (!(r > 0) || !(r < R)) {
      std::ostringstream msg;
      msg << "domain: boundary radius " << r << " at theta = " << th << " not in (0, R)";
      throw ParameterError(msg.str());
    }
  }
  if (std::abs(drho(0.0)) > 1e-12 || std::abs(drho(pi)) > 1e-12)
    throw ParameterError("domain: boundary must be smooth across the axis (rho' = 0 at the poles)");
}

AxisymmetricDomain make_sphere_domain(double r0, double R) {
  AxisymmetricDomain d;
  d.rho = [r0](double) { return r0; };
  d.drho = [](double) { return 0.0; };
  d.d2rho = [](double) { return 0.0; };
  d.R = R;
  d.convex = true;
  std::ostringstream s;
  s << "sphere(" << r0 << ")";
  d.label = s.str();
  d.validate();
  return d;
}

AxisymmetricDomain make_spheroid_domain(double a_ax, double b_eq, double R) {
  if (!(a_ax > 0) || !(b_eq > 0)) throw ParameterError("spheroid: semi-axes must be > 0");
  const double ia = 1.0 / (a_ax * a_ax);
  const double k = 1.0 / (b_eq * b_eq) - ia;
  // rho = q^{-1/2}, q = cos^2/a^2 + sin^2/b^2
  auto q = [=](double th) { return ia + k * std::sin(th) * std::sin(th); };
  auto dq = [=](double th) { return k * std::sin(2 * th); };
  auto d2q = [=](double th) { return 2 * k * std::cos(2 * th); };
  AxisymmetricDomain d;
  d.rho = [=](double th) { return 1.0 / std::sqrt(q(th)); };
  d.drho = [=](double th) { return -0.5 * std::pow(q(th), -1.5) * dq(th); };
  d.d2rho = [=](double th) {
    return 0.75 * std::pow(q(th), -2.5) * dq(th) * dq(th) - 0.5 * std::pow(q(th), -1.5) * d2q(th);
  };
  d.R = R;
  d.convex = true;
  std::ostringstream s;
  s << "spheroid(" << a_ax << ", " << b_eq << ")";
  d.label = s.str();
  d.validate();
  return d;
}

// ---------------------------------------------------------------- field

double Field2D::theta(int j) const { return pi * j / n_theta; }

double Field2D::sigma(double x) const {
  if (beta < 1e-8) return x;
  return std::expm1(beta * x) / std::expm1(beta);
}

double Field2D::dsigma(double x) const {
  if (beta < 1e-8) return 1.0;
  return beta * std::exp(beta * x) / std::expm1(beta);
}

double Field2D::radius(double x, double th) const {
  const double r0 = domain.rho(th);
  return r0 + sigma(x) * (domain.R - r0);
}

ArrayXXd Field2D::w() const { return -(p - 1.0) * u.log(); }

double Field2D::t_max() const { return -(p - 1.0) * std::log(u_R); }

double Field2D::flux_spread() const {
  if (ring_flux.size() == 0) return 0.0;
  const double mean = ring_flux.mean();
  if (mean == 0.0) return 0.0;
  return (ring_flux - mean).abs().maxCoeff() / std::abs(mean);
}

namespace {

// One quadrature point per cell quadrant, nearest to local node `a`.
// The radial terms are lumped in theta and the angular terms in xi onto the
// quadrant of each node, which is the node-centred finite-volume rule. On the
// axis this keeps the node equation consistent; a Galerkin mass in theta
// there leaves an O(1) truncation error and a non-smooth error layer.
struct QuadPoint {
  std::array<double, 16> M;  // metric form, without the coefficient a(|grad u|)
  std::array<double, 4> gr;  // d phi_a / dr
  std::array<double, 4> gt;  // (1/r) d phi_a / dtheta at fixed r
};

// local node a -> (di, dj)
constexpr int kDi[4] = {0, 1, 0, 1};
constexpr int kDj[4] = {0, 0, 1, 1};

class Discretization {
 public:
  Discretization(const Field2D& f) : ns_(f.n_sigma), nt_(f.n_theta) {
    const double hx = 1.0 / ns_, ht = pi / nt_;
    qps_.resize(static_cast<std::size_t>(ns_) * nt_ * 4);
    for (int i = 0; i < ns_; ++i) {
      for (int j = 0; j < nt_; ++j) {
        for (int k = 0; k < 4; ++k) {
          const double s = kDi[k] ? 0.75 : 0.25, q = kDj[k] ? 0.75 : 0.25;
          const double x = (i + s) * hx, th = (j + q) * ht;
          const double sg = f.sigma(x), dsg = f.dsigma(x);
          const double rho = f.domain.rho(th), drho = f.domain.drho(th);
          const double r = rho + sg * (f.domain.R - rho);
          const double r_x = dsg * (f.domain.R - rho);
          const double r_t = drho * (1.0 - sg);
          const double W = 2 * pi * r * r * std::sin(th) * r_x * hx * ht / 4.0;
          const double Axx = W * (1.0 + r_t * r_t / (r * r)) / (r_x * r_x);
          const double Att = W / (r * r);
          // the cross term lives on the theta faces (q = 1/2); near the axis it
          // grows like theta^2, so the face value matters at leading order
          const double thf = (j + 0.5) * ht;
          const double rhof = f.domain.rho(thf);
          const double rf = rhof + sg * (f.domain.R - rhof);
          const double rxf = dsg * (f.domain.R - rhof);
          const double rtf = f.domain.drho(thf) * (1.0 - sg);
          const double Wf = 2 * pi * rf * rf * std::sin(thf) * rxf * hx * ht / 4.0;
          const double Axt = -Wf * rtf / (rf * rf * rxf);
          std::array<double, 4> px, pt, ex, et, cx;
          QuadPoint& qp = qps_[cell(i, j) * 4 + k];
          for (int a = 0; a < 4; ++a) {
            const double Ls = kDi[a] ? s : 1 - s, dLs = kDi[a] ? 1.0 : -1.0;
            const double Lq = kDj[a] ? q : 1 - q, dLq = kDj[a] ? 1.0 : -1.0;
            px[a] = dLs * Lq / hx;
            pt[a] = Ls * dLq / ht;
            ex[a] = (kDj[a] == kDj[k]) ? dLs / hx : 0.0;
            et[a] = (kDi[a] == kDi[k]) ? dLq / ht : 0.0;
            cx[a] = 0.5 * dLs / hx;
            qp.gr[a] = px[a] / r_x;
            qp.gt[a] = (pt[a] - r_t * px[a] / r_x) / r;
          }
          for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
              qp.M[a * 4 + b] = Axx * ex[a] * ex[b] + Att * et[a] * et[b] +
                                Axt * (cx[a] * et[b] + et[a] * cx[b]);
        }
      }
    }
    Kc_.resize(static_cast<std::size_t>(ns_) * nt_);
  }

  std::size_t cell(int i, int j) const { return static_cast<std::size_t>(i) * nt_ + j; }
  Eigen::Index node(int i, int j) const { return static_cast<Eigen::Index>(i) * (nt_ + 1) + j; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(ns_ + 1) * (nt_ + 1); }

  // Rebuilds the cell matrices with coefficient a(|grad u|) frozen at u,
  // or a = 1 when `harmonic`.
  void assemble(const VectorXd& u, double p, double eps, bool harmonic) {
    for (int i = 0; i < ns_; ++i) {
      for (int j = 0; j < nt_; ++j) {
        std::array<double, 4> ul;
        for (int a = 0; a < 4; ++a) ul[a] = u(node(i + kDi[a], j + kDj[a]));
        std::array<double, 16> K{};
        for (int k = 0; k < 4; ++k) {
          const QuadPoint& qp = qps_[cell(i, j) * 4 + k];
          double coef = 1.0;
          if (!harmonic && p != 2.0) {
            double ur = 0, ut = 0;
            for (int a = 0; a < 4; ++a) {
              ur += ul[a] * qp.gr[a];
              ut += ul[a] * qp.gt[a];
            }
            coef = std::pow(ur * ur + ut * ut + eps * eps, 0.5 * (p - 2.0));
          }
          for (int m = 0; m < 16; ++m) K[m] += coef * qp.M[m];
        }
        Kc_[cell(i, j)] = K;
      }
    }
  }

  void apply(const VectorXd& v, VectorXd& out) const {
    out.setZero(size());
    for (int i = 0; i < ns_; ++i) {
      for (int j = 0; j < nt_; ++j) {
        const auto& K = Kc_[cell(i, j)];
        Eigen::Index idx[4];
        double vl[4];
        for (int a = 0; a < 4; ++a) {
          idx[a] = node(i + kDi[a], j + kDj[a]);
          vl[a] = v(idx[a]);
        }
        for (int a = 0; a < 4; ++a) {
          double s = 0;
          for (int b = 0; b < 4; ++b) s += K[a * 4 + b] * vl[b];
          out(idx[a]) += s;
        }
      }
    }
  }

  VectorXd diagonal() const {
    VectorXd d = VectorXd::Zero(size());
    for (int i = 0; i < ns_; ++i)
      for (int j = 0; j < nt_; ++j)
        for (int a = 0; a < 4; ++a)
          d(node(i + kDi[a], j + kDj[a])) += Kc_[cell(i, j)][a * 5];
    return d;
  }

  // Flux through cell ring i: a(u, 1_{rows <= i}) restricted to that ring.
  ArrayXd ring_flux(const VectorXd& u) const {
    ArrayXd F = ArrayXd::Zero(ns_);
    for (int i = 0; i < ns_; ++i) {
      for (int j = 0; j < nt_; ++j) {
        const auto& K = Kc_[cell(i, j)];
        for (int a : {0, 2}) {
          double s = 0;
          for (int b = 0; b < 4; ++b) s += K[a * 4 + b] * u(node(i + kDi[b], j + kDj[b]));
          F(i) += s;
        }
      }
    }
    return F;
  }

 private:
  int ns_, nt_;
  std::vector<QuadPoint> qps_;
  std::vector<std::array<double, 16>> Kc_;
};

}  // namespace

Field2D solve_2d(const AxisymmetricDomain& domain, double p, double eps, double u_R,
                 const SolverOptions& opt) {
  domain.validate();
  if (!(p > 1.0 && p <= 2.0)) throw ParameterError("solve_2d: p must lie in (1, 2]");
  if (!(eps >= 1e-8)) throw ParameterError("solve_2d: eps must be >= 1e-8");
  if (!(u_R > 0.0 && u_R <= 1.0)) throw ParameterError("solve_2d: u_R must lie in (0, 1]");
  if (opt.n_sigma < 16 || opt.n_theta < 16) throw ParameterError("solve_2d: grid must be at least 16 x 16");
  if (opt.n_theta % 2 != 0) throw ParameterError("solve_2d: n_theta must be even");
  if (!(opt.tol > 0) || opt.max_outer < 1) throw ParameterError("solve_2d: bad tolerance");
  if (!(opt.damping > 0 && opt.damping <= 1)) throw ParameterError("solve_2d: damping must lie in (0, 1]");

  Field2D f;
  f.domain = domain;
  f.n_sigma = opt.n_sigma;
  f.n_theta = opt.n_theta;
  f.p = p;
  f.eps = eps;
  f.u_R = u_R;
  // geometric spacing in r for a round boundary at the equatorial radius
  f.beta = std::max(0.0, std::log(domain.R / domain.rho(0.5 * pi)));
  const int ns = f.n_sigma, nt = f.n_theta;
  f.u = ArrayXXd::Ones(ns + 1, nt + 1);
  if (u_R == 1.0) {
    f.converged = true;
    f.ring_flux = ArrayXd::Zero(ns);
    return f;
  }

  Discretization D(f);
  const Eigen::Index N = D.size();
  VectorXd mask = VectorXd::Ones(N), uD = VectorXd::Zero(N);
  for (int j = 0; j <= nt; ++j) {
    mask(D.node(0, j)) = 0;
    mask(D.node(ns, j)) = 0;
    uD(D.node(0, j)) = 1.0;
    uD(D.node(ns, j)) = u_R;
  }

  VectorXd u = uD;
  VectorXd tmp(N);
  auto masked = [&](const VectorXd& v, VectorXd& out) {
    D.apply(mask.cwiseProduct(v), out);
    out = mask.cwiseProduct(out) + (VectorXd::Ones(N) - mask).cwiseProduct(v);
  };

  auto solve_linear = [&](const VectorXd& start, double rel_tol) {
    D.apply(uD, tmp);
    const VectorXd b = -mask.cwiseProduct(tmp);
    VectorXd inv_diag = D.diagonal();
    for (Eigen::Index k = 0; k < N; ++k) inv_diag(k) = mask(k) > 0 ? 1.0 / inv_diag(k) : 1.0;
    const VectorXd x0 = mask.cwiseProduct(start);
    auto res = solve_spd<double>(masked, b, Tolerance{1e-300, rel_tol, opt.max_inner}, &inv_diag, &x0);
    f.inner_iterations += res.iterations;
    return VectorXd(res.x + uD);
  };

  auto nonlinear_residual = [&](const VectorXd& v) {
    D.apply(v, tmp);
    const double num = mask.cwiseProduct(tmp).norm();
    D.apply(uD, tmp);
    const double den = mask.cwiseProduct(tmp).norm();
    return num / den;
  };

  // harmonic start, solved to full accuracy
  D.assemble(u, p, eps, true);
  u = solve_linear(u, 0.1 * opt.tol);
  const double damping = (p == 2.0) ? 1.0 : opt.damping;

  for (int it = 0; it < opt.max_outer; ++it) {
    D.assemble(u, p, eps, false);
    f.residual = nonlinear_residual(u);
    f.iterations = it;
    if (f.residual < opt.tol) {
      f.converged = true;
      break;
    }
    const VectorXd un = solve_linear(u, std::max(0.05 * opt.tol, 1e-2 * f.residual));
    u += damping * (un - u);
    if (u.minCoeff() <= 0.0) throw ConsistencyError("solve_2d: nonpositive iterate");
  }
  if (!f.converged) {
    D.assemble(u, p, eps, false);
    f.residual = nonlinear_residual(u);
    f.iterations = opt.max_outer;
  }
  f.ring_flux = D.ring_flux(u);
  for (int i = 0; i <= ns; ++i)
    for (int j = 0; j <= nt; ++j) f.u(i, j) = u(D.node(i, j));
  return f;
}

Field2D solve_2d(const AxisymmetricDomain& domain, double p, double u_R, const SolverOptions& opt) {
  const double eps = opt.eps > 0 ? opt.eps : std::min(1e-3, 1.0 / opt.n_sigma);
  return solve_2d(domain, p, eps, u_R, opt);
}

// ---------------------------------------------------------------- derived fields

FieldGeometry::FieldGeometry(std::shared_ptr<const Field2D> field) : field_(std::move(field)) {
  const Field2D& f = *field_;
  if (!f.converged) throw ConsistencyError("field geometry: the solve did not converge");
  const int ns = f.n_sigma, nt = f.n_theta;
  r_.resize(ns + 1, nt + 1);
  r_xi_.resize(ns + 1, nt + 1);
  r_th_.resize(ns + 1, nt + 1);
  for (int i = 0; i <= ns; ++i) {
    const double sg = f.sigma(f.xi(i)), dsg = f.dsigma(f.xi(i));
    for (int j = 0; j <= nt; ++j) {
      const double th = f.theta(j);
      const double rho = f.domain.rho(th);
      r_(i, j) = rho + sg * (f.domain.R - rho);
      r_xi_(i, j) = dsg * (f.domain.R - rho);
      r_th_(i, j) = (j == 0 || j == nt) ? 0.0 : f.domain.drho(th) * (1.0 - sg);
    }
  }
  const double p = f.p;
  w_ = f.w();
  const ArrayXXd ur = d_r(f.u);
  const ArrayXXd ut = d_t(f.u, +1);
  const ArrayXXd gu = (ur.square() + ut.square()).sqrt();
  nu_r_ = -ur / gu;
  nu_t_ = -ut / gu;
  G_ = (p - 1.0) * gu / f.u;
  theta_eps_ = f.eps * f.eps / (gu.square() + f.eps * f.eps);
  const ArrayXXd Gr = d_r(G_);
  const ArrayXXd Gtt = d_t(G_, +1);
  Gn_ = Gr * nu_r_ + Gtt * nu_t_;
  Gt_ = -Gr * nu_t_ + Gtt * nu_r_;
  const ArrayXXd lambda = 1.0 + (2.0 - p) / (p - 1.0) * theta_eps_;
  H_ = (G_ - (p - 1.0) * Gn_ / G_) * lambda;
  // parallel curvature nu_x / x, with its limit on the axis
  kphi_.resize(ns + 1, nt + 1);
  const ArrayXXd dnu_t = d_theta(nu_t_, -1);
  for (int i = 0; i <= ns; ++i) {
    for (int j = 0; j <= nt; ++j) {
      const double th = f.theta(j);
      if (j == 0 || j == nt) {
        kphi_(i, j) = (nu_r_(i, j) + dnu_t(i, j)) / r_(i, j);
      } else {
        const double nx = nu_r_(i, j) * std::sin(th) + nu_t_(i, j) * std::cos(th);
        kphi_(i, j) = nx / (r_(i, j) * std::sin(th));
      }
    }
  }
  // per-ray splines in xi
  VectorXd xs(ns + 1);
  for (int i = 0; i <= ns; ++i) xs(i) = f.xi(i);
  auto rays = [&](const ArrayXXd& a) {
    std::vector<CubicSpline> out;
    out.reserve(nt + 1);
    for (int j = 0; j <= nt; ++j) out.emplace_back(xs, VectorXd(a.col(j).matrix()));
    return out;
  };
  w_rays_ = rays(w_);
  G_rays_ = rays(G_);
  Gn_rays_ = rays(Gn_);
  th_rays_ = rays(theta_eps_);
}

ArrayXXd FieldGeometry::d_xi(const ArrayXXd& a) const {
  const int ns = field_->n_sigma;
  const double h = 1.0 / ns;
  ArrayXXd d(a.rows(), a.cols());
  d.row(0) = (-3 * a.row(0) + 4 * a.row(1) - a.row(2)) / (2 * h);
  d.row(ns) = (3 * a.row(ns) - 4 * a.row(ns - 1) + a.row(ns - 2)) / (2 * h);
  for (int i = 1; i < ns; ++i) d.row(i) = (a.row(i + 1) - a.row(i - 1)) / (2 * h);
  return d;
}

ArrayXXd FieldGeometry::d_theta(const ArrayXXd& a, int parity) const {
  const int nt = field_->n_theta;
  const double h = pi / nt;
  ArrayXXd d(a.rows(), a.cols());
  // reflection across the axis: a(-theta) = parity a(theta)
  d.col(0) = (a.col(1) - parity * a.col(1)) / (2 * h);
  d.col(nt) = (parity * a.col(nt - 1) - a.col(nt - 1)) / (2 * h);
  for (int j = 1; j < nt; ++j) d.col(j) = (a.col(j + 1) - a.col(j - 1)) / (2 * h);
  return d;
}

ArrayXXd FieldGeometry::d_r(const ArrayXXd& a) const { return d_xi(a) / r_xi_; }

ArrayXXd FieldGeometry::d_t(const ArrayXXd& a, int parity) const {
  return (d_theta(a, parity) - r_th_ * d_xi(a) / r_xi_) / r_;
}

ArrayXXd FieldGeometry::divergence(const ArrayXXd& Vr, const ArrayXXd& Vt) const {
  const int nt = field_->n_theta;
  ArrayXXd out = d_r(Vr) + 2.0 * Vr / r_;
  const ArrayXXd dVt = d_t(Vt, -1);
  for (int j = 0; j <= nt; ++j) {
    const double th = field_->theta(j);
    if (j == 0 || j == nt)
      out.col(j) += 2.0 * dVt.col(j);
    else
      out.col(j) += dVt.col(j) + std::cos(th) / std::sin(th) * Vt.col(j) / r_.col(j);
  }
  return out;
}

double FieldGeometry::ray_value(const std::vector<CubicSpline>& s, int j, double xi) const {
  return s[static_cast<std::size_t>(j)](xi);
}

// ---------------------------------------------------------------- levels

namespace {

// Fourth-order derivatives in theta of a curve sampled on [0, pi], even
// across both poles.
void curve_derivatives(const ArrayXd& f, double h, int parity, ArrayXd& d1, ArrayXd* d2) {
  const int n = static_cast<int>(f.size()) - 1;
  auto at = [&](int j) {
    if (j < 0) return parity * f(-j);
    if (j > n) return parity * f(2 * n - j);
    return f(j);
  };
  d1.resize(n + 1);
  if (d2) d2->resize(n + 1);
  for (int j = 0; j <= n; ++j) {
    const double m2 = at(j - 2), m1 = at(j - 1), c = at(j), p1 = at(j + 1), p2 = at(j + 2);
    d1(j) = (m2 - 8 * m1 + 8 * p1 - p2) / (12 * h);
    if (d2) (*d2)(j) = (-m2 + 16 * m1 - 30 * c + 16 * p1 - p2) / (12 * h * h);
  }
}

}  // namespace

LevelCurve extract_level(const FieldGeometry& geo, double t) {
  const Field2D& f = geo.field();
  const int ns = f.n_sigma, nt = f.n_theta;
  const double p = f.p;
  const double tmax = f.t_max();
  if (!(t >= 0.0) || !(t < tmax)) {
    std::ostringstream msg;
    msg << "extract_level: t = " << t << " outside [0, " << tmax << ")";
    throw DomainError(msg.str());
  }
  const double ht = pi / nt;
  LevelCurve L;
  L.t = t;
  L.p = p;
  L.theta.resize(nt + 1);
  L.r.resize(nt + 1);
  L.G.resize(nt + 1);
  L.H.resize(nt + 1);
  L.theta_eps.resize(nt + 1);
  ArrayXd Gn(nt + 1);
  for (int j = 0; j <= nt; ++j) {
    const double th = f.theta(j);
    L.theta(j) = th;
    double x = 0.0;
    if (t > 0.0) {
      const auto& W = geo.w();
      int lo = -1;
      for (int i = 0; i < ns; ++i) {
        if (!(W(i + 1, j) > W(i, j))) {
          std::ostringstream msg;
          msg << "extract_level: w not increasing along the ray theta = " << th;
          throw ConsistencyError(msg.str());
        }
        if (lo < 0 && W(i + 1, j) >= t) lo = i;
      }
      const auto& s = geo.w_rays()[static_cast<std::size_t>(j)];
      x = find_root([&](double xx) { return s(xx) - t; }, f.xi(lo), f.xi(lo + 1),
                    Tolerance{1e-15, 1e-15, 200});
    }
    L.r(j) = (t > 0.0) ? f.radius(x, th) : f.domain.rho(th);
    L.G(j) = geo.ray_value(geo.G_rays(), j, x);
    Gn(j) = geo.ray_value(geo.Gn_rays(), j, x);
    L.theta_eps(j) = geo.ray_value(geo.theta_rays(), j, x);
  }
  if (t > 0.0) {
    curve_derivatives(L.r, ht, +1, L.dr, &L.d2r);
  } else {
    L.dr.resize(nt + 1);
    L.d2r.resize(nt + 1);
    for (int j = 0; j <= nt; ++j) {
      L.dr(j) = (j == 0 || j == nt) ? 0.0 : f.domain.drho(L.theta(j));
      L.d2r(j) = f.domain.d2rho(L.theta(j));
    }
  }
  if (t > 0.0 && L.G.minCoeff() < 10 * f.eps) {
    std::ostringstream msg;
    msg << "extract_level: |grad w| = " << L.G.minCoeff() << " below 10 eps on the level t = " << t;
    throw DomainError(msg.str());
  }
  const ArrayXd N = (L.r.square() + L.dr.square()).sqrt();
  L.kappa_parallel.resize(nt + 1);
  for (int j = 0; j <= nt; ++j) {
    const double th = L.theta(j);
    if (j == 0 || j == nt)
      L.kappa_parallel(j) = (1.0 - L.d2r(j) / L.r(j)) / N(j);
    else
      L.kappa_parallel(j) =
          (L.r(j) * std::sin(th) - L.dr(j) * std::cos(th)) / (N(j) * L.r(j) * std::sin(th));
  }
  L.kappa_meridian_geometric =
      (L.r.square() + 2 * L.dr.square() - L.r * L.d2r) / N.cube();
  L.H_geometric = L.kappa_meridian_geometric + L.kappa_parallel;
  if (t > 0.0) {
    const ArrayXd lambda = 1.0 + (2.0 - p) / (p - 1.0) * L.theta_eps;
    L.H = (L.G - (p - 1.0) * Gn / L.G) * lambda;
  } else {
    L.H = L.H_geometric;
  }
  L.kappa_meridian = L.H - L.kappa_parallel;
  L.traceless2 = 0.5 * (L.kappa_meridian - L.kappa_parallel).square();
  ArrayXd dG, dH;
  curve_derivatives(L.G, ht, +1, dG, nullptr);
  curve_derivatives(L.H, ht, +1, dH, nullptr);
  L.grad_tangential_G = dG.abs() / N;
  L.grad_tangential_H = dH.abs() / N;
  const VectorXd sw = simpson_weights(nt, ht);
  L.area_weight.resize(nt + 1);
  for (int j = 0; j <= nt; ++j)
    L.area_weight(j) = sw(j) * 2 * pi * L.r(j) * std::sin(L.theta(j)) * N(j);
  return L;
}

LevelCurve extract_level(const Field2D& field, double t) {
  FieldGeometry geo(std::make_shared<const Field2D>(field));
  return extract_level(geo, t);
}

double LevelCurve::curvature_mismatch() const {
  return (H - H_geometric).abs().maxCoeff();
}

LevelData LevelCurve::to_level_data() const {
  LevelData D;
  D.t = t;
  const Eigen::Index m = r.size();
  D.weight = area_weight;
  D.G = G;
  D.H = H;
  D.traceless2 = traceless2;
  D.tangential_G2 = (grad_tangential_G / G).square();
  D.tangential_H2 = grad_tangential_H.square();
  D.ricci = ArrayXd::Zero(m);
  D.scalar = ArrayXd::Zero(m);
  // Gauss equation in flat space
  D.scalar_induced = 2 * kappa_meridian * kappa_parallel;
  D.theta = theta_eps;
  return D;
}

void LevelCurve::write_csv(std::ostream& out) const {
  out << "theta,r,grad_w,H,kappa_m,kappa_phi\n" << std::setprecision(17);
  for (Eigen::Index j = 0; j < r.size(); ++j)
    out << theta(j) << ',' << r(j) << ',' << G(j) << ',' << H(j) << ',' << kappa_meridian(j)
        << ',' << kappa_parallel(j) << '\n';
}

std::vector<LevelSummary> level_functionals(const FieldGeometry& geo,
                                            const std::vector<double>& t_samples, double beta) {
  std::vector<LevelSummary> out;
  out.reserve(t_samples.size());
  for (double t : t_samples) {
    const LevelCurve C = extract_level(geo, t);
    const LevelData L = C.to_level_data();
    LevelSummary s;
    s.t = t;
    s.area = L.area();
    s.G_power = L.integral(L.G.pow(beta));
    s.willmore = L.integral(L.H.square());
    s.traceless = L.integral(L.traceless2);
    s.tangential = L.integral(L.tangential_G2);
    s.gauss_bonnet = gauss_bonnet_number(L);
    s.curvature_mismatch = C.curvature_mismatch();
    out.push_back(s);
  }
  return out;
}

std::string FieldLevelSource::describe() const {
  const Field2D& f = geo_->field();
  std::ostringstream s;
  s << "2-D " << f.domain.label << ", R=" << f.domain.R << ", p=" << f.p << ", eps=" << f.eps
    << ", grid " << f.n_sigma << "x" << f.n_theta;
  return s.str();
}

DivergenceResiduals divergence_residuals(const FieldGeometry& geo, double alpha,
                                         double sigma_lo, double sigma_hi,
                                         double theta_lo, double theta_hi) {
  const Field2D& f = geo.field();
  const double p = f.p;
  const int n = 3;
  const ArrayXXd& G = geo.G();
  const ArrayXXd& Gn = geo.G_normal();
  const ArrayXXd& Gt = geo.G_tangent();
  const ArrayXXd& nr = geo.nu_r();
  const ArrayXXd& nt = geo.nu_t();
  const ArrayXXd& th = geo.theta_eps();
  const ArrayXXd lambda = 1.0 + (2.0 - p) / (p - 1.0) * th;

  // J = G^{a+p-2} grad w = G^{a+p-1} nu
  const ArrayXXd gJ = G.pow(alpha + p - 1);
  const ArrayXXd divJ = geo.divergence(gJ * nr, gJ * nt);
  const ArrayXXd rhsJ = (alpha - (2.0 - p) * th) * G.pow(alpha + p - 2) * Gn + lambda * G.pow(alpha + p);

  // Y = G^{a+p-3} (grad G + (p-2)(1-theta) <grad G, nu> nu)
  const ArrayXXd Gr = Gn * nr - Gt * nt;
  const ArrayXXd Gth = Gn * nt + Gt * nr;
  const ArrayXXd gY = G.pow(alpha + p - 3);
  const ArrayXXd c = (p - 2.0) * (1.0 - th) * Gn;
  const ArrayXXd divY = geo.divergence(gY * (Gr + c * nr), gY * (Gth + c * nt));
  const ArrayXXd& kphi = geo.kappa_parallel();
  const ArrayXXd km = geo.H() - kphi;
  const ArrayXXd traceless2 = 0.5 * (km - kphi).square();
  const ArrayXXd Dplus =
      (p - 1) * (p - 1) * lambda * ((alpha + p - 2) / (p - 1) - (n - 2.0) / (n - 1.0) * lambda) *
          (Gn / G).square() +
      (alpha + p - 2) * (Gt / G).square() + traceless2;
  const ArrayXXd Dsigma =
      (lambda.square() / (n - 1.0) + 2 * (2.0 - p) / ((p - 1) * (p - 1)) * (1 - th) * th) * G.square() +
      (2 * (p - 1) * (n - 2.0) / (n - 1.0) * lambda.square() +
       (2.0 - p) * (1 - th) * (1 - p / (p - 1) * th)) * Gn;
  const ArrayXXd rhsY = G.pow(alpha + p - 2) * (Dplus + Dsigma);

  DivergenceResiduals out;
  for (int i = 1; i < f.n_sigma; ++i) {
    const double sg = f.sigma(f.xi(i));
    if (sg < sigma_lo || sg > sigma_hi) continue;
    for (int j = 1; j < f.n_theta; ++j) {
      const double tj = f.theta(j);
      if (tj < theta_lo || tj > theta_hi) continue;
      out.J = std::max(out.J, std::abs(divJ(i, j) - rhsJ(i, j)));
      out.Y = std::max(out.Y, std::abs(divY(i, j) - rhsY(i, j)));
      out.J_scale = std::max(out.J_scale, std::abs(rhsJ(i, j)));
      out.Y_scale = std::max(out.Y_scale, std::abs(rhsY(i, j)));
      ++out.samples;
    }
  }
  if (out.samples == 0) throw DomainError("divergence_residuals: empty window");
  return out;
}

void write_field_csv(const Field2D& field, std::ostream& out) {
  out << "sigma,theta,r,u\n" << std::setprecision(17);
  for (int i = 0; i <= field.n_sigma; ++i) {
    const double x = field.xi(i);
    for (int j = 0; j <= field.n_theta; ++j) {
      const double th = field.theta(j);
      out << field.sigma(x) << ',' << th << ',' << field.radius(x, th) << ',' << field.u(i, j)
          << '\n';
    }
  }
}

}  // namespace pcap
