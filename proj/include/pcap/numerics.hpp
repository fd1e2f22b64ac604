#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcap {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Adaptive quadrature gave up; best_estimate is the partial sum.
class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& what, double best)
      : Error(what), best_estimate(best) {}
  double best_estimate;
};

class BracketError : public Error {
 public:
  using Error::Error;
};

/// An identity that must hold up to roundoff was violated.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

struct Tolerance {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  int max_iter = 200;

  void validate() const;
};

/// Adaptive Simpson on [a, b]; the accepted error estimate is
/// <= max(abs_tol, rel_tol * |result|). max_iter bounds the recursion depth.
double integrate(const std::function<double(double)>& fn, double a, double b,
                 const Tolerance& tol = {});

struct RootResult {
  double root;
  double lo;
  double hi;
  int iterations;
};

/// Bracketing root find: secant steps inside the bracket, bisection whenever
/// the bracket fails to halve. Stops when the bracket is narrower than
/// max(abs_tol, rel_tol * |x|) or fn hits zero exactly.
RootResult find_root_bracket(const std::function<double(double)>& fn,
                             double lo, double hi, const Tolerance& tol = {});

double find_root(const std::function<double(double)>& fn, double lo, double hi,
                 const Tolerance& tol = {});

/// Natural cubic spline through (x_i, y_i), x strictly increasing.
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(Eigen::VectorXd x, Eigen::VectorXd y);

  double operator()(double x) const { return eval(x, 0); }
  double d1(double x) const { return eval(x, 1); }
  double d2(double x) const { return eval(x, 2); }

  double x_min() const { return x_(0); }
  double x_max() const { return x_(x_.size() - 1); }
  const Eigen::VectorXd& knots() const { return x_; }
  const Eigen::VectorXd& values() const { return y_; }

 private:
  double eval(double x, int order) const;

  Eigen::VectorXd x_;
  Eigen::VectorXd y_;
  Eigen::VectorXd m_;  // second derivatives at the knots
};

template <typename Scalar>
struct SpdResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x;
  Scalar residual = 0;  // ||b - A x|| / ||b||
  int iterations = 0;
  bool converged = false;
  std::vector<Scalar> restart_residuals;
};

/// Preconditioned conjugate gradient for a matrix-free SPD operator.
/// apply(v, out) writes A v into out. The iteration restarts every
/// `restart` steps from the best iterate seen so far, so the residual
/// recorded at each restart never increases.
template <typename Scalar, typename Apply>
SpdResult<Scalar> solve_spd(
    Apply&& apply, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& b,
    const Tolerance& tol,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>* inv_diag = nullptr,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>* x0 = nullptr,
    int restart = 0) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  tol.validate();
  const Eigen::Index n = b.size();
  SpdResult<Scalar> out;
  out.x = x0 ? *x0 : Vec::Zero(n);
  const Scalar bnorm = b.norm();
  if (bnorm == Scalar(0)) {
    out.x.setZero();
    out.converged = true;
    return out;
  }
  if (restart <= 0) restart = static_cast<int>(std::max<Eigen::Index>(n, 50));

  auto precond = [&](const Vec& r) -> Vec {
    return inv_diag ? Vec(inv_diag->cwiseProduct(r)) : r;
  };

  Vec Ax(n), r(n), z(n), p(n), Ap(n);
  Vec best = out.x;
  apply(out.x, Ax);
  r = b - Ax;
  Scalar best_res = r.norm() / bnorm;
  out.restart_residuals.push_back(best_res);

  int it = 0;
  while (it < tol.max_iter && best_res > tol.rel_tol) {
    // (re)start from the best iterate
    out.x = best;
    apply(out.x, Ax);
    r = b - Ax;
    z = precond(r);
    p = z;
    Scalar rz = r.dot(z);
    for (int k = 0; k < restart && it < tol.max_iter; ++k, ++it) {
      apply(p, Ap);
      const Scalar pAp = p.dot(Ap);
      if (!(pAp > Scalar(0))) break;
      const Scalar a = rz / pAp;
      out.x += a * p;
      r -= a * Ap;
      const Scalar res = r.norm() / bnorm;
      if (res < best_res) {
        best_res = res;
        best = out.x;
      }
      if (res <= tol.rel_tol) {
        ++it;
        break;
      }
      z = precond(r);
      const Scalar rz_new = r.dot(z);
      p = z + (rz_new / rz) * p;
      rz = rz_new;
    }
    // recompute the true residual of the best iterate
    apply(best, Ax);
    best_res = (b - Ax).norm() / bnorm;
    out.restart_residuals.push_back(best_res);
    if (!(best_res <= out.restart_residuals[out.restart_residuals.size() - 2]))
      break;  // no progress over a full cycle
  }
  out.x = best;
  out.residual = best_res;
  out.iterations = it;
  out.converged = best_res <= tol.rel_tol;
  return out;
}

/// log(exp(a) + exp(b)) without overflow.
inline double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

/// Composite Simpson weights on a uniform grid with an even number of
/// intervals of width h.
Eigen::VectorXd simpson_weights(int n_intervals, double h);

}  // namespace pcap
