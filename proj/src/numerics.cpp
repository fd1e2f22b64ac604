#include "pcap/numerics.hpp"

#include <algorithm>
#include <sstream>

namespace pcap {

void Tolerance::validate() const {
  if (!(abs_tol > 0) || !(rel_tol > 0) || max_iter < 1)
    throw ParameterError("tolerance: abs_tol, rel_tol must be > 0 and max_iter >= 1");
}

namespace {

struct SimpsonState {
  const std::function<double(double)>& fn;
  double eps;
  int max_depth;
  double floor = 0.0;  // roundoff level of the whole integral
  bool failed = false;
  long evals = 0;
};

double eval_checked(SimpsonState& st, double x) {
  const double v = st.fn(x);
  ++st.evals;
  if (!std::isfinite(v)) {
    std::ostringstream msg;
    msg << "integrand not finite at x = " << x;
    throw QuadratureError(msg.str(), std::numeric_limits<double>::quiet_NaN());
  }
  return v;
}

double simpson_rec(SimpsonState& st, double a, double b, double fa, double fm,
                   double fb, double whole, double eps, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = eval_checked(st, lm);
  const double frm = eval_checked(st, rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= std::max(15.0 * eps, st.floor)) return left + right + delta / 15.0;
  if (depth >= st.max_depth || m <= a || b <= m) {
    st.failed = true;
    return left + right + delta / 15.0;
  }
  return simpson_rec(st, a, m, fa, flm, fm, left, 0.5 * eps, depth + 1) +
         simpson_rec(st, m, b, fm, frm, fb, right, 0.5 * eps, depth + 1);
}

double simpson_pass(SimpsonState& st, double a, double b, double eps) {
  // Start from 8 panels so that narrow features are seen by the first pass.
  constexpr int kPanels = 8;
  const double h = (b - a) / kPanels;
  double total = 0.0;
  double fa = eval_checked(st, a);
  for (int i = 0; i < kPanels; ++i) {
    const double x0 = a + i * h;
    const double x1 = (i + 1 == kPanels) ? b : a + (i + 1) * h;
    const double xm = 0.5 * (x0 + x1);
    const double fm = eval_checked(st, xm);
    const double fb = eval_checked(st, x1);
    const double whole = (x1 - x0) / 6.0 * (fa + 4.0 * fm + fb);
    total += simpson_rec(st, x0, x1, fa, fm, fb, whole, eps / kPanels, 0);
    fa = fb;
  }
  return total;
}

}  // namespace

double integrate(const std::function<double(double)>& fn, double a, double b,
                 const Tolerance& tol) {
  tol.validate();
  if (!(a <= b)) throw DomainError("integrate: requires a <= b");
  if (a == b) return 0.0;
  SimpsonState st{fn, 0.0, std::min(tol.max_iter, 60)};

  // A coarse pass fixes the scale for the relative tolerance; it is redone
  // if the refined result shows the scale was badly off.
  double scale = std::abs(simpson_pass(st, a, b, std::abs(b - a) * 1e30));
  double result = 0.0;
  for (int pass = 0; pass < 3; ++pass) {
    st.failed = false;
    st.floor = 16.0 * std::numeric_limits<double>::epsilon() * scale;
    const double eps = std::max(tol.abs_tol, tol.rel_tol * scale);
    result = simpson_pass(st, a, b, eps);
    const double s = std::abs(result);
    if (s >= 0.5 * scale && s <= 2.0 * scale) break;
    scale = s;
  }
  if (st.failed)
    throw QuadratureError("integrate: maximum recursion depth exceeded", result);
  return result;
}

RootResult find_root_bracket(const std::function<double(double)>& fn,
                             double lo, double hi, const Tolerance& tol) {
  tol.validate();
  if (lo > hi) std::swap(lo, hi);
  double flo = fn(lo);
  double fhi = fn(hi);
  if (!std::isfinite(flo) || !std::isfinite(fhi))
    throw BracketError("find_root: function not finite at bracket ends");
  if (flo == 0.0) return {lo, lo, lo, 0};
  if (fhi == 0.0) return {hi, hi, hi, 0};
  if ((flo > 0) == (fhi > 0)) {
    std::ostringstream msg;
    msg << "find_root: no sign change on [" << lo << ", " << hi << "]";
    throw BracketError(msg.str());
  }
  int it = 0;
  double width_prev = hi - lo;
  bool force_bisect = false;
  while (it < tol.max_iter) {
    const double width = hi - lo;
    const double mid = 0.5 * (lo + hi);
    if (width <= std::max(tol.abs_tol, tol.rel_tol * std::abs(mid))) break;
    double x;
    if (force_bisect) {
      x = mid;
    } else {
      x = hi - fhi * (hi - lo) / (fhi - flo);
      // keep secant points strictly inside, away from the ends
      const double guard = 1e-3 * width;
      if (!(x > lo + guard && x < hi - guard)) x = mid;
    }
    const double fx = fn(x);
    ++it;
    if (!std::isfinite(fx)) throw BracketError("find_root: function not finite inside bracket");
    if (fx == 0.0) return {x, x, x, it};
    if ((fx > 0) == (flo > 0)) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
      fhi = fx;
    }
    const double w = hi - lo;
    force_bisect = !force_bisect && w > 0.5 * width_prev;
    width_prev = w;
  }
  const double root = (std::abs(flo) < std::abs(fhi)) ? lo : hi;
  return {root, lo, hi, it};
}

double find_root(const std::function<double(double)>& fn, double lo, double hi,
                 const Tolerance& tol) {
  return find_root_bracket(fn, lo, hi, tol).root;
}

CubicSpline::CubicSpline(Eigen::VectorXd x, Eigen::VectorXd y)
    : x_(std::move(x)), y_(std::move(y)) {
  const Eigen::Index n = x_.size();
  if (n < 3 || y_.size() != n) throw ParameterError("spline: need >= 3 matching samples");
  for (Eigen::Index i = 1; i < n; ++i)
    if (!(x_(i) > x_(i - 1))) throw ParameterError("spline: knots must be strictly increasing");
  // Tridiagonal system for interior second derivatives (natural ends).
  m_ = Eigen::VectorXd::Zero(n);
  const Eigen::Index k = n - 2;
  Eigen::VectorXd diag(k), upper(k), rhs(k);
  for (Eigen::Index i = 1; i <= k; ++i) {
    const double h0 = x_(i) - x_(i - 1);
    const double h1 = x_(i + 1) - x_(i);
    diag(i - 1) = 2.0 * (h0 + h1);
    upper(i - 1) = h1;
    rhs(i - 1) = 6.0 * ((y_(i + 1) - y_(i)) / h1 - (y_(i) - y_(i - 1)) / h0);
  }
  for (Eigen::Index i = 1; i < k; ++i) {
    const double w = upper(i - 1) / diag(i - 1);  // sub-diagonal equals upper(i-1)
    diag(i) -= w * upper(i - 1);
    rhs(i) -= w * rhs(i - 1);
  }
  for (Eigen::Index i = k - 1; i >= 0; --i) {
    const double next = (i + 1 < k) ? m_(i + 2) : 0.0;
    m_(i + 1) = (rhs(i) - upper(i) * next) / diag(i);
  }
}

double CubicSpline::eval(double x, int order) const {
  const Eigen::Index n = x_.size();
  if (n == 0) throw DomainError("spline: empty");
  const double lo = x_(0), hi = x_(n - 1);
  const double slack = 1e-12 * (hi - lo);
  if (x < lo - slack || x > hi + slack) {
    std::ostringstream msg;
    msg << "spline: x = " << x << " outside [" << lo << ", " << hi << "]";
    throw DomainError(msg.str());
  }
  x = std::clamp(x, lo, hi);
  const double* begin = x_.data();
  Eigen::Index i = std::upper_bound(begin, begin + n, x) - begin - 1;
  i = std::clamp<Eigen::Index>(i, 0, n - 2);
  const double h = x_(i + 1) - x_(i);
  const double a = (x_(i + 1) - x) / h;
  const double b = (x - x_(i)) / h;
  switch (order) {
    case 0:
      return a * y_(i) + b * y_(i + 1) +
             ((a * a * a - a) * m_(i) + (b * b * b - b) * m_(i + 1)) * h * h / 6.0;
    case 1:
      return (y_(i + 1) - y_(i)) / h -
             (3.0 * a * a - 1.0) / 6.0 * h * m_(i) +
             (3.0 * b * b - 1.0) / 6.0 * h * m_(i + 1);
    default:
      return a * m_(i) + b * m_(i + 1);
  }
}

Eigen::VectorXd simpson_weights(int n_intervals, double h) {
  if (n_intervals < 2 || n_intervals % 2 != 0)
    throw ParameterError("simpson_weights: need an even number of intervals");
  Eigen::VectorXd w(n_intervals + 1);
  for (int i = 0; i <= n_intervals; ++i)
    w(i) = (i == 0 || i == n_intervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
  return w * (h / 3.0);
}

}  // namespace pcap
