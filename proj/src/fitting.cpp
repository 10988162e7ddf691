#include "stringbreak/fitting.hpp"

#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/LevenbergMarquardt>

#include "stringbreak/errors.hpp"

namespace stringbreak {

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("fit_line: x and y differ in length");
  if (x.size() < 2) throw ValidationError("fit_line: need at least two points");
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, 0) = 1.0;
    a(i, 1) = x[i];
    b[i] = y[i];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < 2) throw NumericalError("fit_line: abscissae are degenerate");
  const Eigen::VectorXd c = qr.solve(b);
  const Eigen::VectorXd r = a * c - b;
  return {c[1], c[0], std::sqrt(r.squaredNorm() / static_cast<double>(n)),
          r.cwiseAbs().maxCoeff()};
}

Minimum golden_section_minimize(const std::function<double(double)>& f, double a, double b,
                                double tol) {
  if (!(b > a)) throw ValidationError("golden section: empty interval");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return fc < fd ? Minimum{c, fc} : Minimum{d, fd};
}

double bisect_root(const std::function<double(double)>& f, double a, double b, double tol) {
  double fa = f(a);
  const double fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0) == (fb > 0)) {
    throw BracketError("bisection: no sign change on [" + std::to_string(a) + ", " +
                       std::to_string(b) + "]");
  }
  while (std::abs(b - a) > tol) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if (fm == 0.0) return m;
    if ((fm > 0) == (fa > 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

double hyperbola_gap(double x, double x0, double delta, double slope) {
  const double u = slope * (x - x0);
  return 2.0 * std::sqrt(u * u + 0.25 * delta * delta);
}

namespace {

struct HyperbolaFunctor : Eigen::DenseFunctor<double> {
  std::span<const double> x;
  std::span<const double> y;

  HyperbolaFunctor(std::span<const double> xs, std::span<const double> ys)
      : Eigen::DenseFunctor<double>(3, static_cast<int>(xs.size())), x(xs), y(ys) {}

  int operator()(const InputType& p, ValueType& r) const {
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = hyperbola_gap(x[i], p[0], p[1], p[2]) - y[i];
    return 0;
  }

  int df(const InputType& p, JacobianType& jac) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double dx = x[i] - p[0];
      const double g = hyperbola_gap(x[i], p[0], p[1], p[2]);
      const double inv = g > 0 ? 4.0 / g : 0.0;
      const auto row = static_cast<Eigen::Index>(i);
      jac(row, 0) = -inv * p[2] * p[2] * dx;
      jac(row, 1) = inv * 0.25 * p[1];
      jac(row, 2) = inv * p[2] * dx * dx;
    }
    return 0;
  }
};

}  // namespace

HyperbolaFit fit_hyperbola(std::span<const double> x, std::span<const double> gap,
                           HyperbolaFit guess) {
  if (x.size() != gap.size()) throw ValidationError("fit_hyperbola: size mismatch");
  if (x.size() < 4) throw ValidationError("fit_hyperbola: need at least four points");
  HyperbolaFunctor functor(x, gap);
  Eigen::LevenbergMarquardt<HyperbolaFunctor> lm(functor);
  lm.setXtol(1e-15);
  lm.setFtol(1e-15);
  lm.setGtol(0.0);
  lm.setMaxfev(2000);
  Eigen::VectorXd p(3);
  p << guess.x0, guess.delta, guess.slope;
  const auto status = lm.minimize(p);
  if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters ||
      !p.allFinite()) {
    throw NumericalError("fit_hyperbola: Levenberg-Marquardt failed");
  }
  Eigen::VectorXd r(static_cast<Eigen::Index>(x.size()));
  functor(p, r);
  HyperbolaFit out;
  out.x0 = p[0];
  out.delta = std::abs(p[1]);
  out.slope = std::abs(p[2]);
  out.rms_residual = std::sqrt(r.squaredNorm() / static_cast<double>(x.size()));
  out.iterations = static_cast<int>(lm.iterations());
  return out;
}

}  // namespace stringbreak
