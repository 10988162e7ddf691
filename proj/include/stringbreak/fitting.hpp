#pragma once

#include <functional>
#include <span>

namespace stringbreak {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
  double max_residual = 0.0;
};

// Ordinary least squares y = intercept + slope * x. Needs >= 2 distinct x.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

struct Minimum {
  double x = 0.0;
  double value = 0.0;
};

// Golden-section search on [a, b]; stops when the bracket is narrower than tol.
Minimum golden_section_minimize(const std::function<double(double)>& f, double a, double b,
                                double tol);

// Bisection for f(a) f(b) <= 0; throws BracketError otherwise.
double bisect_root(const std::function<double(double)>& f, double a, double b, double tol);

// gap(x) = 2 sqrt(slope^2 (x - x0)^2 + (delta / 2)^2)
struct HyperbolaFit {
  double x0 = 0.0;
  double delta = 0.0;
  double slope = 0.0;
  double rms_residual = 0.0;
  int iterations = 0;
};

double hyperbola_gap(double x, double x0, double delta, double slope);

// Levenberg-Marquardt from the given starting point. delta and slope are
// returned as absolute values.
HyperbolaFit fit_hyperbola(std::span<const double> x, std::span<const double> gap,
                           HyperbolaFit guess);

}  // namespace stringbreak
