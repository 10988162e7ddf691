#include <cmath>
#include <vector>

#include "doctest.h"
#include "stringbreak/errors.hpp"
#include "stringbreak/fitting.hpp"
#include "stringbreak/statics.hpp"

using namespace stringbreak;

TEST_CASE("fit_line recovers an exact line and reports residuals") {
  std::vector<double> x{0, 1, 2, 3, 4}, y;
  for (double v : x) y.push_back(1.5 - 0.25 * v);
  const auto f = fit_line(x, y);
  CHECK(f.slope == doctest::Approx(-0.25).epsilon(1e-14));
  CHECK(f.intercept == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(f.rms_residual < 1e-14);

  y[2] += 0.1;
  CHECK(fit_line(x, y).max_residual > 0.05);
  const std::vector<double> same{2, 2, 2};
  CHECK_THROWS_AS(fit_line(same, same), NumericalError);
}

TEST_CASE("golden section and bisection") {
  const auto m = golden_section_minimize([](double x) { return (x - 0.3) * (x - 0.3) + 2.0; }, -1, 2, 1e-10);
  // a flat minimum limits x to about sqrt(machine epsilon)
  CHECK(m.x == doctest::Approx(0.3).epsilon(1e-7));
  CHECK(m.value == doctest::Approx(2.0).epsilon(1e-14));

  const double r = bisect_root([](double x) { return x * x - 2.0; }, 0.0, 2.0, 1e-14);
  CHECK(r == doctest::Approx(std::sqrt(2.0)).epsilon(1e-13));
  CHECK_THROWS_AS(bisect_root([](double x) { return x * x + 1.0; }, -1.0, 1.0, 1e-10), BracketError);
}

TEST_CASE("hyperbola fit recovers its own parameters") {
  const double x0 = 0.17, delta = 0.03, slope = 5.5;
  std::vector<double> x, gap;
  for (int i = 0; i < 41; ++i) {
    x.push_back(x0 - 0.01 + 0.02 * i / 40.0);
    gap.push_back(hyperbola_gap(x.back(), x0, delta, slope));
  }
  CHECK(hyperbola_gap(x0, x0, delta, slope) == doctest::Approx(delta).epsilon(1e-15));
  const auto f = fit_hyperbola(x, gap, {x0 + 0.002, delta * 1.3, slope * 0.7});
  CHECK(f.x0 == doctest::Approx(x0).epsilon(1e-10));
  CHECK(f.delta == doctest::Approx(delta).epsilon(1e-9));
  CHECK(f.slope == doctest::Approx(slope).epsilon(1e-9));
  CHECK(f.rms_residual < 1e-12);
}

TEST_CASE("gap minimum fit on a synthetic two-level gap") {
  const double x0 = 0.2143, delta = 0.0123, slope = 4.2;
  auto gap = [&](double x) { return hyperbola_gap(x, x0, delta, slope); };
  const auto fit = fit_gap_minimum(gap, 0.0, 0.5);
  CHECK(fit.control_c == doctest::Approx(x0).epsilon(1e-7));
  CHECK(fit.gap_c == doctest::Approx(delta).epsilon(1e-7));
  CHECK(fit.slope == doctest::Approx(slope).epsilon(1e-6));
  CHECK(fit.residual <= 1e-6 * delta);
  CHECK(fit.window_lo < x0);
  CHECK(fit.window_hi > x0);

  // minimum on the edge of the scan range
  CHECK_THROWS_AS(fit_gap_minimum(gap, 0.3, 0.6), BracketError);
}
