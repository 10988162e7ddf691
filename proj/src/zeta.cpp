#include "stringbreak/zeta.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "stringbreak/errors.hpp"

namespace stringbreak {
namespace {

constexpr long kDirectTerms = 15;

// B_{2k} / (2k)! for k = 1..10.
constexpr std::array<double, 10> kBernoulliOverFactorial = {
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
    -3617.0 / 10670622842880000.0,
    43867.0 / 5109094217170944000.0,
    -174611.0 / 802857662698291200000.0,
};

// Euler-Maclaurin estimate of sum_{n >= first} n^-s.
double euler_maclaurin_tail(double s, double first) {
  const double base = std::pow(first, -s);
  double sum = first * base / (s - 1.0) + 0.5 * base;
  // term_k = B_2k/(2k)! * s(s+1)...(s+2k-2) * first^(-s-2k+1)
  double rising = s;
  double power = base / first;
  for (std::size_t k = 0; k < kBernoulliOverFactorial.size(); ++k) {
    sum += kBernoulliOverFactorial[k] * rising * power;
    const double order = 2.0 * static_cast<double>(k + 1);
    rising *= (s + order - 1.0) * (s + order);
    power /= first * first;
  }
  return sum;
}

}  // namespace

double zeta_tail(double s, long first) {
  if (!(s > 1.0 + 1e-6)) {
    throw DomainError("zeta: argument " + std::to_string(s) +
                      " must exceed 1 (series diverges)");
  }
  if (first < 1) {
    throw DomainError("zeta_tail: first index must be >= 1");
  }
  const long stop = std::max(first, kDirectTerms + 1);
  double sum = euler_maclaurin_tail(s, static_cast<double>(stop));
  // Smallest terms first.
  for (long m = stop - 1; m >= first; --m) {
    sum += std::pow(static_cast<double>(m), -s);
  }
  return sum;
}

double zeta(double s) { return zeta_tail(s, 1); }

}  // namespace stringbreak
