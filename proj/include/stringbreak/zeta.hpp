#pragma once

namespace stringbreak {

// Riemann zeta function for real s > 1.
//
// Direct summation of the first 15 terms followed by an Euler-Maclaurin tail
// starting at n = 16 with Bernoulli corrections through B_20 (ten terms). The
// truncation error of the tail is below 1e-22 for s in (1, 30], so the
// result is limited by double rounding: absolute error <= 1e-12 whenever
// zeta(s) < 1e3, i.e. s > 1.001.
//
// Throws DomainError for s <= 1 + 1e-6 (divergent or too close to the pole).
double zeta(double s);

// Tail sum sum_{n >= first} n^-s for s > 1 and first >= 1.
double zeta_tail(double s, long first);

}  // namespace stringbreak
