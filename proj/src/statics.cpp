#include "stringbreak/statics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "stringbreak/errors.hpp"
#include "stringbreak/fitting.hpp"
#include "stringbreak/zeta.hpp"

namespace stringbreak {

namespace {

void require_static(const ChainSpec& chain, const char* what) {
  if (!chain.has_static_external()) {
    throw ValidationError(std::string(what) + " needs the static-external layout");
  }
}

// sum_{i<j} J(j - i) over ell consecutive sites
double string_pair_sum(const ChainSpec& chain) {
  const int ell = chain.ell();
  double sum = 0.0;
  for (int d = ell - 1; d >= 1; --d) sum += (ell - d) * chain.kernel()(d);
  return sum;
}

double sum_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0);
}

}  // namespace

double g0_string_energy(const ChainSpec& chain, double h) {
  require_static(chain, "g0_string_energy");
  return -string_pair_sum(chain) - sum_of(effective_field(chain)) + h * chain.ell();
}

double g0_broken_energy(const ChainSpec& chain, double h) {
  require_static(chain, "g0_broken_energy");
  return -string_pair_sum(chain) + sum_of(effective_field(chain)) - h * chain.ell();
}

double g0_vacuum_energy(const ChainSpec& chain, double h) {
  require_static(chain, "g0_vacuum_energy");
  return -string_pair_sum(chain) + sum_of(vacuum_field(chain)) - h * chain.ell();
}

double g0_energy_gap(const ChainSpec& chain, double h) {
  require_static(chain, "g0_energy_gap");
  const int ell = chain.ell();
  const auto& kernel = chain.kernel();
  if (kernel.is_exponential()) {
    const double q = std::exp(-1.0 / kernel.xi());
    const double qell = std::exp(-ell / kernel.xi());
    return 4.0 * (1.0 - 2.0 * q) * (1.0 - qell) / ((1.0 - q) * (1.0 - q)) - 2.0 * ell * h;
  }
  const double alpha = kernel.alpha();
  double sum = 0.0;
  for (int j = ell; j >= 1; --j) sum += (ell - j + 2) * std::pow(static_cast<double>(j), -alpha);
  return -4.0 * ell * zeta(alpha) + 4.0 * sum - 2.0 * ell * h;
}

double g0_breaking_field(const ChainSpec& chain) {
  require_static(chain, "g0_breaking_field");
  if (!chain.kernel().is_exponential()) {
    throw ValidationError("g0_breaking_field is defined for the exponential kernel; "
                          "use the long-range phase boundaries for power laws");
  }
  return g0_energy_gap(chain, 0.0) / (2.0 * chain.ell());
}

G0Coefficients g0_potential_coefficients(const CouplingKernel& kernel) {
  const double xi = kernel.xi();
  const double q = std::exp(-1.0 / xi);
  const double em1 = std::expm1(1.0 / xi);
  return {4.0 / ((1.0 - q) * (1.0 - q)), -4.0 / (em1 * em1), 8.0 / (1.0 - q), -4.0};
}

G0Potentials g0_potentials(const ChainSpec& chain, double h) {
  require_static(chain, "g0_potentials");
  const auto c = g0_potential_coefficients(chain.kernel());
  const int ell = chain.ell();
  const double qell = std::exp(-ell / chain.kernel().xi());
  return {2.0 * h * (ell + 2) + c.a_s + c.b_s * qell, 4.0 * h + c.a_bs + c.b_bs * qell};
}

double potential_offset(const ChainSpec& chain) {
  return 4.0 * (chain.kernel().tail_sum(1) + chain.kernel().tail_sum(chain.ell() + 2L));
}

// ---- configurations ----

double config_energy(const ChainSpec& chain, double h, std::span<const long> down_sites,
                     EnergyConvention convention) {
  require_static(chain, "config_energy");
  const long last = chain.ell() + 1L;
  if (down_sites.size() < 2 || down_sites.front() != 0 || down_sites.back() != last) {
    throw ValidationError("down-site list must start at 0 and end at ell + 1 = " +
                          std::to_string(last));
  }
  for (std::size_t k = 1; k < down_sites.size(); ++k) {
    if (down_sites[k] <= down_sites[k - 1]) {
      throw ValidationError("down-site list must be strictly ascending");
    }
  }
  const auto& kernel = chain.kernel();
  const double n = static_cast<double>(down_sites.size());
  double pairs = 0.0;
  if (convention == EnergyConvention::Compact) {
    const double xi = kernel.xi();
    for (std::size_t a = 0; a < down_sites.size(); ++a) {
      for (std::size_t b = a + 1; b < down_sites.size(); ++b) {
        pairs += std::exp(-(down_sites[b] - down_sites[a]) / xi);
      }
    }
    return 2.0 * n * (1.0 / std::expm1(1.0 / xi) + h) - 2.0 * pairs;
  }
  for (std::size_t a = 0; a < down_sites.size(); ++a) {
    for (std::size_t b = a + 1; b < down_sites.size(); ++b) {
      pairs += kernel(down_sites[b] - down_sites[a]);
    }
  }
  return n * (4.0 * kernel.tail_sum(1) + 2.0 * h) - 4.0 * pairs;
}

std::vector<long> down_sites_of(Bitstring s) {
  std::vector<long> out{0};
  for (int k = 0; k < s.length; ++k) {
    if (s.spin(k) < 0) out.push_back(k + 1);
  }
  out.push_back(s.length + 1L);
  return out;
}

std::vector<long> edge_block(int ell, int n_down) {
  std::vector<long> out;
  for (long k = 0; k <= n_down; ++k) out.push_back(k);
  out.push_back(ell + 1L);
  return out;
}

bool is_edge_block(Bitstring s, int n_down) {
  const std::uint64_t full = Bitstring::all_up(s.length).bits;
  const std::uint64_t left_down = (std::uint64_t{1} << n_down) - 1;  // sites 1..n_down
  const std::uint64_t right_down = left_down << (s.length - n_down);
  const std::uint64_t down = full & ~s.bits;
  return down == left_down || down == right_down;
}

SectorMinimum enumerate_sector_minimum(const ChainSpec& chain, double h, int n_down,
                                       EnergyConvention convention) {
  const int ell = chain.ell();
  if (n_down < 0 || n_down > ell) throw ValidationError("n_down must lie in [0, ell]");
  if (ell > 14) throw ResourceError("sector enumeration is limited to ell <= 14");
  const std::uint64_t full = Bitstring::all_up(ell).bits;
  SectorMinimum best;
  bool first = true;
  // iterate over down-masks with n_down bits set (Gosper)
  std::uint64_t mask = (std::uint64_t{1} << n_down) - 1;
  while (mask <= full) {
    const Bitstring s{full & ~mask, ell};
    const auto sites = down_sites_of(s);
    const double e = config_energy(chain, h, sites, convention);
    if (first || e < best.energy) {
      best = {s, e, false};
      first = false;
    }
    if (mask == 0) break;
    const std::uint64_t c = mask & (~mask + 1);
    const std::uint64_t r = mask + c;
    mask = (((r ^ mask) >> 2) / c) | r;
  }
  best.edge_block = is_edge_block(best.config, n_down);
  return best;
}

std::vector<double> bubble_crossing_fields(const ChainSpec& chain, EnergyConvention convention) {
  require_static(chain, "bubble_crossing_fields");
  if (!chain.kernel().is_exponential()) {
    throw ValidationError("bubble crossing fields need the exponential kernel");
  }
  const int ell = chain.ell();
  const auto string_sites = edge_block(ell, ell);
  std::vector<double> out;
  for (int r = 1; r <= ell; ++r) {
    const auto bubble_sites = edge_block(ell, ell - r);
    auto diff = [&](double h) {
      return config_energy(chain, h, bubble_sites, convention) -
             config_energy(chain, h, string_sites, convention);
    };
    const double scale = std::abs(diff(0.0)) + 1.0;
    out.push_back(bisect_root(diff, -scale, scale, 1e-13));
  }
  return out;
}

// ---- spectra ----

double two_level_gap(const IsingHamiltonian& ham, double fixed, double x, ScanMode mode,
                     const EigenOptions& opt) {
  const auto h = mode == ScanMode::ScanH ? ham.with_controls(x, fixed) : ham.with_controls(fixed, x);
  const auto eig = lowest_eigenpairs(h, 2, opt);
  return eig.values[1] - eig.values[0];
}

CrossingFit fit_gap_minimum(const std::function<double(double)>& gap, double lo, double hi,
                            const CrossingOptions& opt) {
  if (!(hi > lo)) throw ValidationError("scan interval is empty");
  if (opt.grid_points < 3) throw ValidationError("scan needs at least 3 grid points");
  const int n = opt.grid_points;
  std::vector<double> xs(n), gs(n);
  for (int i = 0; i < n; ++i) {
    xs[i] = lo + (hi - lo) * i / (n - 1);
    gs[i] = gap(xs[i]);
  }
  const auto it = std::min_element(gs.begin(), gs.end());
  const auto idx = static_cast<int>(it - gs.begin());
  if (idx == 0 || idx == n - 1) {
    throw BracketError("gap minimum at the edge of [" + std::to_string(lo) + ", " +
                       std::to_string(hi) + "]; no interior avoided crossing");
  }
  const Minimum m = golden_section_minimize(gap, xs[idx - 1], xs[idx + 1], opt.golden_tol);

  CrossingFit fit;
  fit.x_min = m.x;
  fit.gap_min = m.value;
  // slope guess from the hyperbola at a symmetric offset
  double d = std::max(m.value, 1e-9);
  double slope = 1.0;
  for (int pass = 0; pass < 3; ++pass) {
    const double g_avg = 0.5 * (gap(m.x + d) + gap(m.x - d));
    const double excess = 0.25 * g_avg * g_avg - 0.25 * m.value * m.value;
    slope = excess > 0 ? std::sqrt(excess) / d : slope;
    d = 2.0 * m.value / slope;
  }
  const double half = opt.window * m.value / slope;
  fit.window_lo = m.x - half;
  fit.window_hi = m.x + half;
  std::vector<double> wx(opt.fit_points), wg(opt.fit_points);
  for (int i = 0; i < opt.fit_points; ++i) {
    wx[i] = fit.window_lo + 2.0 * half * i / (opt.fit_points - 1);
    wg[i] = gap(wx[i]);
  }
  const auto h = fit_hyperbola(wx, wg, {m.x, m.value, slope, 0.0, 0});
  fit.control_c = h.x0;
  fit.gap_c = h.delta;
  fit.slope = h.slope;
  fit.residual = h.rms_residual;
  if (!(fit.gap_c > 0)) throw NumericalError("avoided-crossing fit returned a vanishing gap");
  if (fit.control_c < lo || fit.control_c > hi) {
    throw BracketError("fitted crossing lies outside the scan interval");
  }
  return fit;
}

CrossingFit locate_avoided_crossing(const ChainSpec& chain, double fixed, double lo, double hi,
                                    ScanMode mode, const CrossingOptions& opt) {
  const IsingHamiltonian ham(chain, make_fields(chain, 0.0, 0.0));
  return fit_gap_minimum([&](double x) { return two_level_gap(ham, fixed, x, mode, opt.eigen); },
                         lo, hi, opt);
}

std::vector<SpectrumSlice> spectrum_scan(const ChainSpec& chain, double fixed,
                                         std::span<const double> controls, ScanMode mode, int k,
                                         const EigenOptions& opt) {
  const IsingHamiltonian ham(chain, make_fields(chain, 0.0, 0.0));
  std::vector<SpectrumSlice> out;
  for (double x : controls) {
    const auto h =
        mode == ScanMode::ScanH ? ham.with_controls(x, fixed) : ham.with_controls(fixed, x);
    out.push_back(lowest_spectrum(h, k, false, x, opt));
  }
  return out;
}

GapScaling fit_gap_scaling(double g, std::vector<GapScalingPoint> points) {
  GapScaling out;
  std::vector<double> xs, ys;
  for (auto& p : points) {
    if (!(p.gap_c >= 1e-13)) {
      p.excluded = true;
      out.warnings.push_back("gap at ell = " + std::to_string(p.ell) +
                             " below 1e-13; point excluded");
      continue;
    }
    xs.push_back(p.ell);
    ys.push_back(std::log(p.gap_c));
  }
  if (xs.size() < 2) throw NumericalError("gap scaling needs at least two usable lengths");
  const auto line = fit_line(xs, ys);
  out.base = g * std::exp(-line.slope);
  out.prefactor = std::exp(line.intercept);
  out.rms_residual = line.rms_residual;
  out.points = std::move(points);
  return out;
}

GapScaling gap_length_scaling(const CouplingKernel& kernel, double g, std::span<const int> ells,
                              const CrossingOptions& opt) {
  if (ells.size() < 4) throw ValidationError("gap scaling needs at least four lengths");
  std::vector<GapScalingPoint> points;
  for (int ell : ells) {
    const ChainSpec chain(ell, kernel);
    const double h0 = g0_breaking_field(chain);
    const auto fit = locate_avoided_crossing(chain, g, 0.0, 2.0 * h0, ScanMode::ScanH, opt);
    points.push_back({ell, fit.control_c, fit.gap_c, fit.slope, false});
  }
  return fit_gap_scaling(g, std::move(points));
}

// ---- long range ----

double alpha_min_root(double tol) {
  return bisect_root([](double a) { return zeta(a) - 2.0; }, 1.5, 2.0, tol);
}

double alpha_max_root(double tol) {
  return bisect_root([](double a) { return 2.0 * zeta(a) - zeta(a - 1.0); }, 2.2, 3.0, tol);
}

CriticalLength classical_breaking_length(double alpha, long ell_max) {
  if (!(alpha > 1.0)) throw DomainError("alpha must exceed 1");
  CriticalLength out;
  out.alpha = alpha;
  if (alpha >= alpha_max_root()) return out;
  // gap(ell) = -4 ell zeta + 4 (ell + 2) H_ell - 4 K_ell with running sums
  // H_ell = sum j^-a and K_ell = sum j^(1-a)
  const double z = zeta(alpha);
  double harmonic = 0.0;
  double k_sum = 0.0;
  for (long ell = 1; ell <= ell_max; ++ell) {
    const double term = std::pow(static_cast<double>(ell), -alpha);
    harmonic += term;
    k_sum += term * static_cast<double>(ell);
    const double gap = -4.0 * ell * z + 4.0 * (ell + 2.0) * harmonic - 4.0 * k_sum;
    if (gap < 0.0) {
      out.ell_c = ell - 1;
      return out;
    }
  }
  out.ell_c = ell_max;
  out.beyond_scan = true;
  return out;
}

PhaseBoundary lr_phase_boundaries(std::span<const double> alpha_grid, long ell_max) {
  PhaseBoundary out;
  out.alpha_min = alpha_min_root();
  out.alpha_max = alpha_max_root();
  for (double a : alpha_grid) out.lc_table.push_back(classical_breaking_length(a, ell_max));
  return out;
}

namespace {

std::vector<double> in_string_coupling(const ChainSpec& chain) {
  const int ell = chain.ell();
  std::vector<double> out(ell, 0.0);
  for (int j = 0; j < ell; ++j) {
    for (int k = 0; k < ell; ++k) {
      if (k != j) out[j] += chain.kernel()(std::abs(j - k));
    }
  }
  return out;
}

}  // namespace

std::vector<double> perturbative_terms_broken(const ChainSpec& chain, double g, double h) {
  require_static(chain, "perturbative_energies");
  const auto ht = in_string_coupling(chain);
  const auto heff = effective_field(chain);
  std::vector<double> out;
  for (int j = 0; j < chain.ell(); ++j) {
    const double den = ht[j] - heff[j] + h;
    if (std::abs(den) < 1e-12) {
      throw DegenerateLevelError("broken string: vanishing excitation energy at site " +
                                 std::to_string(j + 1));
    }
    out.push_back(-0.5 * g * g / den);
  }
  return out;
}

PerturbativeEnergies perturbative_energies(const ChainSpec& chain, double g, double h) {
  require_static(chain, "perturbative_energies");
  const auto ht = in_string_coupling(chain);
  const auto heff = effective_field(chain);
  double corr_s = 0.0;
  for (int j = 0; j < chain.ell(); ++j) {
    const double den = ht[j] + heff[j] - h;
    if (std::abs(den) < 1e-12) {
      throw DegenerateLevelError("string: vanishing excitation energy at site " +
                                 std::to_string(j + 1));
    }
    corr_s -= 0.5 * g * g / den;
  }
  const auto terms = perturbative_terms_broken(chain, g, h);
  return {g0_string_energy(chain, h) + corr_s,
          g0_broken_energy(chain, h) + std::accumulate(terms.begin(), terms.end(), 0.0)};
}

PotentialCurve static_potential_curve(const CouplingKernel& kernel, double g, double h,
                                      std::span<const int> ells, const EigenOptions& opt) {
  PotentialCurve out;
  std::vector<int> sorted(ells.begin(), ells.end());
  std::sort(sorted.begin(), sorted.end());
  bool broken_seen = false;
  for (int ell : sorted) {
    const ChainSpec chain(ell, kernel);
    const double shift = 4.0 * h + potential_offset(chain);
    PotentialPoint p;
    p.ell = ell;
    if (g == 0.0) {
      const double e_vac = g0_vacuum_energy(chain, h);
      const double vs = g0_string_energy(chain, h) - e_vac + shift;
      const double vbs = g0_broken_energy(chain, h) - e_vac + shift;
      // ties go to the string
      const bool string_ground = vs <= vbs;
      p.v_ground = string_ground ? vs : vbs;
      p.v_excited = string_ground ? vbs : vs;
      p.m_ground = string_ground ? -1.0 : 1.0;
      p.m_excited = -p.m_ground;
    } else {
      const auto fields = make_fields(chain, h, g);
      const IsingHamiltonian charges(chain, fields, Background::Charges);
      const IsingHamiltonian vacuum(chain, fields, Background::Vacuum);
      const auto s = lowest_spectrum(charges, 2, false, g, opt);
      const auto v = lowest_spectrum(vacuum, 1, false, g, opt);
      p.v_ground = s.energies[0] - v.energies[0] + shift;
      p.v_excited = s.energies[1] - v.energies[0] + shift;
      p.m_ground = s.magnetizations[0];
      p.m_excited = s.magnetizations[1];
    }
    if (!broken_seen) {
      if (p.m_ground < 0.0) {
        out.ell_c = ell;
      } else {
        broken_seen = true;
      }
    }
    out.points.push_back(p);
  }
  out.breaks = broken_seen;
  if (!broken_seen) out.ell_c.reset();
  return out;
}

}  // namespace stringbreak
