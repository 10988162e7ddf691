#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stringbreak/model.hpp"
#include "stringbreak/spectrum.hpp"

namespace stringbreak {

// ---- g = 0 closed forms (static layout) ----

// Classical energies of the string (all dynamical spins down), the broken
// string (all up) and the vacuum reference (all up, vacuum fields).
double g0_string_energy(const ChainSpec& chain, double h);
double g0_broken_energy(const ChainSpec& chain, double h);
double g0_vacuum_energy(const ChainSpec& chain, double h);

// E_bs - E_s from the kernel closed form.
double g0_energy_gap(const ChainSpec& chain, double h);

// Root of g0_energy_gap in h. Exponential kernel only.
double g0_breaking_field(const ChainSpec& chain);

struct G0Coefficients {
  double a_s = 0.0, b_s = 0.0, a_bs = 0.0, b_bs = 0.0;
};
G0Coefficients g0_potential_coefficients(const CouplingKernel& kernel);

struct G0Potentials {
  double v_s = 0.0;
  double v_bs = 0.0;
};
G0Potentials g0_potentials(const ChainSpec& chain, double h);

// Shift that turns E - E_vac + 4h into the string / broken-string potentials
// above: 4 (sum_{d>=1} J(d) + sum_{d>=ell+2} J(d)).
double potential_offset(const ChainSpec& chain);

// ---- classical configurations ----

// Compact: 2n(1/(e^{1/xi}-1) + h) - 2 sum_{a<b} e^{-(x_b-x_a)/xi}, exponential kernel only.
enum class EnergyConvention { FirstPrinciples, Compact };

// Energy of the configuration with down spins exactly at down_sites (0 and
// ell + 1 included), relative to the fully polarized up chain.
double config_energy(const ChainSpec& chain, double h, std::span<const long> down_sites,
                     EnergyConvention convention = EnergyConvention::FirstPrinciples);

// Down-site list of a bitstring over the ell string spins (bit set = up).
std::vector<long> down_sites_of(Bitstring s);
// {0, 1, ..., n_down, ell + 1}
std::vector<long> edge_block(int ell, int n_down);
bool is_edge_block(Bitstring s, int n_down);

struct SectorMinimum {
  Bitstring config;
  double energy = 0.0;
  bool edge_block = false;
};
SectorMinimum enumerate_sector_minimum(const ChainSpec& chain, double h, int n_down,
                                       EnergyConvention convention = EnergyConvention::FirstPrinciples);

// r -> h_c(r, ell) for r = 1..ell; index r - 1 holds bubble size r.
std::vector<double> bubble_crossing_fields(
    const ChainSpec& chain, EnergyConvention convention = EnergyConvention::FirstPrinciples);

// ---- spectra and avoided crossings ----

enum class ScanMode { ScanH, ScanG };

struct CrossingOptions {
  int grid_points = 201;
  double golden_tol = 1e-8;
  // fit window half-width in units of gap_c / slope
  double window = 1.0;
  int fit_points = 41;
  EigenOptions eigen;
};

struct CrossingFit {
  double control_c = 0.0;
  double gap_c = 0.0;
  double slope = 0.0;
  double residual = 0.0;  // rms of the window fit
  double gap_min = 0.0;   // E1 - E0 at the golden-section minimum
  double x_min = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
};

// Gap minimization and two-level fit for any gap(x).
CrossingFit fit_gap_minimum(const std::function<double(double)>& gap, double lo, double hi,
                            const CrossingOptions& opt = {});

// E1 - E0 at one control value.
double two_level_gap(const IsingHamiltonian& ham, double fixed, double x, ScanMode mode,
                     const EigenOptions& opt = {});

CrossingFit locate_avoided_crossing(const ChainSpec& chain, double fixed, double lo, double hi,
                                    ScanMode mode, const CrossingOptions& opt = {});

std::vector<SpectrumSlice> spectrum_scan(const ChainSpec& chain, double fixed,
                                         std::span<const double> controls, ScanMode mode, int k,
                                         const EigenOptions& opt = {});

struct GapScalingPoint {
  int ell = 0;
  double h_c = 0.0;
  double gap_c = 0.0;
  double slope = 0.0;
  bool excluded = false;
};

struct GapScaling {
  double base = 0.0;       // b in gap ~ prefactor (g / b)^ell
  double prefactor = 0.0;
  double rms_residual = 0.0;
  std::vector<GapScalingPoint> points;
  std::vector<std::string> warnings;
};

GapScaling fit_gap_scaling(double g, std::vector<GapScalingPoint> points);
// Scan h in [0, 2 h_c(ell, g = 0)] for each length. Exponential kernel.
GapScaling gap_length_scaling(const CouplingKernel& kernel, double g, std::span<const int> ells,
                              const CrossingOptions& opt = {});

// ---- long-range couplings ----

double alpha_min_root(double tol = 1e-12);  // zeta(a) = 2
double alpha_max_root(double tol = 1e-12);  // 2 zeta(a) = zeta(a - 1)

struct CriticalLength {
  double alpha = 0.0;
  // largest ell with E_bs - E_s >= 0 at g = 0, h = 0; nullopt means no finite ell
  std::optional<long> ell_c;
  bool beyond_scan = false;  // alpha < alpha_max but no breaking up to ell_max
};

CriticalLength classical_breaking_length(double alpha, long ell_max);

struct PhaseBoundary {
  double alpha_min = 0.0;
  double alpha_max = 0.0;
  std::vector<CriticalLength> lc_table;
};

PhaseBoundary lr_phase_boundaries(std::span<const double> alpha_grid, long ell_max);

struct PerturbativeEnergies {
  double e_string = 0.0;
  double e_broken = 0.0;
};

// Second order in g around the classical string and broken string.
PerturbativeEnergies perturbative_energies(const ChainSpec& chain, double g, double h = 0.0);

// One-site contributions, so the edge-spin estimate can be inspected.
std::vector<double> perturbative_terms_broken(const ChainSpec& chain, double g, double h = 0.0);

struct PotentialPoint {
  int ell = 0;
  double v_ground = 0.0;
  double v_excited = 0.0;
  double m_ground = 0.0;
  double m_excited = 0.0;
};

struct PotentialCurve {
  std::vector<PotentialPoint> points;
  // last ell (ascending) with a string-like ground state before the first
  // broken one; nullopt if the list starts broken or never breaks
  std::optional<int> ell_c;
  bool breaks = false;
};

// V = E_level - E0_vac + 4h + potential_offset for each ell. At g = 0 the two
// levels are the string and broken string from the closed forms.
PotentialCurve static_potential_curve(const CouplingKernel& kernel, double g, double h,
                                      std::span<const int> ells, const EigenOptions& opt = {});

}  // namespace stringbreak
