#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stringbreak/krylov.hpp"
#include "stringbreak/model.hpp"
#include "stringbreak/spectrum.hpp"

namespace stringbreak {

enum class RampMode { RampH, RampG };

// control(t) = start + t / tau, from start to final; samples are uniform in
// the control value.
struct RampSchedule {
  RampMode mode = RampMode::RampH;
  double fixed = 0.0;  // g for RampH, h for RampG
  double tau = 1.0;
  double final_value = 1.0;
  int samples = 201;
  double start = 0.0;

  double control(double t) const { return start + t / tau; }
  double duration() const { return (final_value - start) * tau; }
  void validate() const;
};

enum class Integrator { CommutatorFree4, Midpoint };

struct PropagatorConfig {
  double step_dt = 0.01;
  int krylov_dim = 20;
  double krylov_tol = 1e-12;
  double norm_tol = 1e-10;
  double convergence_tol = 1e-6;
  Integrator integrator = Integrator::CommutatorFree4;
};

struct ObservableOptions {
  int levels = 8;  // instantaneous eigenstates for P_n; 0 disables
  bool potential = true;
  bool bubbles = true;
  EigenOptions eigen;
};

struct RampSample {
  double t = 0.0;
  double control = 0.0;
  double m_z = 0.0;
  std::vector<double> profile;      // <sigma^z_j> on the string spins
  std::vector<double> populations;  // P_0 .. P_{levels-1}
  double p_beyond = 0.0;            // 1 - P_0 - P_1
  double correlator = 0.0;
  double energy = 0.0;
  double potential = 0.0;
  double p_m = 0.0;                 // running magnetization estimate
  std::vector<double> bubbles;      // P_d(r), r = 0..ell
  double norm_error = 0.0;
};

struct RampResult {
  RampSchedule schedule;
  PropagatorConfig config;
  std::vector<RampSample> samples;
  StateVector final_state;
  double max_norm_error = 0.0;
  long steps = 0;
  KrylovStats krylov;
};

// Per-basis-state tables over the string spins of a layout.
class StringObservables {
 public:
  StringObservables(int num_sites, std::vector<int> inner_bits);

  int length() const { return static_cast<int>(bits_.size()); }
  // (m_z, profile)
  std::pair<double, std::vector<double>> magnetization(std::span<const cplx> psi) const;
  double correlator(std::span<const cplx> psi) const;
  std::vector<double> bubble_histogram(std::span<const cplx> psi) const;
  int longest_up_run(std::size_t s) const { return run_[s]; }

 private:
  int num_sites_;
  std::vector<int> bits_;
  std::vector<unsigned char> run_;
};

StateVector ground_state(const IsingHamiltonian& ham, const EigenOptions& opt = {});

// |<psi_n|psi>|^2 for every eigenvector carried by the slice.
std::vector<double> instantaneous_populations(std::span<const cplx> psi, const SpectrumSlice& slice);

// E(t) - E0_vac + 4 h_now, both at the same controls.
double dynamical_potential(std::span<const cplx> psi, const IsingHamiltonian& charges,
                           const IsingHamiltonian& vacuum, const EigenOptions& opt = {});

RampResult propagate_ramp(const ChainSpec& chain, const FieldProfile& fields,
                          const RampSchedule& schedule, const PropagatorConfig& config,
                          const ObservableOptions& obs = {},
                          std::optional<StateVector> initial = std::nullopt);

RampResult propagate_ramp(const ChainSpec& chain, const RampSchedule& schedule,
                          const PropagatorConfig& config, const ObservableOptions& obs = {});

// exp(-pi gap^2 tau / (4 slope)) and its time scale 4 slope / (pi gap^2)
double landau_zener_probability(double gap_c, double slope, double tau);
double landau_zener_time(double gap_c, double slope);

double magnetization_population_estimate(double m_z0, double m_zf);

// Linear-interpolated zero crossings of values(control).
std::vector<double> sign_changes(std::span<const double> controls, std::span<const double> values);
double locate_sign_change(std::span<const double> controls, std::span<const double> values);
double locate_sign_change(const RampResult& result);

struct ScalingFit {
  double prefactor = 0.0;
  double exponent = 0.0;
  double rms_residual = 0.0;
  std::vector<std::pair<double, double>> used;  // (tau, h_sb)
  std::vector<std::string> warnings;
};

// ln(h_sb - h_c) = ln A + exponent ln tau
ScalingFit scaling_fit(std::span<const std::pair<double, double>> pairs, double h_c);

struct CollapsePoint {
  double tau = 0.0;
  double x = 0.0;  // (h - h_c) tau^(-exponent)
  double m_z = 0.0;
};
std::vector<CollapsePoint> collapse_curves(std::span<const RampResult> results, double h_c,
                                           double exponent);

struct ExtendedComparison {
  RampResult static_run;
  RampResult dynamical_run;
  double max_inner_difference = 0.0;
};

// Same ramp with static and dynamical exterior spins.
ExtendedComparison run_extended_chain(double tau, double g, double h_final,
                                      const PropagatorConfig& config, int samples = 201,
                                      int n_ext = 3, int ell = 5,
                                      const CouplingKernel& kernel = CouplingKernel::exponential(1.0));

}  // namespace stringbreak
