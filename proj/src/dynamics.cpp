#include "stringbreak/dynamics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>

#include "stringbreak/errors.hpp"
#include "stringbreak/fitting.hpp"

namespace stringbreak {

void RampSchedule::validate() const {
  if (!(tau > 0) || !std::isfinite(tau)) throw ValidationError("tau must be positive");
  if (!(final_value > start)) throw ValidationError("ramp final value must exceed its start");
  if (samples < 2) throw ValidationError("a ramp needs at least 2 samples");
}

StringObservables::StringObservables(int num_sites, std::vector<int> inner_bits)
    : num_sites_(num_sites), bits_(std::move(inner_bits)) {
  const std::size_t dim = std::size_t{1} << num_sites;
  run_.resize(dim);
  for (std::size_t s = 0; s < dim; ++s) {
    int best = 0, cur = 0;
    for (int b : bits_) {
      cur = ((s >> b) & 1u) ? cur + 1 : 0;
      best = std::max(best, cur);
    }
    run_[s] = static_cast<unsigned char>(best);
  }
}

std::pair<double, std::vector<double>> StringObservables::magnetization(
    std::span<const cplx> psi) const {
  std::vector<double> profile(bits_.size(), 0.0);
  for (std::size_t s = 0; s < psi.size(); ++s) {
    const double p = std::norm(psi[s]);
    if (p == 0.0) continue;
    for (std::size_t i = 0; i < bits_.size(); ++i) {
      profile[i] += ((s >> bits_[i]) & 1u) ? p : -p;
    }
  }
  double m = 0.0;
  for (double x : profile) m += x;
  return {m / static_cast<double>(bits_.size()), profile};
}

double StringObservables::correlator(std::span<const cplx> psi) const {
  std::uint64_t mask = 0;
  for (int b : bits_) mask |= std::uint64_t{1} << b;
  const double ell = static_cast<double>(bits_.size());
  double m2 = 0.0;
  for (std::size_t s = 0; s < psi.size(); ++s) {
    const double big_m = 2.0 * std::popcount(s & mask) - ell;
    m2 += std::norm(psi[s]) * big_m * big_m;
  }
  const auto [m, profile] = magnetization(psi);
  double sum = 0.0, sum_sq = 0.0;
  for (double x : profile) {
    sum += x;
    sum_sq += x * x;
  }
  return 0.5 * (m2 - ell) - 0.5 * (sum * sum - sum_sq);
}

std::vector<double> StringObservables::bubble_histogram(std::span<const cplx> psi) const {
  std::vector<double> hist(bits_.size() + 1, 0.0);
  for (std::size_t s = 0; s < psi.size(); ++s) hist[run_[s]] += std::norm(psi[s]);
  return hist;
}

StateVector ground_state(const IsingHamiltonian& ham, const EigenOptions& opt) {
  const auto eig = lowest_eigenpairs(ham, 1, opt);
  StateVector psi(ham.dim());
  for (std::size_t s = 0; s < psi.size(); ++s) psi[s] = eig.vectors(static_cast<Eigen::Index>(s), 0);
  return psi;
}

std::vector<double> instantaneous_populations(std::span<const cplx> psi, const SpectrumSlice& slice) {
  if (!slice.has_vectors()) throw ValidationError("spectrum slice carries no eigenvectors");
  if (static_cast<std::size_t>(slice.eigenvectors.rows()) != psi.size()) {
    throw ValidationError("eigenvector dimension does not match the state");
  }
  std::vector<double> out;
  for (Eigen::Index n = 0; n < slice.eigenvectors.cols(); ++n) {
    cplx overlap{};
    for (std::size_t s = 0; s < psi.size(); ++s) {
      overlap += slice.eigenvectors(static_cast<Eigen::Index>(s), n) * psi[s];
    }
    out.push_back(std::norm(overlap));
  }
  return out;
}

double dynamical_potential(std::span<const cplx> psi, const IsingHamiltonian& charges,
                           const IsingHamiltonian& vacuum, const EigenOptions& opt) {
  if (charges.h() != vacuum.h() || charges.g() != vacuum.g()) {
    throw ValidationError("charge and vacuum operators must share (h, g)");
  }
  const double e_vac = lowest_eigenpairs(vacuum, 1, opt).values[0];
  return charges.expectation(psi) - e_vac + 4.0 * charges.h();
}

namespace {

IsingHamiltonian at_control(const IsingHamiltonian& base, const RampSchedule& sch, double p) {
  return sch.mode == RampMode::RampH ? base.with_controls(p, sch.fixed)
                                     : base.with_controls(sch.fixed, p);
}

double state_norm(const StateVector& psi) {
  double n = 0.0;
  for (const auto& a : psi) n += std::norm(a);
  return std::sqrt(n);
}

}  // namespace

RampResult propagate_ramp(const ChainSpec& chain, const FieldProfile& fields,
                          const RampSchedule& schedule, const PropagatorConfig& config,
                          const ObservableOptions& obs, std::optional<StateVector> initial) {
  schedule.validate();
  if (!(config.step_dt > 0)) throw ValidationError("step_dt must be positive");
  if (!(config.norm_tol > 0)) throw ValidationError("norm_tol must be positive");

  const IsingHamiltonian base(chain, fields, Background::Charges);
  std::optional<IsingHamiltonian> vacuum_base;
  if (obs.potential) vacuum_base.emplace(chain, fields, Background::Vacuum);
  const StringObservables strings(chain.num_dynamical(), chain.inner_bits());
  KrylovExponential expo(config.krylov_dim, config.krylov_tol);

  RampResult result;
  result.schedule = schedule;
  result.config = config;
  StateVector psi;
  if (initial) {
    psi = std::move(*initial);
    if (psi.size() != base.dim()) throw ValidationError("initial state has the wrong dimension");
  } else {
    psi = ground_state(at_control(base, schedule, schedule.control(0.0)), obs.eigen);
  }

  const double total = schedule.duration();
  const int levels = std::min<int>(obs.levels, static_cast<int>(base.dim()));
  double m0 = 0.0;

  auto record = [&](double t) {
    RampSample s;
    s.t = t;
    s.control = schedule.control(t);
    const auto ham = at_control(base, schedule, s.control);
    std::tie(s.m_z, s.profile) = strings.magnetization(psi);
    s.correlator = strings.correlator(psi);
    s.energy = ham.expectation(psi);
    if (levels > 0) {
      const auto slice = lowest_spectrum(ham, levels, true, s.control, obs.eigen);
      s.populations = instantaneous_populations(psi, slice);
      s.p_beyond = 1.0 - s.populations[0] - (levels > 1 ? s.populations[1] : 0.0);
    }
    if (vacuum_base) {
      s.potential =
          dynamical_potential(psi, ham, at_control(*vacuum_base, schedule, s.control), obs.eigen);
    }
    if (obs.bubbles) s.bubbles = strings.bubble_histogram(psi);
    if (result.samples.empty()) m0 = s.m_z;
    s.p_m = m0 != 0.0 ? magnetization_population_estimate(m0, s.m_z)
                      : std::numeric_limits<double>::quiet_NaN();
    s.norm_error = std::abs(state_norm(psi) - 1.0);
    result.samples.push_back(std::move(s));
  };

  record(0.0);
  const int n_samples = schedule.samples;
  double t_prev = 0.0;
  for (int k = 1; k < n_samples; ++k) {
    const double t_next = total * k / (n_samples - 1);
    const double span = t_next - t_prev;
    const long n_sub = std::max<long>(1, static_cast<long>(std::ceil(span / config.step_dt - 1e-9)));
    const double dt = span / static_cast<double>(n_sub);
    for (long i = 0; i < n_sub; ++i) {
      const double t = t_prev + dt * static_cast<double>(i);
      if (config.integrator == Integrator::Midpoint) {
        expo.apply(at_control(base, schedule, schedule.control(t + 0.5 * dt)), dt, psi);
      } else {
        // fourth-order commutator-free: two exponentials of H at averaged
        // controls (H is affine in the control)
        const double c = std::sqrt(3.0) / 6.0;
        const double big = 0.25 + c;
        const double small = 0.25 - c;
        const double p1 = schedule.control(t + (0.5 - c) * dt);
        const double p2 = schedule.control(t + (0.5 + c) * dt);
        expo.apply(at_control(base, schedule, 2.0 * (big * p1 + small * p2)), 0.5 * dt, psi);
        expo.apply(at_control(base, schedule, 2.0 * (small * p1 + big * p2)), 0.5 * dt, psi);
      }
      ++result.steps;
      const double drift = std::abs(state_norm(psi) - 1.0);
      result.max_norm_error = std::max(result.max_norm_error, drift);
      if (drift > config.norm_tol) {
        throw PropagationError("norm drift " + std::to_string(drift) + " exceeds norm_tol at t = " +
                               std::to_string(t + dt) + "; reduce step_dt");
      }
    }
    t_prev = t_next;
    record(t_next);
  }
  result.final_state = std::move(psi);
  result.krylov = expo.stats();
  return result;
}

RampResult propagate_ramp(const ChainSpec& chain, const RampSchedule& schedule,
                          const PropagatorConfig& config, const ObservableOptions& obs) {
  return propagate_ramp(chain, make_fields(chain, 0.0, 0.0), schedule, config, obs);
}

double landau_zener_probability(double gap_c, double slope, double tau) {
  if (!(slope > 0)) throw ValidationError("Landau-Zener slope must be positive");
  return std::exp(-std::numbers::pi * gap_c * gap_c * tau / (4.0 * slope));
}

double landau_zener_time(double gap_c, double slope) {
  if (!(slope > 0) || !(gap_c > 0)) throw ValidationError("need positive gap and slope");
  return 4.0 * slope / (std::numbers::pi * gap_c * gap_c);
}

double magnetization_population_estimate(double m_z0, double m_zf) {
  if (m_z0 == 0.0) throw NumericalError("P_m undefined for vanishing initial magnetization");
  return (m_z0 + m_zf) / (2.0 * m_z0);
}

std::vector<double> sign_changes(std::span<const double> controls, std::span<const double> values) {
  if (controls.size() != values.size()) throw ValidationError("sign_changes: size mismatch");
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    const double a = values[i], b = values[i + 1];
    if (a == 0.0) {
      if (out.empty() || out.back() != controls[i]) out.push_back(controls[i]);
    } else if ((a < 0 && b > 0) || (a > 0 && b < 0)) {
      out.push_back(controls[i] + (controls[i + 1] - controls[i]) * a / (a - b));
    }
  }
  if (!values.empty() && values.back() == 0.0 &&
      (out.empty() || out.back() != controls.back())) {
    out.push_back(controls.back());
  }
  return out;
}

double locate_sign_change(std::span<const double> controls, std::span<const double> values) {
  const auto all = sign_changes(controls, values);
  if (all.empty()) throw NotFoundError("magnetization never changes sign during the ramp");
  return all.front();
}

double locate_sign_change(const RampResult& result) {
  std::vector<double> c, m;
  for (const auto& s : result.samples) {
    c.push_back(s.control);
    m.push_back(s.m_z);
  }
  return locate_sign_change(c, m);
}

ScalingFit scaling_fit(std::span<const std::pair<double, double>> pairs, double h_c) {
  if (pairs.size() < 5) throw ValidationError("scaling fit needs at least five tau values");
  ScalingFit out;
  std::vector<double> x, y;
  for (const auto& [tau, h_sb] : pairs) {
    if (!(h_sb - h_c > 0) || !(tau > 0)) {
      out.warnings.push_back("tau = " + std::to_string(tau) + ": h_sb - h_c <= 0, excluded");
      continue;
    }
    x.push_back(std::log(tau));
    y.push_back(std::log(h_sb - h_c));
    out.used.emplace_back(tau, h_sb);
  }
  if (x.size() < 2) throw NumericalError("scaling fit: fewer than two usable points");
  const auto line = fit_line(x, y);
  out.exponent = line.slope;
  out.prefactor = std::exp(line.intercept);
  out.rms_residual = line.rms_residual;
  return out;
}

std::vector<CollapsePoint> collapse_curves(std::span<const RampResult> results, double h_c,
                                           double exponent) {
  std::vector<CollapsePoint> out;
  for (const auto& r : results) {
    if (r.schedule.mode != RampMode::RampH) throw ValidationError("collapse needs h ramps");
    const double scale = std::pow(r.schedule.tau, -exponent);
    for (const auto& s : r.samples) out.push_back({r.schedule.tau, (s.control - h_c) * scale, s.m_z});
  }
  return out;
}

ExtendedComparison run_extended_chain(double tau, double g, double h_final,
                                      const PropagatorConfig& config, int samples, int n_ext,
                                      int ell, const CouplingKernel& kernel) {
  const ChainSpec fixed_ext(ell, kernel);
  const ChainSpec dyn_ext(ell, kernel, DynamicalExternal{n_ext});
  RampSchedule sch;
  sch.mode = RampMode::RampH;
  sch.fixed = g;
  sch.tau = tau;
  sch.final_value = h_final;
  sch.samples = samples;
  ObservableOptions obs;
  obs.levels = 0;
  obs.potential = false;
  obs.bubbles = false;
  ExtendedComparison out;
  out.static_run = propagate_ramp(fixed_ext, sch, config, obs);
  out.dynamical_run = propagate_ramp(dyn_ext, sch, config, obs);
  for (std::size_t k = 0; k < out.static_run.samples.size(); ++k) {
    const auto& a = out.static_run.samples[k].profile;
    const auto& b = out.dynamical_run.samples[k].profile;
    for (std::size_t j = 0; j < a.size(); ++j) {
      out.max_inner_difference = std::max(out.max_inner_difference, std::abs(a[j] - b[j]));
    }
  }
  return out;
}

}  // namespace stringbreak
