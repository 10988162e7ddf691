#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stringbreak/model.hpp"

namespace stringbreak {

struct EigenOptions {
  // Hilbert spaces with at most this many sites go to the dense solver.
  int dense_max_sites = 8;
  // Lanczos residual estimate target, relative to max(1, |E|).
  double tol = 1e-10;
  // Every returned pair must satisfy ||Hv - Ev|| <= residual_bound.
  double residual_bound = 1e-8;
  int krylov_dim = 0;  // 0: chosen from k
  int max_restarts = 400;
  std::uint64_t seed = 0x5eedu;
  // Extra deflated run that looks for missed copies of degenerate levels.
  bool verify_degeneracy = true;
  // Optional warm start (for example the ground state at a nearby control).
  std::vector<double> start;
};

struct EigenResult {
  std::vector<double> values;
  Eigen::MatrixXd vectors;  // dim x k, real, phase-fixed
  std::vector<double> residuals;
  int matvecs = 0;
  std::string method;
};

EigenResult dense_eigenpairs(const IsingHamiltonian& ham, int k);
EigenResult lanczos_eigenpairs(const IsingHamiltonian& ham, int k, const EigenOptions& opt = {});
// Dispatches between the g = 0 shortcut, dense and Lanczos.
EigenResult lowest_eigenpairs(const IsingHamiltonian& ham, int k, const EigenOptions& opt = {});

// Largest-magnitude amplitude made positive (first one on ties).
void fix_phase(Eigen::Ref<Eigen::VectorXd> v);

struct SpectrumSlice {
  double control = 0.0;
  std::vector<double> energies;
  std::vector<double> magnetizations;  // <m_z> of each eigenstate
  std::vector<double> residuals;
  Eigen::MatrixXd eigenvectors;  // empty unless requested
  bool has_vectors() const { return eigenvectors.cols() > 0; }
};

SpectrumSlice lowest_spectrum(const IsingHamiltonian& ham, int k, bool want_vectors,
                              double control = 0.0, const EigenOptions& opt = {});

// (1/n) sum_s |v_s|^2 M(s) for a real or complex amplitude vector.
double state_magnetization(const IsingHamiltonian& ham, const Eigen::VectorXd& v);

}  // namespace stringbreak
