#pragma once

#include <vector>

#include "stringbreak/model.hpp"

namespace stringbreak {

struct KrylovStats {
  long matvecs = 0;
  long substeps = 0;
  double max_error_estimate = 0.0;
};

// psi <- exp(-i dt H) psi by Lanczos on the current state. The subspace grows
// until beta_j |c_j| drops below tol (c = exp(-i dt T) e1) or max_dim is hit;
// in the latter case the step is split in halves, at most max_splits deep.
class KrylovExponential {
 public:
  KrylovExponential(int max_dim = 20, double tol = 1e-12, int max_splits = 12);

  void apply(const IsingHamiltonian& ham, double dt, StateVector& psi);
  const KrylovStats& stats() const { return stats_; }

 private:
  bool try_step(const IsingHamiltonian& ham, double dt, StateVector& psi);
  void step_recursive(const IsingHamiltonian& ham, double dt, StateVector& psi, int depth);

  int max_dim_;
  double tol_;
  int max_splits_;
  std::vector<StateVector> basis_;
  StateVector work_;
  KrylovStats stats_;
};

}  // namespace stringbreak
