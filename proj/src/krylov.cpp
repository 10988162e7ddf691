#include "stringbreak/krylov.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "stringbreak/errors.hpp"

namespace stringbreak {

KrylovExponential::KrylovExponential(int max_dim, double tol, int max_splits)
    : max_dim_(max_dim), tol_(tol), max_splits_(max_splits) {
  if (max_dim < 2) throw ValidationError("krylov_dim must be at least 2");
  if (!(tol > 0)) throw ValidationError("Krylov tolerance must be positive");
}

namespace {

// exp(-i dt T) e_1 for the leading j x j block of the tridiagonal (alpha, beta)
Eigen::VectorXcd small_exponential(const std::vector<double>& alpha,
                                   const std::vector<double>& beta, int j, double dt) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(j, j);
  for (int i = 0; i < j; ++i) {
    t(i, i) = alpha[i];
    if (i + 1 < j) t(i, i + 1) = t(i + 1, i) = beta[i];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
  const Eigen::MatrixXd& q = es.eigenvectors();
  Eigen::VectorXcd phase(j);
  for (int i = 0; i < j; ++i) {
    phase[i] = std::polar(q(0, i), -dt * es.eigenvalues()[i]);
  }
  return q.cast<cplx>() * phase;
}

}  // namespace

bool KrylovExponential::try_step(const IsingHamiltonian& ham, double dt, StateVector& psi) {
  const std::size_t n = psi.size();
  double norm = 0.0;
  for (const auto& a : psi) norm += std::norm(a);
  norm = std::sqrt(norm);
  if (norm == 0.0) return true;

  const int m = static_cast<int>(std::min<std::size_t>(max_dim_, n));
  if (basis_.size() < static_cast<std::size_t>(m)) basis_.resize(m);
  work_.resize(n);
  std::vector<double> alpha, beta;

  basis_[0].resize(n);
  for (std::size_t s = 0; s < n; ++s) basis_[0][s] = psi[s] / norm;

  Eigen::VectorXcd coeffs;
  double error = 0.0;
  int used = 0;
  for (int j = 0; j < m; ++j) {
    ham.apply(basis_[j], work_);
    ++stats_.matvecs;
    cplx a{};
    for (std::size_t s = 0; s < n; ++s) a += std::conj(basis_[j][s]) * work_[s];
    alpha.push_back(a.real());
    for (std::size_t s = 0; s < n; ++s) {
      work_[s] -= a.real() * basis_[j][s];
      if (j > 0) work_[s] -= beta[j - 1] * basis_[j - 1][s];
    }
    double b = 0.0;
    for (const auto& x : work_) b += std::norm(x);
    b = std::sqrt(b);
    used = j + 1;
    coeffs = small_exponential(alpha, beta, used, dt);
    error = b * std::abs(coeffs[used - 1]);
    if (b < 1e-14 || error < tol_) break;
    if (j + 1 == m) break;
    beta.push_back(b);
    basis_[j + 1].resize(n);
    for (std::size_t s = 0; s < n; ++s) basis_[j + 1][s] = work_[s] / b;
  }
  if (error >= tol_ && used == m && static_cast<std::size_t>(m) < n) return false;

  stats_.max_error_estimate = std::max(stats_.max_error_estimate, error);
  std::fill(psi.begin(), psi.end(), cplx{});
  for (int j = 0; j < used; ++j) {
    const cplx c = norm * coeffs[j];
    for (std::size_t s = 0; s < n; ++s) psi[s] += c * basis_[j][s];
  }
  return true;
}

void KrylovExponential::step_recursive(const IsingHamiltonian& ham, double dt, StateVector& psi,
                                       int depth) {
  ++stats_.substeps;
  // try_step leaves psi untouched when it fails
  if (try_step(ham, dt, psi)) return;
  if (depth >= max_splits_) {
    throw PropagationError("Krylov exponential did not reach tolerance " + std::to_string(tol_) +
                           " with dimension " + std::to_string(max_dim_));
  }
  step_recursive(ham, 0.5 * dt, psi, depth + 1);
  step_recursive(ham, 0.5 * dt, psi, depth + 1);
}

void KrylovExponential::apply(const IsingHamiltonian& ham, double dt, StateVector& psi) {
  if (psi.size() != ham.dim()) throw ValidationError("state dimension does not match operator");
  step_recursive(ham, dt, psi, 0);
}

}  // namespace stringbreak
