#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "stringbreak/krylov.hpp"
#include "stringbreak/model.hpp"

using namespace stringbreak;

namespace {

StateVector random_state(std::size_t dim, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  StateVector v(dim);
  double norm = 0.0;
  for (auto& c : v) {
    c = {n(rng), n(rng)};
    norm += std::norm(c);
  }
  for (auto& c : v) c /= std::sqrt(norm);
  return v;
}

// exp(-i dt H) psi from the full eigendecomposition
StateVector dense_exp(const IsingHamiltonian& ham, double dt, const StateVector& psi) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ham.dense());
  const Eigen::MatrixXcd v = es.eigenvectors().cast<cplx>();
  Eigen::VectorXcd x = Eigen::Map<const Eigen::VectorXcd>(psi.data(), psi.size());
  Eigen::VectorXcd c = v.adjoint() * x;
  for (Eigen::Index k = 0; k < c.size(); ++k) c[k] *= std::exp(cplx(0, -dt * es.eigenvalues()[k]));
  const Eigen::VectorXcd y = v * c;
  return StateVector(y.data(), y.data() + y.size());
}

double distance(const StateVector& a, const StateVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::norm(a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("Krylov exponential matches the dense exponential") {
  const ChainSpec chain(6, CouplingKernel::exponential(1.0));
  const IsingHamiltonian ham(chain, make_fields(chain, 0.2, 1.2));
  const auto psi0 = random_state(ham.dim(), 7);

  for (double dt : {0.01, 0.3, 2.0}) {
    auto psi = psi0;
    KrylovExponential k;
    k.apply(ham, dt, psi);
    CHECK(distance(psi, dense_exp(ham, dt, psi0)) < 1e-10);
    double norm = 0.0;
    for (auto c : psi) norm += std::norm(c);
    CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-12);
  }
}

TEST_CASE("Krylov exponential splits long steps when the subspace is too small") {
  const ChainSpec chain(6, CouplingKernel::power_law(2.2));
  const IsingHamiltonian ham(chain, make_fields(chain, 0.0, 1.0));
  const auto psi0 = random_state(ham.dim(), 11);
  auto psi = psi0;
  KrylovExponential k(6, 1e-12, 12);
  k.apply(ham, 3.0, psi);
  CHECK(k.stats().substeps > 1);
  CHECK(distance(psi, dense_exp(ham, 3.0, psi0)) < 1e-9);
}

TEST_CASE("Krylov exponential on an eigenvector only changes the phase") {
  const ChainSpec chain(4, CouplingKernel::exponential(1.0));
  const IsingHamiltonian ham(chain, make_fields(chain, 0.1, 0.7));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ham.dense());
  StateVector psi(ham.dim());
  for (std::size_t i = 0; i < psi.size(); ++i) psi[i] = es.eigenvectors()(i, 0);
  const auto start = psi;
  KrylovExponential k;
  k.apply(ham, 1.7, psi);
  const cplx phase = std::exp(cplx(0, -1.7 * es.eigenvalues()[0]));
  for (std::size_t i = 0; i < psi.size(); ++i) CHECK(std::abs(psi[i] - phase * start[i]) < 1e-12);
}
