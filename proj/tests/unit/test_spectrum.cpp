#include <chrono>
#include <cmath>

#include <Eigen/Dense>

#include "doctest.h"
#include "stringbreak/errors.hpp"
#include "stringbreak/model.hpp"
#include "stringbreak/spectrum.hpp"

using namespace stringbreak;

namespace {

Eigen::VectorXd dense_values(const IsingHamiltonian& ham) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> s(ham.dense(), Eigen::EigenvaluesOnly);
  return s.eigenvalues();
}

}  // namespace

TEST_CASE("g = 0 spectrum is the sorted diagonal") {
  const ChainSpec chain(6, CouplingKernel::exponential(1.0));
  const IsingHamiltonian ham(chain, make_fields(chain, 0.2, 0.0));
  const auto slice = lowest_spectrum(ham, 64, true);
  auto diag = ham.diag();
  std::sort(diag.begin(), diag.end());
  for (int i = 0; i < 64; ++i) CHECK(slice.energies[i] == diag[i]);
  // below h_c the string (all down) is the ground state
  CHECK(slice.magnetizations[0] == -1.0);
}

TEST_CASE("dense solver small systems") {
  for (int ell = 1; ell <= 8; ++ell) {
    const ChainSpec chain(ell, CouplingKernel::exponential(1.0));
    const IsingHamiltonian ham(chain, make_fields(chain, 0.25, 1.2));
    const int k = std::min<int>(10, static_cast<int>(ham.dim()));
    const auto slice = lowest_spectrum(ham, k, true);
    const auto oracle = dense_values(ham);
    for (int i = 0; i < k; ++i) {
      CHECK(std::abs(slice.energies[i] - oracle[i]) < 1e-10);
      CHECK(slice.residuals[i] < 1e-8);
      CHECK(std::abs(slice.eigenvectors.col(i).norm() - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("Lanczos agrees with dense diagonalization, 10 levels") {
  struct Case {
    int ell;
    double h, g;
    bool power;
  };
  for (const Case c : {Case{9, 0.134, 1.2, false}, Case{10, 0.0, 0.5, false},
                       Case{10, 0.0, 0.8, true}, Case{12, 0.11, 1.2, false},
                       Case{12, 0.0, 0.3, false}}) {
    const auto kernel = c.power ? CouplingKernel::power_law(2.2) : CouplingKernel::exponential(1.0);
    const ChainSpec chain(c.ell, kernel);
    const IsingHamiltonian ham(chain, make_fields(chain, c.h, c.g));
    EigenOptions opt;
    opt.dense_max_sites = 0;
    const auto lz = lanczos_eigenpairs(ham, 10, opt);
    const auto oracle = dense_values(ham);
    for (int i = 0; i < 10; ++i) {
      CHECK(std::abs(lz.values[i] - oracle[i]) < 1e-9);
      CHECK(lz.residuals[i] < 1e-8);
    }
  }
}

TEST_CASE("Lanczos recovers levels missing from the start vector's sector") {
  // A reflection-symmetric start keeps the Krylov space (nearly) inside the
  // even sector; the deflated probe run has to supply the odd levels.
  const int ell = 10;
  const ChainSpec chain(ell, CouplingKernel::exponential(1.0));
  const IsingHamiltonian ham(chain, make_fields(chain, 0.0, 1.5));
  EigenOptions opt;
  opt.dense_max_sites = 0;
  opt.start.assign(ham.dim(), 0.0);
  for (std::size_t s = 0; s < ham.dim(); ++s) {
    opt.start[s] = 1.0 + 0.1 * static_cast<double>(s % 7) +
                   0.1 * static_cast<double>(reflect_basis_index(s, ell) % 7);
  }
  const auto lz = lanczos_eigenpairs(ham, 8, opt);
  const auto oracle = dense_values(ham);
  for (int i = 0; i < 8; ++i) CHECK(std::abs(lz.values[i] - oracle[i]) < 1e-9);
}

TEST_CASE("phase convention and determinism") {
  const ChainSpec chain(10, CouplingKernel::exponential(1.0));
  const IsingHamiltonian ham(chain, make_fields(chain, 0.13, 1.2));
  EigenOptions opt;
  opt.dense_max_sites = 0;
  const auto a = lanczos_eigenpairs(ham, 3, opt);
  const auto b = lanczos_eigenpairs(ham, 3, opt);
  for (int i = 0; i < 3; ++i) {
    CHECK(a.values[i] == b.values[i]);
    Eigen::Index idx;
    a.vectors.col(i).cwiseAbs().maxCoeff(&idx);
    CHECK(a.vectors(idx, i) > 0.0);
  }
  CHECK((a.vectors - b.vectors).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("invalid level count") {
  const ChainSpec chain(3, CouplingKernel::exponential(1.0));
  const IsingHamiltonian ham(chain, make_fields(chain, 0.0, 1.0));
  CHECK_THROWS_AS(lowest_spectrum(ham, 0, false), ValidationError);
  CHECK_THROWS_AS(lowest_spectrum(ham, 9, false), ValidationError);
}
