#include "stringbreak/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <span>

#include "stringbreak/errors.hpp"

namespace stringbreak {

void fix_phase(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index best = 0;
  double best_abs = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    // strict comparison with a little slack so ties resolve to the lowest index
    if (std::abs(v[i]) > best_abs * (1.0 + 1e-12)) {
      best_abs = std::abs(v[i]);
      best = i;
    }
  }
  if (v[best] < 0) v = -v;
}

namespace {

void apply_real(const IsingHamiltonian& ham, const Eigen::VectorXd& x, Eigen::VectorXd& y) {
  y.resize(x.size());
  ham.apply(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
            std::span<double>(y.data(), static_cast<std::size_t>(y.size())));
}

double true_residual(const IsingHamiltonian& ham, const Eigen::VectorXd& v, double e) {
  Eigen::VectorXd hv;
  apply_real(ham, v, hv);
  return (hv - e * v).norm();
}

void check_k(const IsingHamiltonian& ham, int k) {
  if (k < 1 || static_cast<std::size_t>(k) > ham.dim()) {
    throw ValidationError("requested " + std::to_string(k) + " levels from a space of dimension " +
                          std::to_string(ham.dim()));
  }
}

// Project w onto the complement of the columns of q, two passes.
void orthogonalize(const Eigen::MatrixXd& q, Eigen::Index cols, Eigen::VectorXd& w,
                   Eigen::VectorXd* coeffs = nullptr) {
  if (cols == 0) return;
  Eigen::VectorXd c = q.leftCols(cols).transpose() * w;
  w.noalias() -= q.leftCols(cols) * c;
  const Eigen::VectorXd c2 = q.leftCols(cols).transpose() * w;
  w.noalias() -= q.leftCols(cols) * c2;
  if (coeffs) *coeffs = c + c2;
}

Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

struct LanczosRun {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  std::vector<double> residuals;
};

// Thick-restart Lanczos with full reorthogonalization in the complement of
// `locked`. Returns the `want` lowest Ritz pairs.
LanczosRun thick_restart(const IsingHamiltonian& ham, int want, const Eigen::MatrixXd& locked,
                         Eigen::VectorXd start, const EigenOptions& opt, std::mt19937_64& rng,
                         int& matvecs) {
  const auto n = static_cast<Eigen::Index>(ham.dim());
  const Eigen::Index free_dim = n - locked.cols();
  Eigen::Index m = opt.krylov_dim > 0 ? opt.krylov_dim : std::max<Eigen::Index>(2 * want + 20, 40);
  m = std::min(m, free_dim);
  if (want > m) throw ValidationError("Lanczos: more levels requested than the Krylov space holds");

  Eigen::MatrixXd v(n, m + 1);
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd w(n);
  Eigen::VectorXd coeffs;

  auto fresh_direction = [&](Eigen::Index cols) {
    for (int attempt = 0; attempt < 5; ++attempt) {
      Eigen::VectorXd r = random_vector(n, rng);
      orthogonalize(locked, locked.cols(), r);
      orthogonalize(v, cols, r);
      const double nr = r.norm();
      if (nr > 1e-8) return Eigen::VectorXd(r / nr);
    }
    throw SolverError("Lanczos: could not extend the Krylov basis");
  };

  if (start.size() != n) start = random_vector(n, rng);
  orthogonalize(locked, locked.cols(), start);
  if (start.norm() < 1e-10) start = fresh_direction(0);
  v.col(0) = start / start.norm();

  Eigen::Index kept = 0;
  double last_beta = 0.0;
  const int restart_limit = std::max(1, opt.max_restarts);
  for (int restart = 0; restart < restart_limit; ++restart) {
    for (Eigen::Index j = kept; j < m; ++j) {
      apply_real(ham, v.col(j), w);
      ++matvecs;
      orthogonalize(locked, locked.cols(), w);
      orthogonalize(v, j + 1, w, &coeffs);
      t.block(0, j, j + 1, 1) = coeffs;
      t.block(j, 0, 1, j + 1) = coeffs.transpose();
      const double beta = w.norm();
      last_beta = beta;
      const double scale = std::max(1.0, std::abs(t(j, j)));
      if (beta <= 1e-12 * scale) {
        // invariant subspace reached
        last_beta = 0.0;
        if (j + 1 < m) {
          v.col(j + 1) = fresh_direction(j + 1);
        } else {
          v.col(m).setZero();
        }
      } else {
        v.col(j + 1) = w / beta;
      }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(t);
    const Eigen::VectorXd& theta = small.eigenvalues();
    const Eigen::MatrixXd& y = small.eigenvectors();

    bool converged = true;
    std::vector<double> estimates(want);
    for (int i = 0; i < want; ++i) {
      estimates[i] = std::abs(last_beta * y(m - 1, i));
      if (estimates[i] > opt.tol * std::max(1.0, std::abs(theta[i]))) converged = false;
    }
    if (converged || m == free_dim) {
      LanczosRun run;
      run.values = theta.head(want);
      run.vectors = v.leftCols(m) * y.leftCols(want);
      run.residuals.resize(want);
      bool all_good = true;
      for (int i = 0; i < want; ++i) {
        run.vectors.col(i).normalize();
        run.residuals[i] = true_residual(ham, run.vectors.col(i), run.values[i]);
        ++matvecs;
        if (run.residuals[i] > opt.residual_bound) all_good = false;
      }
      if (all_good) return run;
      if (m == free_dim) {
        throw SolverError("Lanczos: residual " + std::to_string(*std::max_element(
                              run.residuals.begin(), run.residuals.end())) +
                          " above bound in the full space");
      }
    }

    // thick restart: keep the lowest Ritz vectors plus the residual direction
    kept = std::min<Eigen::Index>(m - 1, want + (m - want) / 2);
    Eigen::MatrixXd ritz = v.leftCols(m) * y.leftCols(kept);
    const Eigen::VectorXd residual_dir = v.col(m);
    v.leftCols(kept) = ritz;
    t.setZero();
    for (Eigen::Index i = 0; i < kept; ++i) t(i, i) = theta[i];
    if (last_beta == 0.0) {
      v.col(kept) = fresh_direction(kept);
    } else {
      v.col(kept) = residual_dir;
    }
  }
  throw SolverError("Lanczos: no convergence after " + std::to_string(restart_limit) +
                    " restarts (last residual estimate " + std::to_string(last_beta) + ")");
}

EigenResult diagonal_shortcut(const IsingHamiltonian& ham, int k) {
  const std::size_t n = ham.dim();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ham.diagonal(a) < ham.diagonal(b);
  });
  EigenResult out;
  out.method = "diagonal";
  out.vectors = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), k);
  for (int i = 0; i < k; ++i) {
    out.values.push_back(ham.diagonal(order[i]));
    out.vectors(static_cast<Eigen::Index>(order[i]), i) = 1.0;
    out.residuals.push_back(0.0);
  }
  return out;
}

}  // namespace

EigenResult dense_eigenpairs(const IsingHamiltonian& ham, int k) {
  check_k(ham, k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(ham.dense());
  if (solver.info() != Eigen::Success) throw SolverError("dense eigensolver failed");
  EigenResult out;
  out.method = "dense";
  out.vectors = solver.eigenvectors().leftCols(k);
  for (int i = 0; i < k; ++i) {
    fix_phase(out.vectors.col(i));
    out.values.push_back(solver.eigenvalues()[i]);
    out.residuals.push_back(true_residual(ham, out.vectors.col(i), out.values.back()));
  }
  return out;
}

EigenResult lanczos_eigenpairs(const IsingHamiltonian& ham, int k, const EigenOptions& opt) {
  check_k(ham, k);
  std::mt19937_64 rng(opt.seed);
  EigenResult out;
  out.method = "lanczos";
  const auto n = static_cast<Eigen::Index>(ham.dim());
  Eigen::VectorXd start;
  if (!opt.start.empty()) {
    if (static_cast<Eigen::Index>(opt.start.size()) != n) {
      throw ValidationError("warm start has the wrong dimension");
    }
    start = Eigen::Map<const Eigen::VectorXd>(opt.start.data(), n);
  }
  LanczosRun run = thick_restart(ham, k, Eigen::MatrixXd(n, 0), start, opt, rng, out.matvecs);

  // Lanczos from one start vector sees each degenerate eigenspace only once.
  // Search the complement for anything below the current k-th level.
  int rounds = 0;
  while (opt.verify_degeneracy && run.vectors.cols() < n && rounds < k) {
    LanczosRun probe = thick_restart(ham, 1, run.vectors, Eigen::VectorXd(), opt, rng, out.matvecs);
    const double top = run.values[k - 1];
    if (!(probe.values[0] < top - 10.0 * opt.tol * std::max(1.0, std::abs(top)))) break;
    Eigen::MatrixXd merged_vecs(n, k + 1);
    merged_vecs << run.vectors, probe.vectors.col(0);
    Eigen::VectorXd merged_vals(k + 1);
    merged_vals << run.values, probe.values[0];
    std::vector<double> merged_res = run.residuals;
    merged_res.push_back(probe.residuals[0]);
    std::vector<int> order(k + 1);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return merged_vals[a] < merged_vals[b]; });
    LanczosRun next;
    next.values.resize(k);
    next.vectors.resize(n, k);
    for (int i = 0; i < k; ++i) {
      next.values[i] = merged_vals[order[i]];
      next.vectors.col(i) = merged_vecs.col(order[i]);
      next.residuals.push_back(merged_res[order[i]]);
    }
    run = std::move(next);
    ++rounds;
  }

  out.vectors = std::move(run.vectors);
  for (int i = 0; i < k; ++i) {
    fix_phase(out.vectors.col(i));
    out.values.push_back(run.values[i]);
  }
  out.residuals = std::move(run.residuals);
  return out;
}

EigenResult lowest_eigenpairs(const IsingHamiltonian& ham, int k, const EigenOptions& opt) {
  check_k(ham, k);
  if (ham.g() == 0.0) return diagonal_shortcut(ham, k);
  const auto n = static_cast<Eigen::Index>(ham.dim());
  if (ham.num_sites() <= opt.dense_max_sites || 4 * static_cast<Eigen::Index>(k) + 40 > n) {
    return dense_eigenpairs(ham, k);
  }
  return lanczos_eigenpairs(ham, k, opt);
}

double state_magnetization(const IsingHamiltonian& ham, const Eigen::VectorXd& v) {
  const auto& mag = ham.total_magnetization();
  double m = 0.0;
  for (Eigen::Index s = 0; s < v.size(); ++s) m += v[s] * v[s] * mag[static_cast<std::size_t>(s)];
  return m / ham.num_sites();
}

SpectrumSlice lowest_spectrum(const IsingHamiltonian& ham, int k, bool want_vectors,
                              double control, const EigenOptions& opt) {
  EigenResult eig = lowest_eigenpairs(ham, k, opt);
  SpectrumSlice slice;
  slice.control = control;
  slice.energies = eig.values;
  slice.residuals = eig.residuals;
  for (int i = 0; i < k; ++i) {
    slice.magnetizations.push_back(state_magnetization(ham, eig.vectors.col(i)));
  }
  if (want_vectors) slice.eigenvectors = std::move(eig.vectors);
  return slice;
}

}  // namespace stringbreak
