#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace stringbreak {

using cplx = std::complex<double>;

// Normalized amplitudes over the 2^n computational basis of the dynamical spins.
using StateVector = std::vector<cplx>;

// Distance-dependent ferromagnetic Ising coupling J(d), d >= 1.
//
// Exponential: J(d) = exp(-(d - 1) / xi), so J(1) = 1.
// PowerLaw:    J(d) = d^-alpha with alpha > 1.
class CouplingKernel {
 public:
  enum class Kind { Exponential, PowerLaw };

  static CouplingKernel exponential(double xi);
  static CouplingKernel power_law(double alpha);

  Kind kind() const { return kind_; }
  bool is_exponential() const { return kind_ == Kind::Exponential; }
  double parameter() const { return param_; }
  double xi() const;
  double alpha() const;

  double operator()(long d) const;

  // sum_{d >= first} J(d), closed form (geometric series or zeta tail).
  double tail_sum(long first) const;

  std::string describe() const;

  friend bool operator==(const CouplingKernel&, const CouplingKernel&) = default;

 private:
  CouplingKernel(Kind kind, double param) : kind_(kind), param_(param) {}
  Kind kind_;
  double param_;
};

double coupling_strength(const CouplingKernel& kernel, long d);

// All spins outside the string are frozen; sites 0 and ell+1 point down.
struct StaticExternal {
  friend bool operator==(const StaticExternal&, const StaticExternal&) = default;
};

// n_ext dynamical spins on each side beyond the frozen domain walls.
struct DynamicalExternal {
  int n_ext = 3;
  friend bool operator==(const DynamicalExternal&, const DynamicalExternal&) = default;
};

using Boundary = std::variant<StaticExternal, DynamicalExternal>;

struct FrozenSpin {
  long position;
  int sign;
};

// Lattice layout: which sites are dynamical, which are frozen, and which of
// the dynamical spins form the string between the static charges.
//
// Basis index bit k refers to dynamical_positions()[k]; for the static layout
// that is site k + 1, so site 1 is the least significant bit.
class ChainSpec {
 public:
  ChainSpec(int ell, CouplingKernel kernel, Boundary boundary = StaticExternal{});

  int ell() const { return ell_; }
  const CouplingKernel& kernel() const { return kernel_; }
  const Boundary& boundary() const { return boundary_; }
  bool has_static_external() const {
    return std::holds_alternative<StaticExternal>(boundary_);
  }

  int num_dynamical() const { return static_cast<int>(positions_.size()); }
  const std::vector<long>& dynamical_positions() const { return positions_; }
  // Bit indices of the ell string spins, in lattice order.
  const std::vector<int>& inner_bits() const { return inner_bits_; }
  // Frozen spins inside [left_tail_end + 1, right_tail_start - 1].
  const std::vector<FrozenSpin>& frozen() const { return frozen_; }
  // Sites <= left_tail_end and >= right_tail_start are frozen up.
  long left_tail_end() const { return left_tail_end_; }
  long right_tail_start() const { return right_tail_start_; }

  // Same geometry with every frozen spin pointing up (no static charges).
  ChainSpec vacuum() const;
  bool is_vacuum() const { return vacuum_; }

 private:
  int ell_;
  CouplingKernel kernel_;
  Boundary boundary_;
  bool vacuum_ = false;
  std::vector<long> positions_;
  std::vector<int> inner_bits_;
  std::vector<FrozenSpin> frozen_;
  long left_tail_end_ = 0;
  long right_tail_start_ = 0;
};

// Longitudinal fields on the dynamical spins plus the uniform controls.
struct FieldProfile {
  std::vector<double> h_eff;
  std::vector<double> h_vac;
  double h = 0.0;
  double g = 0.0;
};

// Field on each dynamical spin induced by the frozen spins of the chain.
// Static layout uses the closed forms; other layouts sum the frozen spins
// directly and add the closed-form tails.
std::vector<double> effective_field(const ChainSpec& chain);

// Same sum with every frozen spin up; strictly negative for both kernels.
std::vector<double> vacuum_field(const ChainSpec& chain);

// Direct sum over the frozen layout (finite frozen spins plus tails).
std::vector<double> frozen_field_sum(const ChainSpec& chain);

FieldProfile make_fields(const ChainSpec& chain, double h, double g);

// Classical configuration of n spins; bit k set means sigma^z = +1 on bit k.
struct Bitstring {
  std::uint64_t bits = 0;
  int length = 0;

  // '1' / 'u' / '+' is up, '0' / 'd' / '-' is down. Character i is bit i.
  static Bitstring from_string(std::string_view text);
  static Bitstring all_up(int n);
  static Bitstring all_down(int n) { return {0, n}; }
  int spin(int k) const { return ((bits >> k) & 1u) ? 1 : -1; }
  std::string to_string() const;
};

// Classical energy of s:
//   -sum_{i<j} J(|x_i - x_j|) s_i s_j + sum_j (h_eff[j] - h) s_j.
double diagonal_energy(const ChainSpec& chain, const FieldProfile& fields, Bitstring s);

// Which single-site field the operator uses.
enum class Background { Charges, Vacuum };

// Matrix-free transverse-field Ising operator over the dynamical spins,
// H = D0 - h M - g sum_j sigma^x_j with D0 the h = 0 classical energy and M the
// total magnetization. Immutable; with_controls() shares the tables.
class IsingHamiltonian {
 public:
  static constexpr int kDefaultMaxSites = 20;

  IsingHamiltonian(const ChainSpec& chain, const FieldProfile& fields,
                   Background background = Background::Charges,
                   int max_sites = kDefaultMaxSites);

  int num_sites() const { return tables_->num_sites; }
  std::size_t dim() const { return tables_->base.size(); }
  double h() const { return h_; }
  double g() const { return g_; }
  double flip_amplitude() const { return -g_; }

  double diagonal(std::size_t s) const {
    return tables_->base[s] - h_ * tables_->magnetization[s];
  }
  std::vector<double> diag() const;
  // Total sigma^z of each basis state, over all dynamical spins.
  const std::vector<double>& total_magnetization() const { return tables_->magnetization; }

  IsingHamiltonian with_controls(double h, double g) const;

  void apply(std::span<const double> x, std::span<double> y) const;
  void apply(std::span<const cplx> x, std::span<cplx> y) const;

  // <x|H|x> for a normalized complex state.
  double expectation(std::span<const cplx> x) const;

  // Explicit matrix; intended for small systems and cross-checks.
  Eigen::MatrixXd dense() const;

 private:
  struct Tables {
    int num_sites = 0;
    std::vector<double> base;
    std::vector<double> magnetization;
  };

  IsingHamiltonian(std::shared_ptr<const Tables> tables, double h, double g)
      : tables_(std::move(tables)), h_(h), g_(g) {}

  template <typename T>
  void apply_impl(std::span<const T> x, std::span<T> y) const;

  std::shared_ptr<const Tables> tables_;
  double h_ = 0.0;
  double g_ = 0.0;
};

// Site-reversal permutation of basis indices for a symmetric layout.
std::size_t reflect_basis_index(std::size_t s, int num_sites);

}  // namespace stringbreak
