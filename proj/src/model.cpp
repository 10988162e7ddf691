#include "stringbreak/model.hpp"

#include <bit>
#include <cmath>
#include <sstream>

#include "stringbreak/errors.hpp"
#include "stringbreak/zeta.hpp"

namespace stringbreak {

CouplingKernel CouplingKernel::exponential(double xi) {
  if (!(xi > 0.0) || !std::isfinite(xi)) {
    throw DomainError("exponential kernel requires xi > 0, got " + std::to_string(xi));
  }
  return {Kind::Exponential, xi};
}

CouplingKernel CouplingKernel::power_law(double alpha) {
  if (!(alpha > 1.0 + 1e-6) || !std::isfinite(alpha)) {
    throw DomainError("power-law kernel requires alpha > 1, got " + std::to_string(alpha));
  }
  return {Kind::PowerLaw, alpha};
}

double CouplingKernel::xi() const {
  if (kind_ != Kind::Exponential) throw ValidationError("kernel is not exponential");
  return param_;
}

double CouplingKernel::alpha() const {
  if (kind_ != Kind::PowerLaw) throw ValidationError("kernel is not a power law");
  return param_;
}

double CouplingKernel::operator()(long d) const {
  if (d < 1) {
    throw DomainError("coupling distance must be >= 1, got " + std::to_string(d));
  }
  if (kind_ == Kind::Exponential) {
    return std::exp(-static_cast<double>(d - 1) / param_);
  }
  return std::pow(static_cast<double>(d), -param_);
}

double CouplingKernel::tail_sum(long first) const {
  if (first < 1) {
    throw DomainError("tail sum must start at distance >= 1");
  }
  if (kind_ == Kind::Exponential) {
    const double q = std::exp(-1.0 / param_);
    return std::exp(-static_cast<double>(first - 1) / param_) / (1.0 - q);
  }
  return zeta_tail(param_, first);
}

std::string CouplingKernel::describe() const {
  std::ostringstream out;
  out.precision(17);
  if (kind_ == Kind::Exponential) {
    out << "exp(xi=" << param_ << ")";
  } else {
    out << "power(alpha=" << param_ << ")";
  }
  return out.str();
}

double coupling_strength(const CouplingKernel& kernel, long d) { return kernel(d); }

ChainSpec::ChainSpec(int ell, CouplingKernel kernel, Boundary boundary)
    : ell_(ell), kernel_(kernel), boundary_(boundary) {
  if (ell < 1) {
    throw ValidationError("chain needs ell >= 1 dynamical spins, got " + std::to_string(ell));
  }
  if (const auto* ext = std::get_if<DynamicalExternal>(&boundary_)) {
    const int n = ext->n_ext;
    if (n < 1) throw ValidationError("dynamical external layout needs n_ext >= 1");
    const long total = ell + 2L * n + 4;
    for (long p = 1; p <= n; ++p) positions_.push_back(p);
    for (long p = n + 3; p <= n + ell + 2; ++p) {
      inner_bits_.push_back(static_cast<int>(positions_.size()));
      positions_.push_back(p);
    }
    for (long p = total - n + 1; p <= total; ++p) positions_.push_back(p);
    frozen_ = {{n + 1, +1}, {n + 2, -1}, {total - n - 1, -1}, {total - n, +1}};
    left_tail_end_ = 0;
    right_tail_start_ = total + 1;
  } else {
    for (long p = 1; p <= ell; ++p) {
      inner_bits_.push_back(static_cast<int>(positions_.size()));
      positions_.push_back(p);
    }
    frozen_ = {{0, -1}, {ell + 1L, -1}};
    left_tail_end_ = -1;
    right_tail_start_ = ell + 2L;
  }
}

ChainSpec ChainSpec::vacuum() const {
  ChainSpec copy = *this;
  copy.vacuum_ = true;
  for (auto& f : copy.frozen_) f.sign = +1;
  return copy;
}

std::vector<double> frozen_field_sum(const ChainSpec& chain) {
  const auto& kernel = chain.kernel();
  std::vector<double> field;
  field.reserve(chain.dynamical_positions().size());
  for (long p : chain.dynamical_positions()) {
    double f = -kernel.tail_sum(p - chain.left_tail_end()) -
               kernel.tail_sum(chain.right_tail_start() - p);
    for (const auto& frozen : chain.frozen()) {
      f -= kernel(std::labs(p - frozen.position)) * frozen.sign;
    }
    field.push_back(f);
  }
  return field;
}

std::vector<double> effective_field(const ChainSpec& chain) {
  if (!chain.has_static_external() || chain.is_vacuum()) {
    return frozen_field_sum(chain);
  }
  const int ell = chain.ell();
  const auto& kernel = chain.kernel();
  std::vector<double> field(ell);
  if (kernel.is_exponential()) {
    const double xi = kernel.xi();
    const double q = std::exp(-1.0 / xi);
    const double prefactor = (1.0 - 2.0 * q) / (1.0 - q);
    for (int j = 1; j <= ell; ++j) {
      field[j - 1] = prefactor * (std::exp(-(j - 1) / xi) + std::exp(-(ell - j) / xi));
    }
    return field;
  }
  const double alpha = kernel.alpha();
  const double zeta_alpha = zeta(alpha);
  // partial[k] = sum_{m <= k} m^-alpha
  std::vector<double> partial(ell + 2, 0.0);
  for (int m = 1; m <= ell + 1; ++m) {
    partial[m] = partial[m - 1] + std::pow(static_cast<double>(m), -alpha);
  }
  for (int j = 1; j <= ell; ++j) {
    const int mirror = ell - j + 1;
    field[j - 1] = -2.0 * zeta_alpha + std::pow(static_cast<double>(j), -alpha) +
                   std::pow(static_cast<double>(mirror), -alpha) + partial[j] +
                   partial[mirror];
  }
  return field;
}

std::vector<double> vacuum_field(const ChainSpec& chain) {
  if (!chain.has_static_external()) {
    return frozen_field_sum(chain.vacuum());
  }
  const int ell = chain.ell();
  std::vector<double> field(ell);
  for (int j = 1; j <= ell; ++j) {
    field[j - 1] = -chain.kernel().tail_sum(j) - chain.kernel().tail_sum(ell + 1 - j);
  }
  return field;
}

FieldProfile make_fields(const ChainSpec& chain, double h, double g) {
  return {effective_field(chain), vacuum_field(chain), h, g};
}

Bitstring Bitstring::from_string(std::string_view text) {
  if (text.size() > 63) throw ValidationError("bitstring longer than 63 sites");
  Bitstring out{0, static_cast<int>(text.size())};
  for (std::size_t k = 0; k < text.size(); ++k) {
    switch (text[k]) {
      case '1':
      case 'u':
      case '+':
        out.bits |= std::uint64_t{1} << k;
        break;
      case '0':
      case 'd':
      case '-':
        break;
      default:
        throw ValidationError(std::string("invalid bitstring character '") + text[k] + "'");
    }
  }
  return out;
}

Bitstring Bitstring::all_up(int n) {
  return {n >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1, n};
}

std::string Bitstring::to_string() const {
  std::string out(length, '0');
  for (int k = 0; k < length; ++k) {
    if ((bits >> k) & 1u) out[k] = '1';
  }
  return out;
}

namespace {

std::vector<double> pair_couplings(const ChainSpec& chain) {
  const auto& pos = chain.dynamical_positions();
  const std::size_t n = pos.size();
  std::vector<double> couplings(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      couplings[i * n + j] = chain.kernel()(std::labs(pos[j] - pos[i]));
    }
  }
  return couplings;
}

const std::vector<double>& site_field(const ChainSpec& chain, const FieldProfile& fields,
                                      Background background) {
  const auto& field = background == Background::Charges ? fields.h_eff : fields.h_vac;
  if (static_cast<int>(field.size()) != chain.num_dynamical()) {
    throw ValidationError("field profile has " + std::to_string(field.size()) +
                          " entries, chain has " + std::to_string(chain.num_dynamical()) +
                          " dynamical spins");
  }
  return field;
}

double classical_energy(std::uint64_t s, std::size_t n, const std::vector<double>& couplings,
                        const std::vector<double>& field, double h) {
  double energy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double si = ((s >> i) & 1u) ? 1.0 : -1.0;
    double pair = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double sj = ((s >> j) & 1u) ? 1.0 : -1.0;
      pair += couplings[i * n + j] * sj;
    }
    energy += -si * pair + (field[i] - h) * si;
  }
  return energy;
}

}  // namespace

double diagonal_energy(const ChainSpec& chain, const FieldProfile& fields, Bitstring s) {
  if (s.length != chain.num_dynamical()) {
    throw ValidationError("bitstring length " + std::to_string(s.length) +
                          " does not match " + std::to_string(chain.num_dynamical()) +
                          " dynamical spins");
  }
  const auto& field = site_field(chain, fields, Background::Charges);
  return classical_energy(s.bits, field.size(), pair_couplings(chain), field, fields.h);
}

IsingHamiltonian::IsingHamiltonian(const ChainSpec& chain, const FieldProfile& fields,
                                   Background background, int max_sites)
    : h_(fields.h), g_(fields.g) {
  const int n = chain.num_dynamical();
  if (n > max_sites) {
    throw ResourceError("Hilbert space of " + std::to_string(n) +
                        " spins exceeds the configured maximum of " +
                        std::to_string(max_sites));
  }
  const auto& field = site_field(chain, fields, background);
  const auto couplings = pair_couplings(chain);
  auto tables = std::make_shared<Tables>();
  tables->num_sites = n;
  const std::size_t dim = std::size_t{1} << n;
  tables->base.resize(dim);
  tables->magnetization.resize(dim);
  for (std::size_t s = 0; s < dim; ++s) {
    tables->base[s] = classical_energy(s, n, couplings, field, 0.0);
    tables->magnetization[s] = 2.0 * std::popcount(s) - n;
  }
  tables_ = std::move(tables);
}

std::vector<double> IsingHamiltonian::diag() const {
  std::vector<double> out(dim());
  for (std::size_t s = 0; s < out.size(); ++s) out[s] = diagonal(s);
  return out;
}

IsingHamiltonian IsingHamiltonian::with_controls(double h, double g) const {
  return IsingHamiltonian(tables_, h, g);
}

template <typename T>
void IsingHamiltonian::apply_impl(std::span<const T> x, std::span<T> y) const {
  const std::size_t n = dim();
  if (x.size() != n || y.size() != n) {
    throw ValidationError("apply: vector size does not match Hilbert-space dimension");
  }
  const int sites = num_sites();
  const double* base = tables_->base.data();
  const double* mag = tables_->magnetization.data();
  const double h = h_;
  const double g = g_;
  for (std::size_t s = 0; s < n; ++s) {
    T flip{};
    for (int b = 0; b < sites; ++b) flip += x[s ^ (std::size_t{1} << b)];
    y[s] = (base[s] - h * mag[s]) * x[s] - g * flip;
  }
}

void IsingHamiltonian::apply(std::span<const double> x, std::span<double> y) const {
  apply_impl<double>(x, y);
}

void IsingHamiltonian::apply(std::span<const cplx> x, std::span<cplx> y) const {
  apply_impl<cplx>(x, y);
}

double IsingHamiltonian::expectation(std::span<const cplx> x) const {
  const std::size_t n = dim();
  if (x.size() != n) throw ValidationError("expectation: vector size mismatch");
  const int sites = num_sites();
  double diag_part = 0.0;
  double flip_part = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    diag_part += diagonal(s) * std::norm(x[s]);
    cplx flip{};
    for (int b = 0; b < sites; ++b) flip += x[s ^ (std::size_t{1} << b)];
    flip_part += (std::conj(x[s]) * flip).real();
  }
  return diag_part - g_ * flip_part;
}

Eigen::MatrixXd IsingHamiltonian::dense() const {
  const std::size_t n = dim();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(n));
  for (std::size_t s = 0; s < n; ++s) {
    m(s, s) = diagonal(s);
    for (int b = 0; b < num_sites(); ++b) {
      m(s, s ^ (std::size_t{1} << b)) = -g_;
    }
  }
  return m;
}

std::size_t reflect_basis_index(std::size_t s, int num_sites) {
  std::size_t r = 0;
  for (int b = 0; b < num_sites; ++b) {
    if ((s >> b) & 1u) r |= std::size_t{1} << (num_sites - 1 - b);
  }
  return r;
}

}  // namespace stringbreak
