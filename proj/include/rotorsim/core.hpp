// Dense complex linear algebra over mixed-dimension qudit registers.
//
// Site 0 is the most significant digit of a register index, so
// kron(A_0, A_1, ...) acts on sites 0, 1, ... in order.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rotorsim {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Largest full-register dimension any operator or state may reach.
inline constexpr std::size_t kMaxRegisterDim = 4096;

namespace tol {
inline constexpr double kValidation = 1e-10;
inline constexpr double kConservation = 1e-12;
inline constexpr double kUnitaryReject = 1e-8;
inline constexpr double kMinEigenvalue = -1e-9;
inline constexpr double kProbabilitySum = 1e-12;
}  // namespace tol

inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline bool is_finite(const Matrix& m) {
  return m.allFinite();
}

inline double unitarity_error(const Matrix& u) {
  if (u.rows() != u.cols()) return INFINITY;
  return max_abs(u.adjoint() * u - Matrix::Identity(u.rows(), u.cols()));
}

inline bool is_diagonal(const Matrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (i != j && m(i, j) != cplx(0.0)) return false;
  return true;
}

/// Ordered per-site dimensions of a register.
class RegisterShape {
 public:
  RegisterShape() = default;
  explicit RegisterShape(std::vector<int> local_dims) : dims_(std::move(local_dims)) {
    std::size_t total = 1;
    for (int d : dims_) {
      if (d < 2) throw Error("register shape: every local dimension must be >= 2");
      total *= static_cast<std::size_t>(d);
      if (total > kMaxRegisterDim) throw Error("register too large");
    }
    total_ = total;
  }

  const std::vector<int>& local_dims() const { return dims_; }
  int n_sites() const { return static_cast<int>(dims_.size()); }
  int dim(int site) const { return dims_.at(static_cast<std::size_t>(site)); }
  std::size_t total_dim() const { return total_; }

  /// Index stride of a site (product of the dimensions after it).
  std::size_t stride(int site) const {
    std::size_t s = 1;
    for (int k = n_sites() - 1; k > site; --k) s *= static_cast<std::size_t>(dims_[k]);
    return s;
  }

  int digit(std::size_t index, int site) const {
    return static_cast<int>((index / stride(site)) % static_cast<std::size_t>(dims_[site]));
  }

  bool operator==(const RegisterShape&) const = default;

 private:
  std::vector<int> dims_;
  std::size_t total_ = 1;
};

/// Index bookkeeping for an operator acting on a subset of register sites.
///
/// A full index decomposes as bases[r] + offsets[a], where `a` is the local
/// index over the target sites (first listed site most significant) and `r`
/// enumerates configurations of the remaining sites.
struct SiteMap {
  std::size_t full_dim = 1;
  std::size_t local_dim = 1;
  std::vector<std::size_t> offsets;
  std::vector<std::size_t> bases;
  std::vector<int> sites;
};

inline SiteMap make_site_map(const RegisterShape& shape, std::span<const int> sites) {
  SiteMap map;
  map.full_dim = shape.total_dim();
  map.sites.assign(sites.begin(), sites.end());
  std::vector<bool> used(static_cast<std::size_t>(shape.n_sites()), false);
  for (int s : sites) {
    if (s < 0 || s >= shape.n_sites()) throw Error("site index out of range");
    if (used[static_cast<std::size_t>(s)]) throw Error("target sites must be distinct");
    used[static_cast<std::size_t>(s)] = true;
    map.local_dim *= static_cast<std::size_t>(shape.dim(s));
  }

  map.offsets.assign(map.local_dim, 0);
  for (std::size_t a = 0; a < map.local_dim; ++a) {
    std::size_t rem = a;
    std::size_t off = 0;
    for (auto it = sites.rbegin(); it != sites.rend(); ++it) {
      const auto d = static_cast<std::size_t>(shape.dim(*it));
      off += (rem % d) * shape.stride(*it);
      rem /= d;
    }
    map.offsets[a] = off;
  }

  map.bases.reserve(map.full_dim / map.local_dim);
  for (std::size_t i = 0; i < map.full_dim; ++i) {
    bool zero = true;
    for (int s : sites) {
      if (shape.digit(i, s) != 0) {
        zero = false;
        break;
      }
    }
    if (zero) map.bases.push_back(i);
  }
  return map;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  const auto rows = static_cast<std::size_t>(a.rows()) * static_cast<std::size_t>(b.rows());
  const auto cols = static_cast<std::size_t>(a.cols()) * static_cast<std::size_t>(b.cols());
  if (rows > kMaxRegisterDim || cols > kMaxRegisterDim) throw Error("register too large");
  Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Full-register operator acting as `op` on `sites` and as identity elsewhere.
inline Matrix embed(const Matrix& op, std::span<const int> sites, const RegisterShape& shape) {
  const SiteMap map = make_site_map(shape, sites);
  if (op.rows() != static_cast<Eigen::Index>(map.local_dim) || op.cols() != op.rows())
    throw Error("embed: operator dimension does not match target sites");
  const auto n = static_cast<Eigen::Index>(map.full_dim);
  Matrix out = Matrix::Zero(n, n);
  for (std::size_t base : map.bases)
    for (std::size_t a = 0; a < map.local_dim; ++a)
      for (std::size_t b = 0; b < map.local_dim; ++b)
        out(static_cast<Eigen::Index>(base + map.offsets[a]),
            static_cast<Eigen::Index>(base + map.offsets[b])) =
            op(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  return out;
}

inline Matrix embed(const Matrix& op, std::initializer_list<int> sites, const RegisterShape& shape) {
  const std::vector<int> s(sites);
  return embed(op, std::span<const int>(s), shape);
}

/// Hermitian, unit-trace state of a register. Construction only checks
/// dimensions; use check_density() for the physical invariants.
class DensityMatrix {
 public:
  DensityMatrix(RegisterShape shape, Matrix m) : shape_(std::move(shape)), m_(std::move(m)) {
    const auto n = static_cast<Eigen::Index>(shape_.total_dim());
    if (m_.rows() != n || m_.cols() != n) throw Error("density matrix dimension does not match shape");
  }

  static DensityMatrix basis_state(const RegisterShape& shape, std::size_t index) {
    const auto n = static_cast<Eigen::Index>(shape.total_dim());
    Matrix m = Matrix::Zero(n, n);
    m(static_cast<Eigen::Index>(index), static_cast<Eigen::Index>(index)) = 1.0;
    return {shape, std::move(m)};
  }

  static DensityMatrix pure(const RegisterShape& shape, const Vector& psi) {
    return {shape, psi * psi.adjoint()};
  }

  static DensityMatrix maximally_mixed(const RegisterShape& shape) {
    const auto n = static_cast<Eigen::Index>(shape.total_dim());
    return {shape, Matrix::Identity(n, n) / static_cast<double>(n)};
  }

  const RegisterShape& shape() const { return shape_; }
  const Matrix& matrix() const { return m_; }
  Matrix& matrix() { return m_; }
  std::size_t dim() const { return shape_.total_dim(); }
  cplx trace() const { return m_.trace(); }

 private:
  RegisterShape shape_;
  Matrix m_;
};

/// General CPTP map given by Kraus operators on a sub-register.
class KrausChannel {
 public:
  explicit KrausChannel(std::vector<Matrix> ops) : ops_(std::move(ops)) {
    if (ops_.empty()) throw Error("Kraus channel needs at least one operator");
    const auto d = ops_.front().rows();
    Matrix sum = Matrix::Zero(d, d);
    for (const auto& k : ops_) {
      if (k.rows() != d || k.cols() != d) throw Error("Kraus operators must share one square dimension");
      if (!is_finite(k)) throw Error("Kraus operator has non-finite entries");
      sum += k.adjoint() * k;
    }
    if (max_abs(sum - Matrix::Identity(d, d)) > tol::kValidation)
      throw Error("Kraus channel fails completeness");
  }

  const std::vector<Matrix>& ops() const { return ops_; }
  Eigen::Index dim() const { return ops_.front().rows(); }

 private:
  std::vector<Matrix> ops_;
};

/// Probabilistic mixture of unitaries: rho -> sum_i p_i U_i rho U_i^dagger.
class MixedUnitaryChannel {
 public:
  struct Term {
    double probability;
    Matrix unitary;
  };

  explicit MixedUnitaryChannel(std::vector<Term> terms) : terms_(std::move(terms)) {
    if (terms_.empty()) throw Error("mixed-unitary channel needs at least one term");
    const auto d = terms_.front().unitary.rows();
    double total = 0.0;
    for (const auto& t : terms_) {
      if (t.probability < 0.0 || !std::isfinite(t.probability))
        throw Error("mixed-unitary channel: negative probability");
      if (t.unitary.rows() != d || t.unitary.cols() != d)
        throw Error("mixed-unitary channel: dimension mismatch between terms");
      if (unitarity_error(t.unitary) > tol::kValidation)
        throw Error("mixed-unitary channel: term is not unitary");
      total += t.probability;
    }
    if (std::abs(total - 1.0) > tol::kProbabilitySum)
      throw Error("mixed-unitary channel: probabilities do not sum to 1");
  }

  /// Channel of the form (1 - w) rho + w * (I/d (x) Tr_sub rho), i.e. a
  /// mixture of the identity with a uniform twirl over a unitary operator
  /// basis. The caller vouches for the twirl identity; tests verify it.
  static MixedUnitaryChannel uniform_twirl(double weight, const std::vector<Matrix>& basis) {
    if (weight < 0.0 || weight > 1.0) throw Error("probability outside [0, 1]");
    const auto d = basis.front().rows();
    std::vector<Term> terms;
    terms.reserve(basis.size() + 1);
    terms.push_back({1.0 - weight, Matrix::Identity(d, d)});
    for (const auto& u : basis) terms.push_back({weight / static_cast<double>(basis.size()), u});
    MixedUnitaryChannel ch(std::move(terms));
    ch.twirl_weight_ = weight;
    return ch;
  }

  const std::vector<Term>& terms() const { return terms_; }
  Eigen::Index dim() const { return terms_.front().unitary.rows(); }
  std::optional<double> twirl_weight() const { return twirl_weight_; }

  /// Total probability on terms that are not proportional to the identity.
  double error_weight() const {
    double w = 0.0;
    for (const auto& t : terms_) {
      const cplx phase = t.unitary(0, 0);
      const auto d = t.unitary.rows();
      if (max_abs(t.unitary - phase * Matrix::Identity(d, d)) > tol::kValidation) w += t.probability;
    }
    return w;
  }

 private:
  std::vector<Term> terms_;
  std::optional<double> twirl_weight_;
};

namespace detail {

// out = in * K_emb^dagger, column by column.
inline Matrix right_apply_adjoint(const Matrix& in, const Matrix& k, const SiteMap& map) {
  Matrix out = Matrix::Zero(in.rows(), in.cols());
  const auto dk = map.local_dim;
  for (std::size_t base : map.bases) {
    for (std::size_t a = 0; a < dk; ++a) {
      auto col = out.col(static_cast<Eigen::Index>(base + map.offsets[a]));
      for (std::size_t b = 0; b < dk; ++b) {
        const cplx c = std::conj(k(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
        if (c != cplx(0.0)) col += c * in.col(static_cast<Eigen::Index>(base + map.offsets[b]));
      }
    }
  }
  return out;
}

// K_emb * rho * K_emb^dagger without forming the full-register operator.
inline Matrix conjugate_local(const Matrix& rho, const Matrix& k, const SiteMap& map) {
  const Matrix right = right_apply_adjoint(rho, k, map);
  return right_apply_adjoint(right.adjoint(), k, map).adjoint();
}

inline Vector full_diagonal(const Vector& local, const SiteMap& map) {
  Vector f(static_cast<Eigen::Index>(map.full_dim));
  for (std::size_t base : map.bases)
    for (std::size_t a = 0; a < map.local_dim; ++a)
      f(static_cast<Eigen::Index>(base + map.offsets[a])) = local(static_cast<Eigen::Index>(a));
  return f;
}

inline void conjugate_diagonal(Matrix& rho, const Vector& full) {
  const Vector conj_full = full.conjugate();
  for (Eigen::Index j = 0; j < rho.cols(); ++j) rho.col(j) = rho.col(j).cwiseProduct(full) * conj_full(j);
}

// rho -> (1 - w) rho + w * (I/d (x) Tr_targets rho).
inline void apply_twirl(Matrix& rho, double w, const SiteMap& map) {
  const auto dk = map.local_dim;
  const auto nb = map.bases.size();
  Matrix reduced = Matrix::Zero(static_cast<Eigen::Index>(nb), static_cast<Eigen::Index>(nb));
  for (std::size_t cj = 0; cj < nb; ++cj)
    for (std::size_t a = 0; a < dk; ++a) {
      const auto col = static_cast<Eigen::Index>(map.bases[cj] + map.offsets[a]);
      for (std::size_t ri = 0; ri < nb; ++ri)
        reduced(static_cast<Eigen::Index>(ri), static_cast<Eigen::Index>(cj)) +=
            rho(static_cast<Eigen::Index>(map.bases[ri] + map.offsets[a]), col);
    }
  rho *= (1.0 - w);
  const double scale = w / static_cast<double>(dk);
  for (std::size_t cj = 0; cj < nb; ++cj)
    for (std::size_t a = 0; a < dk; ++a) {
      const auto col = static_cast<Eigen::Index>(map.bases[cj] + map.offsets[a]);
      for (std::size_t ri = 0; ri < nb; ++ri)
        rho(static_cast<Eigen::Index>(map.bases[ri] + map.offsets[a]), col) +=
            scale * reduced(static_cast<Eigen::Index>(ri), static_cast<Eigen::Index>(cj));
    }
}

// Local superoperator S acting on every dk x dk sub-block:
// B'(a,b) = sum_{c,d} S(a*dk+b, c*dk+d) B(c,d).
inline void apply_superop(Matrix& rho, const Matrix& s, const SiteMap& map) {
  const auto dk = map.local_dim;
  Vector block(static_cast<Eigen::Index>(dk * dk));
  for (std::size_t cj : map.bases)
    for (std::size_t ri : map.bases) {
      for (std::size_t a = 0; a < dk; ++a)
        for (std::size_t b = 0; b < dk; ++b)
          block(static_cast<Eigen::Index>(a * dk + b)) =
              rho(static_cast<Eigen::Index>(ri + map.offsets[a]), static_cast<Eigen::Index>(cj + map.offsets[b]));
      const Vector out = s * block;
      for (std::size_t a = 0; a < dk; ++a)
        for (std::size_t b = 0; b < dk; ++b)
          rho(static_cast<Eigen::Index>(ri + map.offsets[a]), static_cast<Eigen::Index>(cj + map.offsets[b])) =
              out(static_cast<Eigen::Index>(a * dk + b));
    }
}

inline Matrix superoperator(const std::vector<Matrix>& kraus, const std::vector<double>& weights) {
  const auto dk = kraus.front().rows();
  Matrix s = Matrix::Zero(dk * dk, dk * dk);
  for (std::size_t n = 0; n < kraus.size(); ++n) {
    const Matrix& k = kraus[n];
    for (Eigen::Index a = 0; a < dk; ++a)
      for (Eigen::Index b = 0; b < dk; ++b)
        for (Eigen::Index c = 0; c < dk; ++c)
          for (Eigen::Index d = 0; d < dk; ++d)
            s(a * dk + b, c * dk + d) += weights[n] * k(a, c) * std::conj(k(b, d));
  }
  return s;
}

#ifdef ROTORSIM_DEBUG_CHECKS
inline void check_conservation(const Matrix& before, const Matrix& after) {
  if (std::abs(after.trace() - before.trace()) > tol::kConservation * std::max(1.0, std::abs(before.trace())))
    throw Error("trace not conserved");
  if (max_abs(before - before.adjoint()) <= tol::kConservation && max_abs(after - after.adjoint()) > tol::kConservation)
    throw Error("hermiticity not conserved");
}
#endif

}  // namespace detail

inline void apply_unitary_in_place(DensityMatrix& rho, const Matrix& u, std::span<const int> sites) {
  const SiteMap map = make_site_map(rho.shape(), sites);
  if (u.rows() != static_cast<Eigen::Index>(map.local_dim) || u.cols() != u.rows())
    throw Error("apply_unitary: dimension mismatch");
  if (unitarity_error(u) > tol::kUnitaryReject) throw Error("apply_unitary: operator is not unitary");
#ifdef ROTORSIM_DEBUG_CHECKS
  const Matrix before = rho.matrix();
#endif
  if (is_diagonal(u)) {
    detail::conjugate_diagonal(rho.matrix(), detail::full_diagonal(u.diagonal(), map));
  } else {
    rho.matrix() = detail::conjugate_local(rho.matrix(), u, map);
  }
#ifdef ROTORSIM_DEBUG_CHECKS
  detail::check_conservation(before, rho.matrix());
#endif
}

/// rho -> U rho U^dagger with U acting on `sites`.
inline DensityMatrix apply_unitary(DensityMatrix rho, const Matrix& u, std::span<const int> sites) {
  apply_unitary_in_place(rho, u, sites);
  return rho;
}

inline DensityMatrix apply_unitary(DensityMatrix rho, const Matrix& u, std::initializer_list<int> sites) {
  const std::vector<int> s(sites);
  apply_unitary_in_place(rho, u, s);
  return rho;
}

inline void apply_channel_in_place(DensityMatrix& rho, const KrausChannel& ch, std::span<const int> sites) {
  const SiteMap map = make_site_map(rho.shape(), sites);
  if (ch.dim() != static_cast<Eigen::Index>(map.local_dim)) throw Error("apply_channel: dimension mismatch");
  const std::vector<double> ones(ch.ops().size(), 1.0);
  detail::apply_superop(rho.matrix(), detail::superoperator(ch.ops(), ones), map);
}

inline void apply_channel_in_place(DensityMatrix& rho, const MixedUnitaryChannel& ch, std::span<const int> sites) {
  const SiteMap map = make_site_map(rho.shape(), sites);
  if (ch.dim() != static_cast<Eigen::Index>(map.local_dim)) throw Error("apply_channel: dimension mismatch");
  if (auto w = ch.twirl_weight()) {
    detail::apply_twirl(rho.matrix(), *w, map);
    return;
  }
  Matrix acc = Matrix::Zero(rho.matrix().rows(), rho.matrix().cols());
  for (const auto& t : ch.terms())
    if (t.probability > 0.0) acc += t.probability * detail::conjugate_local(rho.matrix(), t.unitary, map);
  rho.matrix() = std::move(acc);
}

/// rho -> sum_i K_i rho K_i^dagger on `sites`, exploiting locality.
template <class Channel>
DensityMatrix apply_channel(DensityMatrix rho, const Channel& ch, std::span<const int> sites) {
  apply_channel_in_place(rho, ch, sites);
  return rho;
}

template <class Channel>
DensityMatrix apply_channel(DensityMatrix rho, const Channel& ch, std::initializer_list<int> sites) {
  const std::vector<int> s(sites);
  apply_channel_in_place(rho, ch, s);
  return rho;
}

/// Reference path: builds every full-register operator explicitly.
inline DensityMatrix apply_channel_dense(const DensityMatrix& rho, const KrausChannel& ch, std::span<const int> sites) {
  Matrix acc = Matrix::Zero(rho.matrix().rows(), rho.matrix().cols());
  for (const auto& k : ch.ops()) {
    const Matrix full = embed(k, sites, rho.shape());
    acc += full * rho.matrix() * full.adjoint();
  }
  return {rho.shape(), acc};
}

inline DensityMatrix apply_channel_dense(const DensityMatrix& rho, const MixedUnitaryChannel& ch,
                                         std::span<const int> sites) {
  Matrix acc = Matrix::Zero(rho.matrix().rows(), rho.matrix().cols());
  for (const auto& t : ch.terms()) {
    const Matrix full = embed(t.unitary, sites, rho.shape());
    acc += t.probability * full * rho.matrix() * full.adjoint();
  }
  return {rho.shape(), acc};
}

/// Tr[rho * op]; op need not be Hermitian.
inline cplx expectation(const DensityMatrix& rho, const Matrix& op) {
  if (op.rows() != rho.matrix().rows() || op.cols() != rho.matrix().cols())
    throw Error("expectation: dimension mismatch");
  return rho.matrix().transpose().cwiseProduct(op).sum();
}

struct DensityDiagnostics {
  double trace_deviation = 0.0;
  double hermiticity_deviation = 0.0;
  double min_eigenvalue = 0.0;
  bool trace_violation = false;
  bool hermiticity_violation = false;
  bool positivity_violation = false;

  bool ok() const { return !trace_violation && !hermiticity_violation && !positivity_violation; }
};

inline DensityDiagnostics check_density(const DensityMatrix& rho) {
  DensityDiagnostics d;
  const Matrix& m = rho.matrix();
  d.trace_deviation = std::abs(m.trace() - cplx(1.0));
  d.hermiticity_deviation = max_abs(m - m.adjoint());
  const Matrix herm = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(herm, Eigen::EigenvaluesOnly);
  d.min_eigenvalue = es.eigenvalues().minCoeff();
  d.trace_violation = !(d.trace_deviation <= tol::kValidation);
  d.hermiticity_violation = !(d.hermiticity_deviation <= tol::kValidation);
  d.positivity_violation = !(d.min_eigenvalue >= tol::kMinEigenvalue);
  return d;
}

/// exp(-i t h) for Hermitian h via its eigendecomposition.
inline Matrix expm_hermitian(const Matrix& h, double t) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.adjoint()));
  const Eigen::VectorXd& w = es.eigenvalues();
  Vector phases(w.size());
  for (Eigen::Index k = 0; k < w.size(); ++k) phases(k) = std::polar(1.0, -t * w(k));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace rotorsim
