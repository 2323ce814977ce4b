// Truncated rotor Hamiltonian of (1+1)d scalar QED, its trial state,
// Trotterized propagator, BCH effective Hamiltonian and spectral references.
//
// Local basis is ordered by descending charge: level 0 <-> n = +m, ...,
// level 2m <-> n = -m.

#pragma once

#include "rotorsim/core.hpp"

#include <Eigen/Eigenvalues>

#include <limits>
#include <numbers>

namespace rotorsim::model {

enum class Boundary { periodic, open };

struct ModelParams {
  double g2 = 5.0;
  int n_sites = 4;
  int truncation = 3;
  Boundary boundary = Boundary::periodic;

  void validate() const {
    if (!(g2 > 0.0) || !std::isfinite(g2)) throw Error("g2 must be positive");
    if (n_sites < 1) throw Error("n_sites must be >= 1");
    if (truncation < 3 || truncation % 2 == 0) throw Error("truncation must be odd and >= 3");
  }

  RegisterShape shape() const {
    validate();
    return RegisterShape(std::vector<int>(static_cast<std::size_t>(n_sites), truncation));
  }
};

struct RotorOperators {
  Matrix lz;
  Matrix ux;
  Matrix u_plus;
  Matrix u_minus;
};

inline RotorOperators rotor_ops(int truncation) {
  if (truncation < 3 || truncation % 2 == 0) throw Error("truncation must be odd and >= 3");
  const int m = truncation / 2;
  RotorOperators ops;
  ops.lz = Matrix::Zero(truncation, truncation);
  ops.u_plus = Matrix::Zero(truncation, truncation);
  for (int level = 0; level < truncation; ++level) ops.lz(level, level) = m - level;
  // U+ |n> = |n+1>: level l (charge m-l) -> level l-1.
  for (int level = 1; level < truncation; ++level) ops.u_plus(level - 1, level) = 1.0;
  ops.u_minus = ops.u_plus.adjoint();
  ops.ux = 0.5 * (ops.u_plus + ops.u_minus);
  return ops;
}

/// Neighbor pairs of the potential term. Periodic wraps i -> i+1 mod N and so
/// visits every link twice for N = 2; self-links (N = 1) vanish and are dropped.
inline std::vector<std::pair<int, int>> links(const ModelParams& p) {
  std::vector<std::pair<int, int>> out;
  const int n = p.n_sites;
  const int count = p.boundary == Boundary::periodic ? n : n - 1;
  for (int i = 0; i < count; ++i) {
    const int j = (i + 1) % n;
    if (i != j) out.emplace_back(i, j);
  }
  return out;
}

struct HamiltonianTerms {
  Matrix h_v;  // diagonal potential + gauge
  Matrix h_k;  // hopping
};

inline HamiltonianTerms hamiltonian_terms(const ModelParams& p) {
  const RegisterShape shape = p.shape();
  const auto n = static_cast<Eigen::Index>(shape.total_dim());
  const int m = p.truncation / 2;
  const auto bonds = links(p);

  HamiltonianTerms t;
  t.h_v = Matrix::Zero(n, n);
  for (Eigen::Index idx = 0; idx < n; ++idx) {
    std::vector<int> charge(static_cast<std::size_t>(p.n_sites));
    for (int s = 0; s < p.n_sites; ++s) charge[static_cast<std::size_t>(s)] = m - shape.digit(static_cast<std::size_t>(idx), s);
    double e = 0.0;
    for (int q : charge) e += 0.5 * p.g2 * q * q;
    for (auto [i, j] : bonds) {
      const double d = charge[static_cast<std::size_t>(i)] - charge[static_cast<std::size_t>(j)];
      e += 0.5 * d * d;
    }
    t.h_v(idx, idx) = e;
  }

  const RotorOperators ops = rotor_ops(p.truncation);
  t.h_k = Matrix::Zero(n, n);
  for (int s = 0; s < p.n_sites; ++s) t.h_k += embed(Matrix(-2.0 * ops.ux), {s}, shape);
  return t;
}

inline Matrix hamiltonian(const ModelParams& p) {
  auto t = hamiltonian_terms(p);
  return t.h_v + t.h_k;
}

struct GammaState {
  double b = 0.0;
  Vector amplitudes;  // levels (+1, 0, -1)
  double n_prime = 0.0;
};

inline double gamma_b(double g2) {
  return (g2 + 1.0 + std::sqrt((g2 - 1.0) * (g2 - 1.0) + 32.0)) / 4.0;
}

inline GammaState gamma_state(double g2) {
  if (!(g2 > 0.0)) throw Error("g2 must be positive");
  GammaState s;
  s.b = gamma_b(g2);
  const double norm = std::sqrt(2.0 + s.b * s.b);
  s.amplitudes = Vector(3);
  s.amplitudes << 1.0 / norm, s.b / norm, 1.0 / norm;
  s.n_prime = std::sqrt((1.0 + s.b * s.b) / (2.0 + s.b * s.b));
  return s;
}

/// Product trial state Gamma^(x N) on the rotor register.
inline Vector gamma_product(const ModelParams& p) {
  if (p.truncation != 3) throw Error("the trial state is defined for truncation 3");
  const GammaState g = gamma_state(p.g2);
  Matrix psi = Matrix::Ones(1, 1);
  for (int s = 0; s < p.n_sites; ++s) psi = kron(psi, g.amplitudes);
  return psi.col(0);
}

/// U+ on the source rotor (site 0) applied to the product trial state.
inline Vector source_state(const ModelParams& p) {
  const RotorOperators ops = rotor_ops(p.truncation);
  return embed(ops.u_plus, {0}, p.shape()) * gamma_product(p);
}

struct MeanFieldReport {
  Vector ground;            // ground eigenvector of the single-site operator, positive middle entry
  double ground_energy = 0.0;
  double fidelity = 0.0;    // |<ground|Gamma>|^2
  double implied_ratio = 0.0;   // middle / edge component of `ground`
  double b = 0.0;
  double relative_difference = 0.0;  // (implied_ratio - b) / b
};

inline MeanFieldReport mean_field_check(double g2) {
  const RotorOperators ops = rotor_ops(3);
  const Matrix op = ((g2 + 1.0) / 2.0 + 1.0) * ops.lz * ops.lz - 2.0 * ops.ux;
  Eigen::SelfAdjointEigenSolver<Matrix> es(op);
  MeanFieldReport r;
  r.ground = es.eigenvectors().col(0);
  if (r.ground(1).real() < 0.0) r.ground = -r.ground;
  r.ground_energy = es.eigenvalues()(0);
  const GammaState gamma = gamma_state(g2);
  r.fidelity = std::norm(r.ground.dot(gamma.amplitudes));
  r.implied_ratio = r.ground(1).real() / r.ground(0).real();
  r.b = gamma.b;
  r.relative_difference = (r.implied_ratio - r.b) / r.b;
  return r;
}

struct TrotterBlocks {
  Matrix u_v_diag;  // exp(-i dt H_V), full register, diagonal
  Matrix u_x_site;  // exp(-i dt (-2 Ux)) on one rotor
};

inline TrotterBlocks trotter_blocks(const ModelParams& p, double dt) {
  if (!(dt > 0.0)) throw Error("dt must be positive");
  const HamiltonianTerms t = hamiltonian_terms(p);
  TrotterBlocks b;
  const auto n = t.h_v.rows();
  b.u_v_diag = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) b.u_v_diag(i, i) = std::polar(1.0, -dt * t.h_v(i, i).real());
  b.u_x_site = expm_hermitian(-2.0 * rotor_ops(p.truncation).ux, dt);
  return b;
}

/// U_Tr(dt) = exp(-i dt H_V) exp(-i dt H_K) on the full rotor register.
inline Matrix trotter_step_unitary(const ModelParams& p, double dt) {
  const TrotterBlocks b = trotter_blocks(p, dt);
  const RegisterShape shape = p.shape();
  const auto n = static_cast<Eigen::Index>(shape.total_dim());
  Matrix kinetic = Matrix::Identity(n, n);
  for (int s = 0; s < p.n_sites; ++s) kinetic = embed(b.u_x_site, {s}, shape) * kinetic;
  return b.u_v_diag * kinetic;
}

inline Matrix commutator(const Matrix& a, const Matrix& b) {
  return a * b - b * a;
}

/// H - dt^2/24 (2[H_K,[H_K,H_V]] + [H_V,[H_V,H_K]]), nested commutators as written.
inline Matrix bch_hamiltonian(const ModelParams& p, double dt) {
  const HamiltonianTerms t = hamiltonian_terms(p);
  const Matrix correction =
      2.0 * commutator(t.h_k, commutator(t.h_k, t.h_v)) + commutator(t.h_v, commutator(t.h_v, t.h_k));
  return t.h_v + t.h_k - (dt * dt / 24.0) * correction;
}

/// Second-order BCH effective Hamiltonian of exp(-i dt H_V) exp(-i dt H_K),
/// i.e. of its symmetric similarity-equivalent exp(-i dt H_K/2) exp(-i dt H_V) exp(-i dt H_K/2).
inline Matrix bch_hamiltonian_symmetric(const ModelParams& p, double dt) {
  const HamiltonianTerms t = hamiltonian_terms(p);
  const Matrix correction =
      2.0 * commutator(t.h_v, commutator(t.h_v, t.h_k)) - commutator(t.h_k, commutator(t.h_k, t.h_v));
  return t.h_v + t.h_k - (dt * dt / 24.0) * correction;
}

/// Spectral decomposition of a propagator or Hamiltonian seen from a source state.
struct SpectralResult {
  Eigen::VectorXd eigenvalues;   // ascending
  Matrix eigenvectors;
  Eigen::VectorXd source_weights;  // |<E_k|source>|^2
  Eigen::VectorXcd correlator_amplitudes;  // <probe|P_0 A|E_k><E_k|source>, P_0 the ground group
};

/// sum_x U-_x on the rotor register.
inline Matrix readout_operator(const ModelParams& p) {
  const RotorOperators ops = rotor_ops(p.truncation);
  const auto n = static_cast<Eigen::Index>(p.shape().total_dim());
  Matrix a = Matrix::Zero(n, n);
  for (int x = 0; x < p.n_sites; ++x) a += embed(ops.u_minus, {x}, p.shape());
  return a;
}

namespace detail {

inline Eigen::Index ground_group_end(const Eigen::VectorXd& e, double tol) {
  Eigen::Index end = 1;
  while (end < e.size() && e(end) - e(0) <= tol) ++end;
  return end;
}

}  // namespace detail

/// Fills source weights and the amplitude each level contributes to the
/// correlator <probe| U^-k A U^k |source>.
inline void attach_weights(SpectralResult& r, const Vector& probe, const Matrix& readout, const Vector& source,
                           double degeneracy_tol = 1e-8) {
  const Vector overlaps = r.eigenvectors.adjoint() * source;
  r.source_weights = overlaps.cwiseAbs2();
  const Eigen::Index g = detail::ground_group_end(r.eigenvalues, degeneracy_tol);
  const Matrix ground = r.eigenvectors.leftCols(g);
  const Vector bra = (probe.adjoint() * ground * ground.adjoint() * readout).adjoint();
  const Vector left = r.eigenvectors.adjoint() * bra;
  r.correlator_amplitudes = left.conjugate().cwiseProduct(overlaps);
}

inline SpectralResult spectral_hermitian(const Matrix& h, const Vector& source) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.adjoint()));
  SpectralResult r;
  r.eigenvalues = es.eigenvalues();
  r.eigenvectors = es.eigenvectors();
  r.source_weights = (r.eigenvectors.adjoint() * source).cwiseAbs2();
  r.correlator_amplitudes = Eigen::VectorXcd::Zero(r.eigenvalues.size());
  return r;
}

/// Energies of a one-step propagator U = exp(-i dt H_eff). Each eigenphase is
/// unfolded onto the 2 pi / dt branch nearest the eigenvector's expectation of
/// `reference_h`, which removes the aliasing of large |E| dt.
struct EigenphaseResult {
  SpectralResult spectrum;
  bool branch_ambiguous = false;  // some |E_k| dt >= pi
};

inline EigenphaseResult eigenphases(const Matrix& u, double dt, const Matrix& reference_h, const Vector& source) {
  Eigen::ComplexSchur<Matrix> schur(u);
  const Matrix& z = schur.matrixU();
  const Matrix& tri = schur.matrixT();
  const auto n = u.rows();

  std::vector<std::pair<double, Eigen::Index>> order;
  order.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    const double phase = -std::arg(tri(k, k));
    const double expected = (z.col(k).adjoint() * reference_h * z.col(k))(0, 0).real();
    const double turns = std::round((expected * dt - phase) / (2.0 * std::numbers::pi));
    order.emplace_back((phase + 2.0 * std::numbers::pi * turns) / dt, k);
  }
  std::sort(order.begin(), order.end());

  EigenphaseResult r;
  r.spectrum.eigenvalues.resize(n);
  r.spectrum.eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    r.spectrum.eigenvalues(k) = order[static_cast<std::size_t>(k)].first;
    r.spectrum.eigenvectors.col(k) = z.col(order[static_cast<std::size_t>(k)].second);
    if (std::abs(order[static_cast<std::size_t>(k)].first) * dt >= std::numbers::pi) r.branch_ambiguous = true;
  }
  r.spectrum.source_weights = (r.spectrum.eigenvectors.adjoint() * source).cwiseAbs2();
  r.spectrum.correlator_amplitudes = Eigen::VectorXcd::Zero(n);
  return r;
}

/// Frequency E_k - E_ground of the degeneracy group whose summed correlator
/// amplitude is largest in magnitude, the ground group excluded.
inline double dominant_frequency(const SpectralResult& s, double degeneracy_tol = 1e-8) {
  const auto n = s.eigenvalues.size();
  const double e0 = s.eigenvalues(0);
  double best_weight = -1.0;
  double best_freq = std::numeric_limits<double>::quiet_NaN();
  Eigen::Index k = detail::ground_group_end(s.eigenvalues, degeneracy_tol);
  while (k < n) {
    Eigen::Index end = k;
    cplx amp = 0.0;
    while (end < n && s.eigenvalues(end) - s.eigenvalues(k) <= degeneracy_tol) amp += s.correlator_amplitudes(end++);
    const double w = std::abs(amp);
    if (w > best_weight + 1e-14) {
      best_weight = w;
      best_freq = s.eigenvalues(k) - e0;
    }
    k = end;
  }
  return best_freq;
}

struct MassReference {
  double mass = 0.0;
  bool branch_ambiguous = false;
  SpectralResult spectrum;
};

/// Mass carried by the Trotter propagator U_Tr(dt): the correlator frequency
/// E_k - E_0 with the largest amplitude.
inline MassReference theoretical_mass(const ModelParams& p, double dt) {
  const Matrix u = trotter_step_unitary(p, dt);
  const Matrix h = hamiltonian(p);
  EigenphaseResult e = eigenphases(u, dt, h, source_state(p));
  attach_weights(e.spectrum, gamma_product(p), readout_operator(p), source_state(p));
  return {dominant_frequency(e.spectrum), e.branch_ambiguous, e.spectrum};
}

/// dt -> 0 limit: the same weighting applied to the exact Hamiltonian.
inline double continuum_mass(const ModelParams& p) {
  SpectralResult s = spectral_hermitian(hamiltonian(p), source_state(p));
  attach_weights(s, gamma_product(p), readout_operator(p), source_state(p));
  return dominant_frequency(s);
}

inline double gap(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(1) - es.eigenvalues()(0);
}

/// Lowest gap of the propagator's unfolded eigenphase spectrum.
inline double eigenphase_gap(const ModelParams& p, double dt) {
  const Matrix u = trotter_step_unitary(p, dt);
  const Matrix h = hamiltonian(p);
  const auto n = static_cast<Eigen::Index>(p.shape().total_dim());
  const EigenphaseResult e = eigenphases(u, dt, h, Vector::Zero(n));
  return e.spectrum.eigenvalues(1) - e.spectrum.eigenvalues(0);
}

struct AccuracyLevel {
  double level = 0.0;
  std::optional<double> dt_max;
  std::optional<int> n_min;
};

struct SystematicMap {
  double m_cont = 0.0;
  std::vector<double> dt_grid;
  std::vector<int> n_grid;
  std::vector<double> m_trotter;        // per dt
  std::vector<double> trotter_error;    // |m_Tr - m_cont| / m_cont per dt
  std::vector<std::vector<double>> error;  // [dt][n]
  std::vector<AccuracyLevel> levels;
};

/// Combined FFT-resolution and Trotter systematic over a (dt, N) grid.
/// dt_max is the end of the contiguous run of grid steps, from the smallest
/// dt upward, whose Trotter error stays within the level.
inline SystematicMap systematic_region(const ModelParams& p, std::vector<double> dt_grid, std::vector<int> n_grid,
                                       const std::vector<double>& levels = {0.20, 0.10, 0.05}) {
  if (dt_grid.empty() || n_grid.empty()) throw Error("systematic_region: grids must be nonempty");
  std::sort(dt_grid.begin(), dt_grid.end());
  std::sort(n_grid.begin(), n_grid.end());
  SystematicMap map;
  map.m_cont = continuum_mass(p);
  map.dt_grid = dt_grid;
  map.n_grid = n_grid;
  for (double dt : dt_grid) {
    const double m = theoretical_mass(p, dt).mass;
    map.m_trotter.push_back(m);
    map.trotter_error.push_back(std::abs(m - map.m_cont) / map.m_cont);
    std::vector<double> row;
    for (int n : n_grid) {
      const double fft = 2.0 * std::numbers::pi / (dt * n) / map.m_cont;
      row.push_back(std::max(fft, map.trotter_error.back()));
    }
    map.error.push_back(std::move(row));
  }
  for (double level : levels) {
    AccuracyLevel acc{level, std::nullopt, std::nullopt};
    std::size_t limit = 0;
    while (limit < dt_grid.size() && map.trotter_error[limit] <= level) ++limit;
    if (limit > 0) {
      acc.dt_max = dt_grid[limit - 1];
      for (std::size_t j = 0; j < n_grid.size() && !acc.n_min; ++j)
        for (std::size_t i = 0; i < limit; ++i)
          if (map.error[i][j] <= level) {
            acc.n_min = n_grid[j];
            break;
          }
    }
    map.levels.push_back(acc);
  }
  return map;
}

}  // namespace rotorsim::model
