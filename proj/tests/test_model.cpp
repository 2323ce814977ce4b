#include "oracles.hpp"
#include "rotorsim/model.hpp"

#include <catch_amalgamated.hpp>

using namespace rotorsim;
using namespace rotorsim::model;

namespace {

double two_norm(const Matrix& m) {
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

double slope(double x0, double y0, double x1, double y1) {
  return std::log(y1 / y0) / std::log(x1 / x0);
}

/// Full-register permutation applying the same level permutation on every site.
Matrix level_permutation(const ModelParams& p, const std::vector<int>& perm) {
  const RegisterShape shape = p.shape();
  const auto n = static_cast<Eigen::Index>(shape.total_dim());
  Matrix m = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index j = 0;
    for (int s = 0; s < p.n_sites; ++s) j = j * p.truncation + perm[static_cast<std::size_t>(shape.digit(static_cast<std::size_t>(i), s))];
    m(j, i) = 1.0;
  }
  return m;
}

}  // namespace

TEST_CASE("rotor operators") {
  const RotorOperators t3 = rotor_ops(3);
  Matrix lz = Matrix::Zero(3, 3);
  lz(0, 0) = 1.0;
  lz(2, 2) = -1.0;
  CHECK(oracle::max_abs(t3.lz - lz) == 0.0);
  Matrix ux = Matrix::Zero(3, 3);
  ux(0, 1) = ux(1, 0) = ux(1, 2) = ux(2, 1) = 0.5;
  CHECK(oracle::max_abs(t3.ux - ux) == 0.0);
  // U+ raises the charge by one.
  CHECK(oracle::max_abs(t3.lz * t3.u_plus - t3.u_plus * (t3.lz + Matrix::Identity(3, 3))) == 0.0);
  CHECK(std::abs(t3.u_plus(0, 1) - 1.0) == 0.0);

  const RotorOperators t5 = rotor_ops(5);
  for (int k = 0; k < 5; ++k) CHECK(t5.lz(k, k).real() == 2 - k);
  Eigen::SelfAdjointEigenSolver<Matrix> es(t5.ux);
  for (int k = 0; k < 5; ++k) CHECK(std::abs(es.eigenvalues()(k) + es.eigenvalues()(4 - k)) <= 1e-14);

  CHECK_THROWS_AS(rotor_ops(4), Error);
  CHECK_THROWS_AS(rotor_ops(1), Error);
}

TEST_CASE("single-site open Hamiltonian") {
  ModelParams p;
  p.n_sites = 1;
  p.boundary = Boundary::open;
  CHECK(links(p).empty());
  const RotorOperators ops = rotor_ops(3);
  const Matrix expected = 2.5 * ops.lz * ops.lz - 2.0 * ops.ux;
  CHECK(oracle::max_abs(hamiltonian(p) - expected) <= 1e-15);

  // Closed form of the 3x3 problem: the odd combination of the two charged levels decouples at 2.5.
  Eigen::SelfAdjointEigenSolver<Matrix> es(hamiltonian(p));
  const double disc = std::sqrt(2.5 * 2.5 + 8.0);
  CHECK(std::abs(es.eigenvalues()(0) - (2.5 - disc) / 2.0) <= 1e-12);
  CHECK(std::abs(es.eigenvalues()(1) - 2.5) <= 1e-12);
  CHECK(std::abs(es.eigenvalues()(2) - (2.5 + disc) / 2.0) <= 1e-12);
}

TEST_CASE("periodic two-site ring counts its link twice") {
  ModelParams p;
  p.n_sites = 2;
  CHECK(links(p).size() == 2);
  const Matrix h = hamiltonian(p);
  // charges (+1, -1): 2.5 + 2.5 on site plus 2 * (2^2 / 2) from the doubled link.
  CHECK(std::abs(h(2, 2).real() - 9.0) <= 1e-15);
  p.boundary = Boundary::open;
  CHECK(links(p).size() == 1);
  CHECK(std::abs(hamiltonian(p)(2, 2).real() - 7.0) <= 1e-15);
}

TEST_CASE("Hamiltonian is Hermitian and charge-conjugation symmetric") {
  for (int n : {2, 3, 4}) {
    ModelParams p;
    p.n_sites = n;
    const Matrix h = hamiltonian(p);
    CHECK(oracle::max_abs(h - h.adjoint()) == 0.0);
    const Matrix c = level_permutation(p, {2, 1, 0});
    CHECK(oracle::max_abs(c * h * c.adjoint() - h) <= 1e-12);
  }
}

TEST_CASE("trial state constants") {
  const GammaState g = gamma_state(5.0);
  CHECK(std::abs(g.b - (6.0 + std::sqrt(48.0)) / 4.0) <= 1e-14);
  CHECK(std::abs(g.b - 3.23205) <= 1e-5);
  CHECK(std::abs(g.amplitudes.norm() - 1.0) <= 1e-15);

  // n' as the norm of U+ |Gamma> by direct product.
  const Vector raised = rotor_ops(3).u_plus * g.amplitudes;
  CHECK(std::abs(raised.norm() - g.n_prime) <= 1e-15);
  CHECK(std::abs(g.n_prime - 0.95899) <= 1e-5);

  ModelParams p;
  CHECK(std::abs(source_state(p).squaredNorm() - g.n_prime * g.n_prime) <= 1e-14);
  CHECK(std::abs(gamma_product(p).norm() - 1.0) <= 1e-14);
  CHECK_THROWS_AS(gamma_state(0.0), Error);
}

TEST_CASE("mean-field ground state is close to the trial state") {
  const MeanFieldReport r = mean_field_check(5.0);
  CHECK(r.fidelity >= 0.9);
  CHECK(r.ground.imag().norm() <= 1e-14);
  CHECK(r.ground(1).real() > 0.0);
}

TEST_CASE("Trotter blocks") {
  ModelParams p;
  const double dt = 0.235;
  const TrotterBlocks b = trotter_blocks(p, dt);
  CHECK(is_diagonal(b.u_v_diag));
  CHECK(unitarity_error(b.u_v_diag) <= 1e-14);
  CHECK(unitarity_error(b.u_x_site) <= 1e-14);
  CHECK(unitarity_error(trotter_step_unitary(p, dt)) <= 1e-12);
  CHECK(oracle::max_abs(b.u_x_site - oracle::expm_taylor(-2.0 * rotor_ops(3).ux, dt)) <= 1e-13);
  CHECK_THROWS_AS(trotter_blocks(p, 0.0), Error);

  ModelParams single;
  single.n_sites = 1;
  single.boundary = Boundary::open;
  for (double small : {1e-2, 1e-3, 1e-4}) {
    const TrotterBlocks s = trotter_blocks(single, small);
    CHECK(two_norm(s.u_v_diag - Matrix::Identity(3, 3)) <= 10.0 * small);
    CHECK(two_norm(s.u_x_site - Matrix::Identity(3, 3)) <= 10.0 * small);
  }
}

TEST_CASE("Trotter step converges at second order in the operator norm") {
  ModelParams p;
  p.n_sites = 2;
  const Matrix h = hamiltonian(p);
  std::vector<double> err;
  for (double dt : {0.1, 0.05, 0.025}) err.push_back(two_norm(trotter_step_unitary(p, dt) - expm_hermitian(h, dt)));
  CHECK(std::abs(slope(0.1, err[0], 0.05, err[1]) - 2.0) <= 0.2);
  CHECK(std::abs(slope(0.05, err[1], 0.025, err[2]) - 2.0) <= 0.2);
}

TEST_CASE("BCH Hamiltonian") {
  ModelParams p;
  p.n_sites = 2;
  CHECK(oracle::max_abs(bch_hamiltonian(p, 0.0) - hamiltonian(p)) == 0.0);
  const Matrix hb = bch_hamiltonian(p, 0.2);
  CHECK(oracle::max_abs(hb - hb.adjoint()) <= 1e-12);

  const double g0 = gap(hamiltonian(p));
  const double d1 = std::abs(gap(bch_hamiltonian(p, 0.1)) - g0);
  const double d2 = std::abs(gap(bch_hamiltonian(p, 0.05)) - g0);
  CHECK(std::abs(slope(0.1, d1, 0.05, d2) - 2.0) <= 0.2);

  // The symmetric form reproduces the propagator spectrum beyond second order.
  std::vector<double> dev;
  for (double dt : {0.1, 0.05}) dev.push_back(std::abs(gap(bch_hamiltonian_symmetric(p, dt)) - eigenphase_gap(p, dt)));
  CHECK(slope(0.1, dev[0], 0.05, dev[1]) > 3.5);
}

TEST_CASE("eigenphase spectrum of a known propagator") {
  std::mt19937_64 rng(11);
  const Matrix g = oracle::random_matrix(6, rng);
  const Matrix h = 3.0 * (g + g.adjoint());
  const double dt = 0.9;
  const EigenphaseResult r = eigenphases(expm_hermitian(h, dt), dt, h, Vector::Zero(6));
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  CHECK((r.spectrum.eigenvalues - es.eigenvalues()).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(r.branch_ambiguous == (es.eigenvalues().cwiseAbs().maxCoeff() * dt >= std::numbers::pi));
}

TEST_CASE("theoretical mass") {
  ModelParams p;
  const MassReference ref = theoretical_mass(p, 0.235);
  CHECK(std::isfinite(ref.mass));
  CHECK(ref.mass > 0.0);
  CHECK(std::abs(ref.spectrum.source_weights.sum() - std::pow(gamma_state(5.0).n_prime, 2)) <= 1e-10);

  // The dominant frequency is the gap of the propagator here.
  CHECK(std::abs(ref.mass - eigenphase_gap(p, 0.235)) <= 1e-9);

  const double cont = continuum_mass(p);
  CHECK(std::abs(cont - gap(hamiltonian(p))) <= 1e-9);
  const double e1 = std::abs(theoretical_mass(p, 0.02).mass - cont);
  const double e2 = std::abs(theoretical_mass(p, 0.01).mass - cont);
  CHECK(e2 < e1);
  CHECK(e2 <= 1e-3);
}

TEST_CASE("theoretical mass is invariant under level relabeling") {
  ModelParams p;
  const double dt = 0.235;
  const double reference = theoretical_mass(p, dt).mass;
  for (const std::vector<int>& perm : {std::vector<int>{2, 1, 0}, {1, 0, 2}, {1, 2, 0}}) {
    const Matrix c = level_permutation(p, perm);
    const Matrix u = c * trotter_step_unitary(p, dt) * c.adjoint();
    const Matrix h = c * hamiltonian(p) * c.adjoint();
    const Vector source = c * source_state(p);
    EigenphaseResult e = eigenphases(u, dt, h, source);
    attach_weights(e.spectrum, c * gamma_product(p), c * readout_operator(p) * c.adjoint(), source);
    CHECK(std::abs(dominant_frequency(e.spectrum) - reference) <= 1e-10);
  }
}

TEST_CASE("dominant frequency groups degenerate levels") {
  SpectralResult s;
  s.eigenvalues = Eigen::VectorXd(4);
  s.eigenvalues << -1.0, 0.5, 0.5, 2.0;
  s.correlator_amplitudes = Eigen::VectorXcd(4);
  s.correlator_amplitudes << 5.0, 0.3, 0.3, 0.5;
  CHECK(std::abs(dominant_frequency(s) - 1.5) <= 1e-15);
  s.correlator_amplitudes << 5.0, 0.3, -0.3, 0.5;
  CHECK(std::abs(dominant_frequency(s) - 3.0) <= 1e-15);
}

TEST_CASE("systematic region") {
  ModelParams p;
  const std::vector<double> dts{0.05, 0.1, 0.2};
  const std::vector<int> ns{20, 40, 80};
  const SystematicMap map = systematic_region(p, dts, ns);
  REQUIRE(map.levels.size() == 3);
  for (std::size_t i = 0; i < dts.size(); ++i)
    for (std::size_t j = 0; j < ns.size(); ++j) {
      const double fft = 2.0 * std::numbers::pi / (dts[i] * ns[j]) / map.m_cont;
      CHECK(map.error[i][j] == std::max(fft, map.trotter_error[i]));
    }
  // Doubling N halves the resolution term exactly.
  const double f20 = 2.0 * std::numbers::pi / (0.1 * 20) / map.m_cont;
  const double f40 = 2.0 * std::numbers::pi / (0.1 * 40) / map.m_cont;
  CHECK(f40 == 0.5 * f20);
  for (std::size_t k = 1; k < map.trotter_error.size(); ++k) CHECK(map.trotter_error[k] >= map.trotter_error[k - 1]);
  CHECK_THROWS_AS(systematic_region(p, {}, ns), Error);
}
