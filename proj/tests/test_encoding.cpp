#include "oracles.hpp"
#include "rotorsim/encoding.hpp"

#include <catch_amalgamated.hpp>

using namespace rotorsim;
using namespace rotorsim::encoding;

namespace {

/// Indices of a qubit register whose rotor pairs avoid |11>.
bool physical_qubit_index(std::size_t index, const RegisterShape& shape, int n_rotors) {
  for (int r = 0; r < n_rotors; ++r)
    if (shape.digit(index, 2 * r) == 1 && shape.digit(index, 2 * r + 1) == 1) return false;
  return true;
}

/// Single-rotor state in the encoding's computational basis (levels map to indices 0..2).
Vector encode_state(const Vector& v, EncodingKind kind) {
  Vector out = Vector::Zero(kind == EncodingKind::qubit ? 4 : 3);
  out.head(3) = v;
  return out;
}

std::size_t count_pauli(const std::vector<ScheduledChannel>& sched) {
  std::size_t n = 0;
  for (const auto& sc : sched) n += std::holds_alternative<std::shared_ptr<const MixedUnitaryChannel>>(sc.channel);
  return n;
}

}  // namespace

TEST_CASE("CSUM and CNOT") {
  const Matrix c = csum();
  // |1>|1> -> |1>|2>
  CHECK(std::abs(c(5, 4) - 1.0) == 0.0);
  CHECK(unitarity_error(c) == 0.0);
  CHECK(oracle::max_abs(c * c * c - Matrix::Identity(9, 9)) == 0.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(std::abs(c(3 * i + (i + j) % 3, 3 * i + j) - 1.0) == 0.0);
  CHECK(oracle::max_abs(cnot() * cnot() - Matrix::Identity(4, 4)) == 0.0);
  CHECK(oracle::max_abs(swap_gate(2) * cnot() * swap_gate(2) - oracle::embed(cnot(), {1, 0}, {2, 2})) == 0.0);
}

TEST_CASE("gate cost table") {
  CHECK(cost_table(Operator::vg, EncodingKind::qubit) == GateCost{3, 2});
  CHECK(cost_table(Operator::vg, EncodingKind::qutrit) == GateCost{2, 0});
  CHECK(cost_table(Operator::cug, EncodingKind::qubit) == GateCost{54, 54});
  CHECK(cost_table(Operator::cug, EncodingKind::qutrit) == GateCost{5, 2});
  CHECK(cost_table(Operator::lz2, EncodingKind::qubit) == GateCost{1, 0});
  CHECK(cost_table(Operator::lz2, EncodingKind::qutrit) == GateCost{2, 0});
  CHECK(cost_table(Operator::ux, EncodingKind::qubit) == GateCost{6, 2});
  CHECK(cost_table(Operator::ux, EncodingKind::qutrit) == GateCost{5, 0});
  CHECK(cost_table(Operator::lzlz, EncodingKind::qubit) == GateCost{4, 26});
  CHECK(cost_table(Operator::lzlz, EncodingKind::qutrit) == GateCost{4, 3});
}

TEST_CASE("encoded operators") {
  const model::RotorOperators ops = model::rotor_ops(3);
  Matrix gen = Matrix::Zero(4, 4), uni = Matrix::Zero(4, 4);
  gen(0, 0) = uni(0, 0) = 1.0;
  gen(2, 2) = uni(2, 2) = -1.0;
  uni(3, 3) = 1.0;
  CHECK(oracle::max_abs(encode_operator(ops.lz, Encoding::qubit(), UnphysicalFill::zero) - gen) == 0.0);
  CHECK(oracle::max_abs(encode_operator(ops.lz, Encoding::qubit()) - uni) == 0.0);
  CHECK(oracle::max_abs(encode_operator(ops.lz, Encoding::qutrit()) - ops.lz) == 0.0);

  std::mt19937_64 rng(41);
  const Matrix u = oracle::random_unitary(9, rng);
  const Matrix enc = encode_rotors(u, 2, EncodingKind::qubit);
  CHECK(unitarity_error(enc) <= 1e-13);
  const RegisterShape shape({2, 2, 2, 2});
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 16; ++j) {
      const bool pi = physical_qubit_index(i, shape, 2), pj = physical_qubit_index(j, shape, 2);
      const auto v = enc(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (pi != pj) CHECK(std::abs(v) == 0.0);
      if (!pi && !pj) CHECK(std::abs(v - (i == j ? 1.0 : 0.0)) == 0.0);
    }
  CHECK_THROWS_AS(encode_rotors(u, 1, EncodingKind::qubit), Error);
}

TEST_CASE("register layout") {
  const RegisterLayout qb(Encoding::qubit(), 4), qt(Encoding::qutrit(), 4);
  CHECK(qb.shape().total_dim() == 512);
  CHECK(qt.shape().total_dim() == 243);
  CHECK(qb.ancilla_site() == 8);
  CHECK(qb.rotor_sites(2) == std::vector<int>{4, 5});
  CHECK(qt.rotor_sites(2) == std::vector<int>{2});
  CHECK(qt.all_rotor_sites() == std::vector<int>{0, 1, 2, 3});
  CHECK_THROWS_AS(qb.rotor_sites(4), Error);
  CHECK(parse_encoding("qubit") == EncodingKind::qubit);
  CHECK_THROWS_AS(parse_encoding("qudit"), Error);
}

TEST_CASE("V_g prepares the trial state") {
  const Vector gamma = model::gamma_state(5.0).amplitudes;
  for (auto enc : {Encoding::qutrit(), Encoding::qubit()}) {
    const CircuitBlock b = vg_block(5.0, enc);
    CHECK(b.unitary.rows() == enc.rotor_dim());
    CHECK((b.unitary.col(0) - encode_state(gamma, enc.kind)).norm() <= 1e-14);
    CHECK(b.cost_2q == static_cast<int>(b.entangling_pairs.size()));
  }
}

TEST_CASE("V_g closed-form angles") {
  const VgAngles a = vg_angles_qutrit(5.0);
  CHECK(std::abs(a.m - 2.31245) <= 1e-5);
  CHECK(a.rho1 == -std::acos(1.0 / a.m));
  CHECK(std::abs(a.rho1 + 1.12360) <= 1e-5);
  const VgAngleReport r = vg_angle_check(5.0);
  CHECK(std::abs(r.circuit_levels.norm() - 1.0) <= 1e-14);
  CHECK(std::abs(r.implied_ratio - 1.8296) <= 1e-4);
  // The tabulated angles do not reproduce b; the block uses the exact state.
  CHECK(r.ratio_mismatch < -0.4);
  CHECK(r.fidelity < 0.95);
}

TEST_CASE("CU_g controlled preparation") {
  const model::GammaState g = model::gamma_state(5.0);
  const Vector excited = model::rotor_ops(3).u_plus * g.amplitudes / g.n_prime;
  for (auto enc : {Encoding::qutrit(), Encoding::qubit()}) {
    const CircuitBlock b = cug_block(5.0, enc);
    const Eigen::Index dr = enc.rotor_dim();
    Vector in = Vector::Zero(b.unitary.rows());
    in(0) = in(dr) = 1.0 / std::sqrt(2.0);
    const Vector out = b.unitary * in;
    const Vector expect_g = encode_state(g.amplitudes, enc.kind);
    const Vector expect_e = encode_state(excited, enc.kind);
    CHECK((out.segment(0, dr) - expect_g / std::sqrt(2.0)).norm() <= 1e-14);
    CHECK((out.segment(dr, dr) - expect_e / std::sqrt(2.0)).norm() <= 1e-14);
    CHECK(b.cost_2q == static_cast<int>(b.entangling_pairs.size()));
  }
}

TEST_CASE("drawn qubit Lz Lz circuit") {
  const GateList gates = uzz_qubit_gatelist(0.3);
  CHECK(entangling_pairs(gates).size() == 26);
  CHECK(std::count_if(gates.begin(), gates.end(), [](const Gate& g) { return g.kind == GateKind::rz; }) == 4);

  // Every Rz commutes past the permutation gates, so C(t) = D(t) C(0) with D diagonal and linear in t.
  const RegisterShape shape({2, 2, 2, 2});
  const Matrix c0 = circuit_unitary(uzz_qubit_gatelist(0.0), shape);
  const Matrix d1 = circuit_unitary(uzz_qubit_gatelist(0.3), shape) * c0.adjoint();
  const Matrix d2 = circuit_unitary(uzz_qubit_gatelist(0.6), shape) * c0.adjoint();
  CHECK(is_diagonal(d1));
  CHECK(oracle::max_abs(d1 * d1 - d2) <= 1e-14);

  const TranscriptionReport rep = uzz_transcription_check(0.235);
  CHECK(rep.leakage_amplitude == 0.0);
  CHECK(rep.distance > 0.1);

  const auto angles = table3_angles();
  CHECK(angles[0] == 1.5902);
  CHECK(angles[3] == 1.5911);
}

TEST_CASE("circuit_unitary identities") {
  const RegisterShape shape({2, 2});
  CHECK(oracle::max_abs(circuit_unitary({}, shape) - Matrix::Identity(4, 4)) == 0.0);
  const GateList twice{{GateKind::cnot, {0, 1}}, {GateKind::cnot, {0, 1}}};
  CHECK(oracle::max_abs(circuit_unitary(twice, shape) - Matrix::Identity(4, 4)) == 0.0);
  const GateList reversed{{GateKind::cnot, {1, 0}}};
  CHECK(oracle::max_abs(circuit_unitary(reversed, shape) - oracle::embed(cnot(), {1, 0}, {2, 2})) == 0.0);
  CHECK_THROWS_AS(circuit_unitary(GateList{{GateKind::rz, {2}, 0.1}}, shape), Error);
}

TEST_CASE("Trotter blocks reproduce the model propagator") {
  model::ModelParams p;
  const double dt = 0.235;
  const RegisterLayout layout(Encoding::qutrit(), p.n_sites);
  const RegisterShape& shape = layout.shape();
  const auto n = static_cast<Eigen::Index>(shape.total_dim());
  Matrix u = Matrix::Identity(n, n);
  auto apply = [&](const CircuitBlock& b) { u = embed(b.unitary, std::span<const int>(b.sites), shape) * u; };
  for (int r = 0; r < p.n_sites; ++r) apply(ux_block(dt, layout, r));
  for (auto [i, j] : model::links(p)) apply(uzz_block(dt, layout, i, j));
  apply(uv_block(p, dt, layout));
  const Matrix expected = kron(model::trotter_step_unitary(p, dt), Matrix::Identity(3, 3));
  CHECK(oracle::max_abs(u - expected) <= 1e-12);
}

TEST_CASE("qubit blocks never connect physical and unphysical states") {
  model::ModelParams p;
  p.n_sites = 2;
  const RegisterLayout layout(Encoding::qubit(), 2);
  const RegisterShape& shape = layout.shape();
  for (const CircuitBlock& b :
       {ux_block(0.235, layout, 1), uzz_block(0.235, layout, 0, 1), uv_block(p, 0.235, layout), vg_block(5.0, layout, 1)}) {
    const Matrix full = embed(b.unitary, std::span<const int>(b.sites), shape);
    double crossing = 0.0;
    for (std::size_t i = 0; i < shape.total_dim(); ++i)
      for (std::size_t j = 0; j < shape.total_dim(); ++j)
        if (physical_qubit_index(i, shape, 2) != physical_qubit_index(j, shape, 2))
          crossing = std::max(crossing, std::abs(full(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
    CHECK(crossing == 0.0);
  }
  // Single-rotor blocks are the identity on |11>.
  CHECK(std::abs(ux_block(0.235, layout, 0).unitary(3, 3) - 1.0) == 0.0);
  CHECK(std::abs(vg_block(5.0, layout, 0).unitary(3, 3) - 1.0) == 0.0);
}

TEST_CASE("leakage") {
  model::ModelParams p;
  p.n_sites = 2;
  const RegisterLayout layout(Encoding::qubit(), 2);
  const Vector gamma_enc = encode_state(model::gamma_state(5.0).amplitudes, EncodingKind::qubit);
  const Vector anc = Vector::Unit(2, 0);
  const Vector psi = kron(kron(Matrix(gamma_enc), Matrix(gamma_enc)), Matrix(anc)).col(0);
  CHECK(leakage(DensityMatrix::pure(layout.shape(), psi), layout) <= 1e-14);

  const RegisterLayout single(Encoding::qubit(), 1);
  CHECK(std::abs(leakage(DensityMatrix::maximally_mixed(single.shape()), single) - 0.25) <= 1e-15);
  const RegisterLayout qt(Encoding::qutrit(), 1);
  CHECK(std::abs(leakage(DensityMatrix::maximally_mixed(qt.shape()), qt) - 1.0 / 3.0) <= 1e-15);
}

TEST_CASE("noise schedules") {
  const RegisterLayout qt(Encoding::qutrit(), 4), qb(Encoding::qubit(), 4);
  noise::NoiseModel nm;
  CHECK(noise_schedule(cug_block(5.0, qb), nm, qb).empty());

  nm.p2 = 0.01;
  nm.tg_over_t1 = 1e-3;
  {
    const auto sched = noise_schedule(uzz_block(0.235, qt, 1, 2), nm, qt);
    CHECK(count_pauli(sched) == 3);
    REQUIRE(sched.size() == 5);
    CHECK(sched[0].sites == std::vector<int>{1, 2});
    const auto& damp = *std::get<std::shared_ptr<const KrausChannel>>(sched[3].channel);
    CHECK(oracle::max_abs(damp.ops()[0] - noise::damping_channel_qutrit(3e-3).ops()[0]) <= 1e-15);
    CHECK(sched[3].sites == std::vector<int>{1});
    CHECK(sched[4].sites == std::vector<int>{2});
  }
  {
    const CircuitBlock b = cug_block(5.0, qb);
    CHECK(b.duration(nm.r1q) == 54.0 + 54.0 * nm.r1q);
    const auto sched = noise_schedule(b, nm, qb);
    CHECK(count_pauli(sched) == 54);
    CHECK(sched.size() == 57);
    const int a = qb.ancilla_site();
    CHECK(sched[0].sites == std::vector<int>{a, 0});
    CHECK(sched[1].sites == std::vector<int>{a, 1});
    CHECK(sched[2].sites == std::vector<int>{0, 1});
    const double t = (54.0 + 54.0 * nm.r1q) * nm.tg_over_t1;
    const auto& damp = *std::get<std::shared_ptr<const KrausChannel>>(sched[54].channel);
    CHECK(oracle::max_abs(damp.ops()[1] - noise::damping_channel_qubit(t).ops()[1]) <= 1e-15);
  }
  {
    const auto sched = noise_schedule(uv_block(model::ModelParams{}, 0.235, qt), nm, qt);
    CHECK(sched.empty());
  }
  nm.idle_damping = true;
  nm.p2 = 0.0;
  CHECK(noise_schedule(ux_block(0.235, qb, 0), nm, qb).size() == 9);
}
