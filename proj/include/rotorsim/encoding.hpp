// Qubit and qutrit encodings of the rotor register as circuit blocks.
//
// Each block carries the exact unitary of the operation it stands for plus
// the gate counts that drive noise insertion. Where the gate-level layout is
// known (the qubit Lz (x) Lz circuit) the entangling pairs follow it; elsewhere
// they are assigned as documented on each builder.

#pragma once

#include "rotorsim/core.hpp"
#include "rotorsim/model.hpp"
#include "rotorsim/noise.hpp"

#include <array>
#include <string_view>
#include <variant>

namespace rotorsim::encoding {

enum class EncodingKind { qubit, qutrit };

inline std::string_view to_string(EncodingKind k) {
  return k == EncodingKind::qubit ? "qubit" : "qutrit";
}

inline EncodingKind parse_encoding(std::string_view s) {
  if (s == "qubit") return EncodingKind::qubit;
  if (s == "qutrit") return EncodingKind::qutrit;
  throw Error("unknown encoding: " + std::string(s));
}

struct Encoding {
  EncodingKind kind = EncodingKind::qutrit;

  int qudits_per_rotor() const { return kind == EncodingKind::qubit ? 2 : 1; }
  int qudit_dim() const { return kind == EncodingKind::qubit ? 2 : 3; }
  int rotor_dim() const { return kind == EncodingKind::qubit ? 4 : 3; }

  /// Computational index of each rotor level: |0>_3 = |00>, |1>_3 = |01>, |2>_3 = |10>.
  std::array<int, 3> level_map() const { return {0, 1, 2}; }

  static Encoding qubit() { return {EncodingKind::qubit}; }
  static Encoding qutrit() { return {EncodingKind::qutrit}; }
};

/// Rotors 0..N-1 followed by one ancilla; a qubit rotor occupies two
/// adjacent qubits (most significant first).
class RegisterLayout {
 public:
  RegisterLayout(Encoding enc, int n_rotors) : enc_(enc), n_rotors_(n_rotors) {
    if (n_rotors < 1) throw Error("layout needs at least one rotor");
    std::vector<int> dims(static_cast<std::size_t>(n_rotors * enc.qudits_per_rotor()), enc.qudit_dim());
    dims.push_back(enc.qudit_dim());
    shape_ = RegisterShape(std::move(dims));
  }

  const Encoding& encoding() const { return enc_; }
  int n_rotors() const { return n_rotors_; }
  const RegisterShape& shape() const { return shape_; }
  int ancilla_site() const { return shape_.n_sites() - 1; }

  std::vector<int> rotor_sites(int rotor) const {
    if (rotor < 0 || rotor >= n_rotors_) throw Error("rotor index out of range");
    const int q = enc_.qudits_per_rotor();
    std::vector<int> s;
    for (int k = 0; k < q; ++k) s.push_back(rotor * q + k);
    return s;
  }

  std::vector<int> all_rotor_sites() const {
    std::vector<int> s;
    for (int r = 0; r < n_rotors_; ++r)
      for (int site : rotor_sites(r)) s.push_back(site);
    return s;
  }

 private:
  Encoding enc_;
  int n_rotors_;
  RegisterShape shape_;
};

// ---------------------------------------------------------------------------
// Gate costs

enum class Operator { vg, cug, lz2, ux, lzlz };

struct GateCost {
  int one_qudit = 0;
  int two_qudit = 0;
  bool operator==(const GateCost&) const = default;
};

inline GateCost cost_table(Operator op, EncodingKind kind) {
  const bool qb = kind == EncodingKind::qubit;
  switch (op) {
    case Operator::vg: return qb ? GateCost{3, 2} : GateCost{2, 0};
    case Operator::cug: return qb ? GateCost{54, 54} : GateCost{5, 2};
    case Operator::lz2: return qb ? GateCost{1, 0} : GateCost{2, 0};
    case Operator::ux: return qb ? GateCost{6, 2} : GateCost{5, 0};
    case Operator::lzlz: return qb ? GateCost{4, 26} : GateCost{4, 3};
  }
  throw Error("unknown operator");
}

struct CostRow {
  std::string_view name;
  Operator op;
};

inline constexpr std::array<CostRow, 5> kCostRows{{
    {"V_g", Operator::vg},
    {"CU_g", Operator::cug},
    {"exp(-i theta (Lz)^2)", Operator::lz2},
    {"exp(-i theta Ux)", Operator::ux},
    {"exp(-i theta Lz Lz)", Operator::lzlz},
}};

// ---------------------------------------------------------------------------
// Gate lists

enum class GateKind { cnot, swap, rz, ry, rx, csum, rot_subspace };

struct Gate {
  GateKind kind;
  std::vector<int> sites;
  double angle = 0.0;
  int level_a = 0;  // rot_subspace levels
  int level_b = 1;
};

using GateList = std::vector<Gate>;

/// |i>|j> -> |i>|(j + i) mod 3>.
inline Matrix csum() {
  Matrix m = Matrix::Zero(9, 9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(3 * i + (j + i) % 3, 3 * i + j) = 1.0;
  return m;
}

inline Matrix cnot() {
  Matrix m = Matrix::Zero(4, 4);
  m(0, 0) = m(1, 1) = m(2, 3) = m(3, 2) = 1.0;
  return m;
}

inline Matrix swap_gate(int d) {
  Matrix m = Matrix::Zero(d * d, d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(j * d + i, i * d + j) = 1.0;
  return m;
}

inline Matrix rz(double angle) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = std::polar(1.0, -angle / 2.0);
  m(1, 1) = std::polar(1.0, angle / 2.0);
  return m;
}

inline Matrix ry(double angle) {
  Matrix m(2, 2);
  const double c = std::cos(angle / 2.0), s = std::sin(angle / 2.0);
  m << c, -s, s, c;
  return m;
}

inline Matrix rx(double angle) {
  Matrix m(2, 2);
  const double c = std::cos(angle / 2.0), s = std::sin(angle / 2.0);
  m << c, cplx(0, -s), cplx(0, -s), c;
  return m;
}

/// Real rotation in the (a, b) plane of a qutrit: |a> -> cos|a> - sin|b>.
inline Matrix rot_subspace(int a, int b, double angle) {
  Matrix m = Matrix::Identity(3, 3);
  m(a, a) = std::cos(angle);
  m(b, b) = std::cos(angle);
  m(b, a) = -std::sin(angle);
  m(a, b) = std::sin(angle);
  return m;
}

inline Matrix gate_matrix(const Gate& g, const RegisterShape& shape) {
  for (int s : g.sites)
    if (s < 0 || s >= shape.n_sites()) throw Error("gate site index out of range");
  if (!std::isfinite(g.angle)) throw Error("gate angle must be finite");
  switch (g.kind) {
    case GateKind::cnot: return cnot();
    case GateKind::swap: return swap_gate(shape.dim(g.sites.at(0)));
    case GateKind::rz: return rz(g.angle);
    case GateKind::ry: return ry(g.angle);
    case GateKind::rx: return rx(g.angle);
    case GateKind::csum: return csum();
    case GateKind::rot_subspace: return rot_subspace(g.level_a, g.level_b, g.angle);
  }
  throw Error("unknown gate");
}

/// Ordered product G_n ... G_1 of the embedded gates.
inline Matrix circuit_unitary(const GateList& gates, const RegisterShape& shape) {
  const auto n = static_cast<Eigen::Index>(shape.total_dim());
  Matrix u = Matrix::Identity(n, n);
  for (const auto& g : gates) u = embed(gate_matrix(g, shape), std::span<const int>(g.sites), shape) * u;
  return u;
}

/// Four-qubit Lz (x) Lz rotation as drawn for the qubit encoding: wires 0, 1
/// hold the first rotor and wires 2, 3 the second.
inline GateList uzz_qubit_gatelist(double theta) {
  const double h = theta / 2.0;
  auto cx = [](int c, int t) { return Gate{GateKind::cnot, {c, t}}; };
  auto sw = [](int a, int b) { return Gate{GateKind::swap, {a, b}}; };
  auto z = [h](int q) { return Gate{GateKind::rz, {q}, h}; };
  return {
      sw(2, 3), cx(1, 2), sw(0, 1), z(2),     cx(2, 3), z(3),     sw(2, 3), cx(2, 1), z(1),
      cx(2, 1), cx(3, 2), sw(2, 3), cx(2, 1), z(1),     cx(2, 1), sw(0, 1), cx(1, 2), sw(2, 3),
  };
}

/// Entangling-gate pairs of a gate list in order; a swap counts as three CNOTs.
inline std::vector<std::pair<int, int>> entangling_pairs(const GateList& gates) {
  std::vector<std::pair<int, int>> out;
  for (const auto& g : gates) {
    if (g.kind == GateKind::cnot || g.kind == GateKind::csum) out.emplace_back(g.sites[0], g.sites[1]);
    if (g.kind == GateKind::swap)
      for (int k = 0; k < 3; ++k) out.emplace_back(g.sites[0], g.sites[1]);
  }
  return out;
}

inline std::array<double, 4> table3_angles() {
  return {1.5902, 1.9847, 2.4373, 1.5911};
}

// ---------------------------------------------------------------------------
// Encoded operators

enum class UnphysicalFill { identity, zero };

/// Embeds an operator on `n_rotors` 3-level rotors into the encoding's
/// computational space; qubit |11> sectors get identity (unitaries) or zero
/// (generators).
inline Matrix encode_rotors(const Matrix& op, int n_rotors, EncodingKind kind,
                            UnphysicalFill fill = UnphysicalFill::identity) {
  Eigen::Index phys = 1;
  for (int r = 0; r < n_rotors; ++r) phys *= 3;
  if (op.rows() != phys || op.cols() != phys) throw Error("encode: operator dimension mismatch");
  if (kind == EncodingKind::qutrit) return op;

  Eigen::Index full = 1;
  for (int r = 0; r < n_rotors; ++r) full *= 4;
  std::vector<Eigen::Index> image(static_cast<std::size_t>(phys));
  for (Eigen::Index a = 0; a < phys; ++a) {
    Eigen::Index rem = a, idx = 0, mult = 1;
    for (int r = 0; r < n_rotors; ++r) {
      idx += (rem % 3) * mult;
      rem /= 3;
      mult *= 4;
    }
    image[static_cast<std::size_t>(a)] = idx;
  }
  Matrix out = Matrix::Zero(full, full);
  if (fill == UnphysicalFill::identity) out.setIdentity();
  for (Eigen::Index a = 0; a < phys; ++a)
    for (Eigen::Index b = 0; b < phys; ++b)
      out(image[static_cast<std::size_t>(a)], image[static_cast<std::size_t>(b)]) = op(a, b);
  return out;
}

inline Matrix encode_operator(const Matrix& op3, Encoding enc, UnphysicalFill fill = UnphysicalFill::identity) {
  return encode_rotors(op3, 1, enc.kind, fill);
}

/// Unitary whose first column is `v` (unit norm), completed by Gram-Schmidt
/// over the standard basis.
inline Matrix unitary_with_first_column(const Vector& v) {
  const auto d = v.size();
  if (std::abs(v.norm() - 1.0) > tol::kValidation) throw Error("first column must be a unit vector");
  Matrix q(d, d);
  q.col(0) = v;
  Eigen::Index filled = 1;
  for (Eigen::Index e = 0; e < d && filled < d; ++e) {
    Vector c = Vector::Unit(d, e);
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index k = 0; k < filled; ++k) c -= q.col(k).dot(c) * q.col(k);
    const double n = c.norm();
    if (n > 1e-6) q.col(filled++) = c / n;
  }
  return q;
}

// ---------------------------------------------------------------------------
// Circuit blocks

enum class BlockLabel { vg, cug, ancilla_prep, u_v, u_x, u_zz, measure_assist };

inline std::string_view to_string(BlockLabel l) {
  switch (l) {
    case BlockLabel::vg: return "vg";
    case BlockLabel::cug: return "cug";
    case BlockLabel::ancilla_prep: return "ancilla_prep";
    case BlockLabel::u_v: return "u_v";
    case BlockLabel::u_x: return "u_x";
    case BlockLabel::u_zz: return "u_zz";
    case BlockLabel::measure_assist: return "measure_assist";
  }
  return "?";
}

struct CircuitBlock {
  BlockLabel label;
  std::vector<int> sites;  // register indices, first is most significant in `unitary`
  Matrix unitary;
  int cost_1q = 0;
  int cost_2q = 0;
  int physical_1q = 0;  // one-qudit gates that take time (Rz-type are virtual)
  std::vector<std::pair<int, int>> entangling_pairs;  // register indices, one per two-qudit gate

  /// Serialized duration in units of the entangling-gate time.
  double duration(double r1q) const { return cost_2q + r1q * physical_1q; }
};

namespace detail {

inline std::vector<std::pair<int, int>> repeat_pair(int a, int b, int n) {
  return std::vector<std::pair<int, int>>(static_cast<std::size_t>(n), {a, b});
}

inline std::vector<int> concat(std::vector<int> a, const std::vector<int>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

inline CircuitBlock make_block(BlockLabel label, std::vector<int> sites, Matrix u, GateCost cost, int physical_1q,
                               std::vector<std::pair<int, int>> pairs) {
  if (unitarity_error(u) > tol::kValidation) throw Error("circuit block unitary is not unitary");
  if (static_cast<int>(pairs.size()) != cost.two_qudit) throw Error("entangling pairs disagree with gate count");
  return {label, std::move(sites), std::move(u), cost.one_qudit, cost.two_qudit, physical_1q, std::move(pairs)};
}

}  // namespace detail

/// Single-rotor preparation |0> -> |Gamma>. Qubit: both CNOTs on the rotor's
/// two qubits; all one-qudit rotations are physical.
inline CircuitBlock vg_block(double g2, const RegisterLayout& layout, int rotor) {
  const auto kind = layout.encoding().kind;
  const Matrix v = unitary_with_first_column(model::gamma_state(g2).amplitudes);
  const auto sites = layout.rotor_sites(rotor);
  const GateCost cost = cost_table(Operator::vg, kind);
  auto pairs = kind == EncodingKind::qubit ? detail::repeat_pair(sites[0], sites[1], cost.two_qudit)
                                           : std::vector<std::pair<int, int>>{};
  return detail::make_block(BlockLabel::vg, sites, encode_rotors(v, 1, kind), cost, cost.one_qudit, std::move(pairs));
}

inline CircuitBlock vg_block(double g2, Encoding enc) {
  return vg_block(g2, RegisterLayout(enc, 1), 0);
}

struct VgAngles {
  double rho1 = 0.0;
  double rho2 = 0.0;
  double m = 0.0;
};

inline VgAngles vg_angles_qutrit(double g2) {
  if (!(g2 > 0.0)) throw Error("g2 must be positive");
  VgAngles a;
  a.m = std::sqrt(2.0 + (1.0 + 2.0 * g2 + std::sqrt(129.0 + 4.0 * g2 + 4.0 * g2 * g2)) / 8.0);
  a.rho1 = -std::acos(1.0 / a.m);
  a.rho2 = -std::acos(1.0 / std::sqrt(a.m * a.m - 1.0));
  return a;
}

struct VgAngleReport {
  VgAngles angles;
  Vector circuit_levels;   // state after both rotations, circuit level order
  Vector charge_amplitudes;  // same state in (+1, 0, -1) order, dominant level mapped to charge 0
  double fidelity = 0.0;   // |<Gamma|state>|^2
  double implied_ratio = 0.0;  // sqrt(M^2 - 2)
  double b = 0.0;
  double ratio_mismatch = 0.0;  // (implied_ratio - b) / b
};

/// Two-rotation preparation from the closed-form angles compared with Gamma.
inline VgAngleReport vg_angle_check(double g2) {
  VgAngleReport r;
  r.angles = vg_angles_qutrit(g2);
  Vector s = Vector::Unit(3, 0);
  s = rot_subspace(0, 1, r.angles.rho1) * s;
  s = rot_subspace(1, 2, r.angles.rho2) * s;
  r.circuit_levels = s;
  // The rotations leave levels 0 and 1 equal and level 2 dominant; the
  // dominant level plays the role of charge 0.
  r.charge_amplitudes = Vector(3);
  r.charge_amplitudes << s(0), s(2), s(1);
  const model::GammaState gamma = model::gamma_state(g2);
  r.fidelity = std::norm(gamma.amplitudes.dot(r.charge_amplitudes));
  r.implied_ratio = std::sqrt(r.angles.m * r.angles.m - 2.0);
  r.b = gamma.b;
  r.ratio_mismatch = (r.implied_ratio - r.b) / r.b;
  return r;
}

/// Controlled source preparation on (ancilla, rotor 0):
/// |0>_r (|0>_a + |1>_a)/sqrt2 -> (|Gamma>|0>_a + U+|Gamma>/N' |1>_a)/sqrt2.
/// Qubit pairs cycle round-robin over (a, q0), (a, q1), (q0, q1).
inline CircuitBlock cug_block(double g2, const RegisterLayout& layout) {
  const auto kind = layout.encoding().kind;
  const model::GammaState gamma = model::gamma_state(g2);
  const model::RotorOperators ops = model::rotor_ops(3);
  const Vector excited = ops.u_plus * gamma.amplitudes / gamma.n_prime;
  const Matrix v_gamma = encode_rotors(unitary_with_first_column(gamma.amplitudes), 1, kind);
  const Matrix v_excited = encode_rotors(unitary_with_first_column(excited), 1, kind);

  const int da = layout.encoding().qudit_dim();
  const auto dr = v_gamma.rows();
  Matrix u = Matrix::Identity(da * dr, da * dr);
  u.block(0, 0, dr, dr) = v_gamma;
  u.block(dr, dr, dr, dr) = v_excited;

  const int anc = layout.ancilla_site();
  const auto rotor = layout.rotor_sites(0);
  const GateCost cost = cost_table(Operator::cug, kind);
  std::vector<std::pair<int, int>> pairs;
  if (kind == EncodingKind::qubit) {
    const std::array<std::pair<int, int>, 3> cycle{{{anc, rotor[0]}, {anc, rotor[1]}, {rotor[0], rotor[1]}}};
    for (int k = 0; k < cost.two_qudit; ++k) pairs.push_back(cycle[static_cast<std::size_t>(k % 3)]);
  } else {
    pairs = detail::repeat_pair(anc, rotor[0], cost.two_qudit);
  }
  return detail::make_block(BlockLabel::cug, detail::concat({anc}, rotor), u, cost, cost.one_qudit, std::move(pairs));
}

inline CircuitBlock cug_block(double g2, Encoding enc) {
  return cug_block(g2, RegisterLayout(enc, 1));
}

/// One physical Ry-type rotation putting the ancilla into (|0> + |1>)/sqrt2.
inline CircuitBlock ancilla_prep_block(const RegisterLayout& layout) {
  const int d = layout.encoding().qudit_dim();
  Matrix u = Matrix::Identity(d, d);
  u.block(0, 0, 2, 2) = ry(std::numbers::pi / 2.0);
  return detail::make_block(BlockLabel::ancilla_prep, {layout.ancilla_site()}, u, GateCost{1, 0}, 1, {});
}

/// exp(-i dt (-2 Ux)) on one rotor. Qubit CNOTs sit on the rotor's two qubits.
inline CircuitBlock ux_block(double dt, const RegisterLayout& layout, int rotor) {
  const auto kind = layout.encoding().kind;
  const Matrix u = expm_hermitian(-2.0 * model::rotor_ops(3).ux, dt);
  const auto sites = layout.rotor_sites(rotor);
  const GateCost cost = cost_table(Operator::ux, kind);
  auto pairs = kind == EncodingKind::qubit ? detail::repeat_pair(sites[0], sites[1], cost.two_qudit)
                                           : std::vector<std::pair<int, int>>{};
  return detail::make_block(BlockLabel::u_x, sites, encode_rotors(u, 1, kind), cost, cost.one_qudit, std::move(pairs));
}

/// Diagonal link term exp(-i dt (Lz_i - Lz_j)^2 / 2). Qubit entangling pairs
/// follow the drawn four-qubit circuit; its one-qudit gates are Rz-type.
inline CircuitBlock uzz_block(double dt, const RegisterLayout& layout, int i, int j) {
  const auto kind = layout.encoding().kind;
  const model::RotorOperators ops = model::rotor_ops(3);
  const Matrix diff = kron(ops.lz, Matrix::Identity(3, 3)) - kron(Matrix::Identity(3, 3), ops.lz);
  const Matrix u = expm_hermitian(0.5 * diff * diff, dt);
  const auto si = layout.rotor_sites(i);
  const auto sj = layout.rotor_sites(j);
  const auto sites = detail::concat(si, sj);
  const GateCost cost = cost_table(Operator::lzlz, kind);
  std::vector<std::pair<int, int>> pairs;
  if (kind == EncodingKind::qubit) {
    for (auto [a, b] : entangling_pairs(uzz_qubit_gatelist(dt)))
      pairs.emplace_back(sites[static_cast<std::size_t>(a)], sites[static_cast<std::size_t>(b)]);
  } else {
    pairs = detail::repeat_pair(si[0], sj[0], cost.two_qudit);
  }
  return detail::make_block(BlockLabel::u_zz, sites, encode_rotors(u, 2, kind), cost, 0, std::move(pairs));
}

/// On-site gauge term exp(-i dt (g2/2) sum_i Lz_i^2) over all rotors; Rz-type, noiseless.
inline CircuitBlock uv_block(const model::ModelParams& p, double dt, const RegisterLayout& layout) {
  const auto kind = layout.encoding().kind;
  const model::RotorOperators ops = model::rotor_ops(3);
  const Matrix site_u = expm_hermitian(0.5 * p.g2 * ops.lz * ops.lz, dt);
  const Matrix enc_u = encode_rotors(site_u, 1, kind);
  Matrix u = Matrix::Ones(1, 1);
  for (int r = 0; r < layout.n_rotors(); ++r) u = kron(u, enc_u);
  const GateCost per_site = cost_table(Operator::lz2, kind);
  const GateCost cost{per_site.one_qudit * layout.n_rotors(), 0};
  return detail::make_block(BlockLabel::u_v, layout.all_rotor_sites(), u, cost, 0, {});
}

// ---------------------------------------------------------------------------
// Diagnostics

struct TranscriptionReport {
  double distance = 0.0;  // max |A - e^{i phi} B| on the physical subspace
  double phase = 0.0;
  double leakage_amplitude = 0.0;  // largest physical -> unphysical transition amplitude
};

/// Drawn qubit Lz (x) Lz circuit against encode(exp(-i theta Lz (x) Lz)).
inline TranscriptionReport uzz_transcription_check(double theta) {
  const RegisterShape shape({2, 2, 2, 2});
  const Matrix circuit = circuit_unitary(uzz_qubit_gatelist(theta), shape);
  const model::RotorOperators ops = model::rotor_ops(3);
  const Matrix target = encode_rotors(expm_hermitian(kron(ops.lz, ops.lz), theta), 2, EncodingKind::qubit);

  std::vector<Eigen::Index> phys, unphys;
  for (Eigen::Index i = 0; i < 16; ++i) ((i / 4) % 4 == 3 || i % 4 == 3 ? unphys : phys).push_back(i);
  Matrix a(9, 9), b(9, 9);
  for (std::size_t r = 0; r < 9; ++r)
    for (std::size_t c = 0; c < 9; ++c) {
      a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = circuit(phys[r], phys[c]);
      b(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = target(phys[r], phys[c]);
    }
  TranscriptionReport rep;
  rep.phase = std::arg((b.adjoint() * a).trace());
  rep.distance = max_abs(a - std::polar(1.0, rep.phase) * b);
  for (auto r : unphys)
    for (auto c : phys) rep.leakage_amplitude = std::max(rep.leakage_amplitude, std::abs(circuit(r, c)));
  return rep;
}

/// Population outside the encoded physical space: any qubit rotor in |11>,
/// or a qutrit ancilla in |2>.
inline double leakage(const DensityMatrix& rho, const RegisterLayout& layout) {
  const RegisterShape& shape = layout.shape();
  const bool qubit = layout.encoding().kind == EncodingKind::qubit;
  double total = 0.0;
  for (std::size_t i = 0; i < shape.total_dim(); ++i) {
    bool bad = false;
    if (qubit) {
      for (int r = 0; r < layout.n_rotors() && !bad; ++r)
        bad = shape.digit(i, 2 * r) == 1 && shape.digit(i, 2 * r + 1) == 1;
    } else {
      bad = shape.digit(i, layout.ancilla_site()) == 2;
    }
    if (bad) total += rho.matrix()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
  }
  return total;
}

// ---------------------------------------------------------------------------
// Noise schedules

struct ScheduledChannel {
  std::variant<std::shared_ptr<const MixedUnitaryChannel>, std::shared_ptr<const KrausChannel>> channel;
  std::vector<int> sites;
};

/// Channels applied after a block's unitary: one two-qudit Pauli channel per
/// entangling gate in gate order, then one aggregated damping per touched
/// qudit (and per idle qudit when idle damping is on).
inline std::vector<ScheduledChannel> noise_schedule(const CircuitBlock& block, const noise::NoiseModel& nm,
                                                    const RegisterLayout& layout) {
  nm.validate();
  std::vector<ScheduledChannel> out;
  const auto kind = layout.encoding().kind;
  if (nm.p2 > 0.0 && !block.entangling_pairs.empty()) {
    auto pauli = std::make_shared<const MixedUnitaryChannel>(
        kind == EncodingKind::qubit ? noise::pauli_channel_qubit(nm.p2, 2) : noise::pauli_channel_qutrit(nm.p2, 2));
    for (auto [a, b] : block.entangling_pairs) out.push_back({pauli, {a, b}});
  }
  const double t = block.duration(nm.r1q) * nm.tg_over_t1;
  if (t > 0.0) {
    auto damp = std::make_shared<const KrausChannel>(noise::damping_channel(layout.encoding().qudit_dim(), t));
    std::vector<int> touched = block.sites;
    if (nm.idle_damping) {
      touched.clear();
      for (int s = 0; s < layout.shape().n_sites(); ++s) touched.push_back(s);
    }
    std::sort(touched.begin(), touched.end());
    for (int s : touched) out.push_back({damp, {s}});
  }
  return out;
}

}  // namespace rotorsim::encoding
