// Pauli (Weyl) decoherence and amplitude-damping channels for qubits and qutrits.

#pragma once

#include "rotorsim/core.hpp"

#include <numbers>

namespace rotorsim::noise {

struct NoiseModel {
  double p2 = 0.0;          // Pauli probability per entangling gate
  double tg_over_t1 = 0.0;  // entangling-gate duration / T1
  double r1q = 0.1;         // physical one-qudit gate duration / entangling-gate duration
  bool idle_damping = false;

  void validate() const {
    if (!(p2 >= 0.0 && p2 <= 1.0)) throw Error("p2 must lie in [0, 1]");
    if (!(tg_over_t1 >= 0.0)) throw Error("tg_over_t1 must be >= 0");
    if (!(r1q >= 0.0) || !std::isfinite(r1q)) throw Error("r1q must be >= 0");
  }

  bool noiseless() const { return p2 == 0.0 && tg_over_t1 == 0.0; }
};

inline std::vector<Matrix> qubit_paulis() {
  Matrix i = Matrix::Identity(2, 2);
  Matrix x(2, 2), y(2, 2), z(2, 2);
  x << 0, 1, 1, 0;
  y << 0, cplx(0, -1), cplx(0, 1), 0;
  z << 1, 0, 0, -1;
  return {i, x, y, z};
}

struct QutritPauliOps {
  Matrix shift;  // |0> -> |2> -> |1> -> |0>
  Matrix clock;  // diag(1, w, w^2), w = exp(2 pi i / 3)
};

inline QutritPauliOps qutrit_paulis() {
  QutritPauliOps ops;
  ops.shift = Matrix::Zero(3, 3);
  ops.shift(0, 1) = 1.0;
  ops.shift(1, 2) = 1.0;
  ops.shift(2, 0) = 1.0;
  ops.clock = Matrix::Zero(3, 3);
  for (int k = 0; k < 3; ++k) ops.clock(k, k) = std::polar(1.0, 2.0 * std::numbers::pi * k / 3.0);
  return ops;
}

/// Weyl operators X^i Z^j, i, j = 0..2.
inline std::vector<Matrix> qutrit_weyl_basis() {
  const QutritPauliOps ops = qutrit_paulis();
  std::vector<Matrix> out;
  Matrix xi = Matrix::Identity(3, 3);
  for (int i = 0; i < 3; ++i) {
    Matrix zj = Matrix::Identity(3, 3);
    for (int j = 0; j < 3; ++j) {
      out.push_back(xi * zj);
      zj = zj * ops.clock;
    }
    xi = xi * ops.shift;
  }
  return out;
}

namespace detail {

inline std::vector<Matrix> tensor_square(const std::vector<Matrix>& basis) {
  std::vector<Matrix> out;
  out.reserve(basis.size() * basis.size());
  for (const auto& a : basis)
    for (const auto& b : basis) out.push_back(kron(a, b));
  return out;
}

inline void check_arity_and_p(double p, int arity) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error("probability outside [0, 1]");
  if (arity != 1 && arity != 2) throw Error("arity must be 1 or 2");
}

inline void check_time(double t) {
  if (!(t >= 0.0)) throw Error("damping time must be >= 0");
}

}  // namespace detail

/// (1 - p) rho + p/4^n sum over n-qubit Paulis P rho P (identity included).
inline MixedUnitaryChannel pauli_channel_qubit(double p, int arity) {
  detail::check_arity_and_p(p, arity);
  const auto basis = arity == 1 ? qubit_paulis() : detail::tensor_square(qubit_paulis());
  return MixedUnitaryChannel::uniform_twirl(p, basis);
}

/// (1 - p) rho + p/9^n sum over n-qutrit Weyl operators W rho W^dagger.
inline MixedUnitaryChannel pauli_channel_qutrit(double p, int arity) {
  detail::check_arity_and_p(p, arity);
  const auto basis = arity == 1 ? qutrit_weyl_basis() : detail::tensor_square(qutrit_weyl_basis());
  return MixedUnitaryChannel::uniform_twirl(p, basis);
}

inline KrausChannel damping_channel_qubit(double t_over_t1) {
  detail::check_time(t_over_t1);
  const double decay = std::exp(-t_over_t1);
  Matrix k0 = Matrix::Zero(2, 2), k1 = Matrix::Zero(2, 2);
  k0(0, 0) = 1.0;
  k0(1, 1) = std::sqrt(decay);
  k1(0, 1) = std::sqrt(1.0 - decay);
  return KrausChannel({k0, k1});
}

/// |1> decays at 1/T1 and |2> at 2/T1, both directly to |0>.
inline KrausChannel damping_channel_qutrit(double t_over_t1) {
  detail::check_time(t_over_t1);
  const double d1 = std::exp(-t_over_t1);
  const double d2 = std::exp(-2.0 * t_over_t1);
  Matrix k0 = Matrix::Zero(3, 3), k1 = Matrix::Zero(3, 3), k2 = Matrix::Zero(3, 3);
  k0(0, 0) = 1.0;
  k0(1, 1) = std::sqrt(d1);
  k0(2, 2) = std::sqrt(d2);
  k1(0, 1) = std::sqrt(1.0 - d1);
  k2(0, 2) = std::sqrt(1.0 - d2);
  return KrausChannel({k0, k1, k2});
}

inline KrausChannel damping_channel(int local_dim, double t_over_t1) {
  switch (local_dim) {
    case 2: return damping_channel_qubit(t_over_t1);
    case 3: return damping_channel_qutrit(t_over_t1);
    default: throw Error("damping channel defined for d = 2, 3 only");
  }
}

}  // namespace rotorsim::noise
