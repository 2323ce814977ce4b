// Invariant suite run by `rotorsim validate`.

#pragma once

#include "rotorsim/pipeline.hpp"

#include <functional>
#include <random>

namespace rotorsim::validate {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;  // measured deviation
  double bound = 0.0;
};

/// Random full-rank density matrix G G^dagger / Tr, G complex Gaussian.
inline Matrix random_density(Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Matrix g(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) g(i, j) = cplx(n01(rng), n01(rng));
  Matrix rho = g * g.adjoint();
  return rho / rho.trace();
}

/// Correlator of the noiseless circuit computed from dense state vectors:
/// <Gamma| U^-k A U^k |source> with U the full-register Trotter step.
inline std::vector<cplx> dense_correlator(const model::ModelParams& p, double dt, int n_samples) {
  const Matrix u = model::trotter_step_unitary(p, dt);
  const Matrix a = model::readout_operator(p);
  Vector probe = model::gamma_product(p);
  Vector source = model::source_state(p);
  std::vector<cplx> out;
  for (int k = 0; k < n_samples; ++k) {
    out.push_back(probe.dot(a * source));
    probe = u * probe;
    source = u * source;
  }
  return out;
}

inline double max_series_difference(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

struct ChannelCase {
  std::string name;
  std::function<void(DensityMatrix&)> apply;
  RegisterShape shape;
};

inline std::vector<ChannelCase> channel_cases(double p, double t) {
  const RegisterShape qb({2, 2, 2}), qt({3, 3});
  auto q1 = std::make_shared<MixedUnitaryChannel>(noise::pauli_channel_qubit(p, 1));
  auto q2 = std::make_shared<MixedUnitaryChannel>(noise::pauli_channel_qubit(p, 2));
  auto t1 = std::make_shared<MixedUnitaryChannel>(noise::pauli_channel_qutrit(p, 1));
  auto t2 = std::make_shared<MixedUnitaryChannel>(noise::pauli_channel_qutrit(p, 2));
  auto dq = std::make_shared<KrausChannel>(noise::damping_channel_qubit(t));
  auto dt = std::make_shared<KrausChannel>(noise::damping_channel_qutrit(t));
  return {
      {"pauli qubit 1q", [q1](DensityMatrix& r) { apply_channel_in_place(r, *q1, std::vector<int>{1}); }, qb},
      {"pauli qubit 2q", [q2](DensityMatrix& r) { apply_channel_in_place(r, *q2, std::vector<int>{2, 0}); }, qb},
      {"pauli qutrit 1q", [t1](DensityMatrix& r) { apply_channel_in_place(r, *t1, std::vector<int>{0}); }, qt},
      {"pauli qutrit 2q", [t2](DensityMatrix& r) { apply_channel_in_place(r, *t2, std::vector<int>{1, 0}); }, qt},
      {"damping qubit", [dq](DensityMatrix& r) { apply_channel_in_place(r, *dq, std::vector<int>{1}); }, qb},
      {"damping qutrit", [dt](DensityMatrix& r) { apply_channel_in_place(r, *dt, std::vector<int>{1}); }, qt},
  };
}

struct ChannelAlgebraReport {
  double max_trace_error = 0.0;
  double max_hermiticity_error = 0.0;
  double max_completeness_error = 0.0;
};

/// `applications` random (state, channel parameter) draws per channel.
inline ChannelAlgebraReport channel_algebra(int applications, std::uint64_t seed = 20240611) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ChannelAlgebraReport rep;
  for (int i = 0; i < applications; ++i) {
    const double p = unit(rng);
    const double t = 3.0 * unit(rng);
    for (auto& c : channel_cases(p, t)) {
      const Matrix start = random_density(static_cast<Eigen::Index>(c.shape.total_dim()), rng);
      DensityMatrix rho(c.shape, start);
      c.apply(rho);
      rep.max_trace_error = std::max(rep.max_trace_error, std::abs(rho.trace() - start.trace()));
      rep.max_hermiticity_error = std::max(rep.max_hermiticity_error, max_abs(rho.matrix() - rho.matrix().adjoint()));
    }
    for (const auto& k : {noise::damping_channel_qubit(t), noise::damping_channel_qutrit(t)}) {
      Matrix sum = Matrix::Zero(k.dim(), k.dim());
      for (const auto& op : k.ops()) sum += op.adjoint() * op;
      rep.max_completeness_error = std::max(rep.max_completeness_error, max_abs(sum - Matrix::Identity(k.dim(), k.dim())));
    }
  }
  return rep;
}

inline std::vector<CheckResult> run_all() {
  std::vector<CheckResult> out;
  auto add = [&](std::string name, double value, double bound) {
    out.push_back({std::move(name), value <= bound, value, bound});
  };

  const ChannelAlgebraReport ch = channel_algebra(100);
  add("channel trace preservation", ch.max_trace_error, 1e-12);
  add("channel hermiticity preservation", ch.max_hermiticity_error, 1e-12);
  add("kraus completeness", ch.max_completeness_error, 1e-10);

  model::ModelParams small;
  small.n_sites = 2;
  const auto oracle = dense_correlator(small, 0.235, 40);
  std::vector<cplx> by_encoding[2];
  for (auto kind : {encoding::EncodingKind::qubit, encoding::EncodingKind::qutrit}) {
    pipeline::RunConfig c;
    c.params = small;
    c.encoding = encoding::Encoding{kind};
    c.n_steps = 40;
    const pipeline::RunResult r = pipeline::run(c);
    const std::string tag(encoding::to_string(kind));
    add("noiseless pipeline equals dense oracle (" + tag + ")", max_series_difference(r.series.values, oracle), 1e-10);
    double leak = 0.0;
    for (double l : r.leakage) leak = std::max(leak, l);
    add("noiseless leakage (" + tag + ")", leak, 1e-10);
    add("determinism (" + tag + ")", max_series_difference(r.series.values, pipeline::run(c).series.values), 0.0);
    by_encoding[kind == encoding::EncodingKind::qubit ? 0 : 1] = r.series.values;

    c.noise.p2 = 0.1;
    c.noise.tg_over_t1 = 1.0;
    c.noise.idle_damping = true;
    const pipeline::RunResult noisy = pipeline::run(c);
    add("trace drift at worst noise corner (" + tag + ")", noisy.max_trace_drift, 1e-9);
    const DensityDiagnostics diag = check_density(noisy.final_state);
    add("final state positivity (" + tag + ")", std::max(0.0, -diag.min_eigenvalue), -tol::kMinEigenvalue);
  }
  add("qubit and qutrit series agree", max_series_difference(by_encoding[0], by_encoding[1]), 1e-10);

  {
    pipeline::CorrelatorSeries s{0.235, by_encoding[1]}, rotated = s;
    for (auto& v : rotated.values) v *= std::polar(1.0, 0.7);
    const auto a = pipeline::extract_mass(pipeline::spectrum(s), s.dt, 40);
    const auto b = pipeline::extract_mass(pipeline::spectrum(rotated), s.dt, 40);
    add("mass invariant under global phase", std::abs(a.mass - b.mass) + std::abs(a.delta_e - b.delta_e), 1e-9);
  }

  {
    model::ModelParams p;
    const Matrix h = model::hamiltonian(p);
    const auto n = static_cast<Eigen::Index>(p.shape().total_dim());
    Matrix conj = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index flipped = 0;
      for (int s = 0; s < p.n_sites; ++s) flipped = flipped * 3 + (2 - p.shape().digit(static_cast<std::size_t>(i), s));
      conj(flipped, i) = 1.0;
    }
    add("charge conjugation symmetry", max_abs(conj * h * conj.adjoint() - h), 1e-12);
    add("trotter step unitarity", unitarity_error(model::trotter_step_unitary(p, 0.235)), 1e-12);
  }
  return out;
}

}  // namespace rotorsim::validate
