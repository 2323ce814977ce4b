// One noisy correlator experiment: preparation, Trotterized evolution with
// scheduled noise, correlator readout through the ancilla, and spectral mass
// extraction.

#pragma once

#include "rotorsim/core.hpp"
#include "rotorsim/encoding.hpp"
#include "rotorsim/model.hpp"
#include "rotorsim/noise.hpp"

#include <limits>
#include <numbers>

namespace rotorsim::pipeline {

using encoding::Encoding;
using encoding::RegisterLayout;
using model::ModelParams;
using noise::NoiseModel;

struct RunConfig {
  ModelParams params;
  Encoding encoding = Encoding::qutrit();
  double dt = 0.235;
  int n_steps = 200;
  NoiseModel noise;

  void validate() const {
    params.validate();
    if (params.truncation != 3) throw Error("encodings are defined for truncation 3");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error("dt must be positive");
    if (n_steps < 2) throw Error("n_steps must be >= 2");
    noise.validate();
  }

  RegisterLayout layout() const { return RegisterLayout(encoding, params.n_sites); }
};

/// Precompiled sequence of unitaries and channels on a fixed register.
/// Consecutive twirl channels on the same site set are merged, using
/// D_p o D_q = D_{1-(1-p)(1-q)}.
class Program {
 public:
  explicit Program(RegisterShape shape) : shape_(std::move(shape)) {}

  void add_unitary(const Matrix& u, const std::vector<int>& sites) {
    if (unitarity_error(u) > tol::kUnitaryReject) throw Error("program: operator is not unitary");
    Op op;
    op.kind = Op::Kind::unitary;
    op.map = make_site_map(shape_, sites);
    if (is_diagonal(u)) {
      op.kind = Op::Kind::diagonal;
      op.full_diagonal = rotorsim::detail::full_diagonal(u.diagonal(), op.map);
    } else {
      op.local = u;
    }
    ops_.push_back(std::move(op));
  }

  void add_channel(const encoding::ScheduledChannel& sc) {
    if (const auto* mixed = std::get_if<std::shared_ptr<const MixedUnitaryChannel>>(&sc.channel)) {
      const auto& ch = **mixed;
      if (auto w = ch.twirl_weight()) {
        std::vector<int> sorted = sc.sites;
        std::sort(sorted.begin(), sorted.end());
        if (!ops_.empty() && ops_.back().kind == Op::Kind::twirl && ops_.back().sorted_sites == sorted) {
          ops_.back().weight = 1.0 - (1.0 - ops_.back().weight) * (1.0 - *w);
          return;
        }
        Op op;
        op.kind = Op::Kind::twirl;
        op.map = make_site_map(shape_, sc.sites);
        op.weight = *w;
        op.sorted_sites = std::move(sorted);
        ops_.push_back(std::move(op));
        return;
      }
      std::vector<Matrix> us;
      std::vector<double> ps;
      for (const auto& t : ch.terms()) {
        us.push_back(t.unitary);
        ps.push_back(t.probability);
      }
      push_superop(us, ps, sc.sites);
      return;
    }
    const auto& kraus = *std::get<std::shared_ptr<const KrausChannel>>(sc.channel);
    push_superop(kraus.ops(), std::vector<double>(kraus.ops().size(), 1.0), sc.sites);
  }

  void add_block(const encoding::CircuitBlock& block, const NoiseModel& nm, const RegisterLayout& layout) {
    add_unitary(block.unitary, block.sites);
    for (const auto& sc : encoding::noise_schedule(block, nm, layout)) add_channel(sc);
  }

  void run(DensityMatrix& rho) const {
    for (const auto& op : ops_) {
      switch (op.kind) {
        case Op::Kind::unitary:
          rho.matrix() = rotorsim::detail::conjugate_local(rho.matrix(), op.local, op.map);
          break;
        case Op::Kind::diagonal:
          rotorsim::detail::conjugate_diagonal(rho.matrix(), op.full_diagonal);
          break;
        case Op::Kind::twirl:
          rotorsim::detail::apply_twirl(rho.matrix(), op.weight, op.map);
          break;
        case Op::Kind::superop:
          rotorsim::detail::apply_superop(rho.matrix(), op.local, op.map);
          break;
      }
    }
  }

  std::size_t size() const { return ops_.size(); }

 private:
  struct Op {
    enum class Kind { unitary, diagonal, twirl, superop } kind = Kind::unitary;
    SiteMap map;
    Matrix local;
    Vector full_diagonal;
    double weight = 0.0;
    std::vector<int> sorted_sites;
  };

  void push_superop(const std::vector<Matrix>& ks, const std::vector<double>& ws, const std::vector<int>& sites) {
    Op op;
    op.kind = Op::Kind::superop;
    op.map = make_site_map(shape_, sites);
    op.local = rotorsim::detail::superoperator(ks, ws);
    ops_.push_back(std::move(op));
  }

  RegisterShape shape_;
  std::vector<Op> ops_;
};

/// Ancilla rotation, V_g on rotors 1..N-1, then CU_g on (ancilla, rotor 0);
/// each block followed by its noise schedule.
inline Program preparation_program(const RunConfig& c) {
  const RegisterLayout layout = c.layout();
  Program prog(layout.shape());
  prog.add_block(encoding::ancilla_prep_block(layout), c.noise, layout);
  for (int r = 1; r < c.params.n_sites; ++r) prog.add_block(encoding::vg_block(c.params.g2, layout, r), c.noise, layout);
  prog.add_block(encoding::cug_block(c.params.g2, layout), c.noise, layout);
  return prog;
}

/// One Trotter step: U_x per rotor (ascending), U_zz per link, then the
/// on-site diagonal. The diagonal pieces multiply to exp(-i dt H_V).
inline Program step_program(const RunConfig& c) {
  const RegisterLayout layout = c.layout();
  Program prog(layout.shape());
  for (int r = 0; r < c.params.n_sites; ++r) prog.add_block(encoding::ux_block(c.dt, layout, r), c.noise, layout);
  for (auto [i, j] : model::links(c.params)) prog.add_block(encoding::uzz_block(c.dt, layout, i, j), c.noise, layout);
  prog.add_block(encoding::uv_block(c.params, c.dt, layout), c.noise, layout);
  return prog;
}

inline DensityMatrix prepare_initial(const RunConfig& c) {
  c.validate();
  DensityMatrix rho = DensityMatrix::basis_state(c.layout().shape(), 0);
  preparation_program(c).run(rho);
  return rho;
}

/// sum_x U-_x (x) |0><1|_ancilla on the full register.
inline Matrix correlator_operator(const RegisterLayout& layout) {
  const model::RotorOperators ops = model::rotor_ops(3);
  const Matrix u_minus = encoding::encode_rotors(ops.u_minus, 1, layout.encoding().kind, encoding::UnphysicalFill::zero);
  const int da = layout.encoding().qudit_dim();
  Matrix flip = Matrix::Zero(da, da);
  flip(0, 1) = 1.0;
  const Matrix local = kron(u_minus, flip);
  const auto n = static_cast<Eigen::Index>(layout.shape().total_dim());
  Matrix m = Matrix::Zero(n, n);
  for (int x = 0; x < layout.n_rotors(); ++x) {
    auto sites = layout.rotor_sites(x);
    sites.push_back(layout.ancilla_site());
    m += embed(local, std::span<const int>(sites), layout.shape());
  }
  return m;
}

struct CorrelatorSeries {
  double dt = 0.0;
  std::vector<cplx> values;  // C(k dt), k = 0..N-1
};

struct RunResult {
  CorrelatorSeries series;
  std::vector<double> leakage;      // per sample
  double max_trace_drift = 0.0;
  DensityMatrix final_state;
};

inline constexpr double kTraceAbort = 1e-8;

/// Full run keeping per-sample diagnostics.
inline RunResult run(const RunConfig& c) {
  c.validate();
  const RegisterLayout layout = c.layout();
  DensityMatrix rho = prepare_initial(c);
  const Program step = step_program(c);
  const Matrix meas = correlator_operator(layout);
  const double scale = 2.0 * model::gamma_state(c.params.g2).n_prime;

  RunResult r{{c.dt, {}}, {}, 0.0, rho};
  r.series.values.reserve(static_cast<std::size_t>(c.n_steps));
  for (int k = 0; k < c.n_steps; ++k) {
    if (k > 0) step.run(rho);
    const double drift = std::abs(rho.trace() - cplx(1.0));
    r.max_trace_drift = std::max(r.max_trace_drift, drift);
    if (!(drift <= kTraceAbort)) throw Error("trace drift exceeded 1e-8; run aborted");
    r.series.values.push_back(scale * expectation(rho, meas));
    r.leakage.push_back(encoding::leakage(rho, layout));
  }
  r.final_state = std::move(rho);
  return r;
}

inline CorrelatorSeries evolve_and_record(const RunConfig& c) {
  return run(c).series;
}

struct Spectrum {
  std::vector<double> frequencies;  // 2 pi j / (N dt), j = 0..N-1
  std::vector<double> magnitudes;
  std::vector<cplx> values;
};

/// F_j = sum_k C_k exp(+2 pi i j k / N); a signal exp(-i m t) peaks at omega_j = m.
inline Spectrum spectrum(const CorrelatorSeries& s) {
  const auto n = s.values.size();
  if (n < 2) throw Error("spectrum needs at least two samples");
  Spectrum out;
  out.frequencies.resize(n);
  out.magnitudes.resize(n);
  out.values.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    cplx acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>((j * k) % n) / static_cast<double>(n);
      acc += s.values[k] * std::polar(1.0, angle);
    }
    out.values[j] = acc;
    out.magnitudes[j] = std::abs(acc);
    out.frequencies[j] = 2.0 * std::numbers::pi * static_cast<double>(j) / (static_cast<double>(n) * s.dt);
  }
  return out;
}

inline constexpr double kPeakNoise = 1e-9;

struct MassEstimate {
  double mass = std::numeric_limits<double>::quiet_NaN();
  double delta_e = std::numeric_limits<double>::infinity();
  double accuracy = std::numeric_limits<double>::infinity();
  bool resolved = false;
  std::size_t peak_bin = 0;
};

/// Peak = largest local maximum with j >= 1 (circular neighbours, so the DC
/// shoulder at j = 1 or N-1 never qualifies) standing above the DC-adjacent
/// floor max(|F_1|, |F_N-1|) and above rounding noise. Width = max(bin width, FWHM / 2), FWHM by
/// linear interpolation walking circularly outward from the peak. A peak that
/// never falls to half height is unresolved.
inline MassEstimate extract_mass(const Spectrum& sp, double dt, int n_steps) {
  const auto n = sp.magnitudes.size();
  if (n < 2 || static_cast<int>(n) != n_steps) throw Error("extract_mass: spectrum length does not match n_steps");
  const double bin = 2.0 * std::numbers::pi / (static_cast<double>(n) * dt);
  MassEstimate est;

  const double largest = *std::max_element(sp.magnitudes.begin(), sp.magnitudes.end());
  const double floor = std::max({sp.magnitudes[1], sp.magnitudes[n - 1], kPeakNoise * largest});
  std::optional<std::size_t> best;
  for (std::size_t j = 1; j < n; ++j) {
    const double here = sp.magnitudes[j];
    if (!(here > floor)) continue;
    if (!(here > sp.magnitudes[j - 1]) || !(here >= sp.magnitudes[(j + 1) % n])) continue;
    if (!best || here > sp.magnitudes[*best]) best = j;
  }
  if (!best) return est;
  const std::size_t peak = *best;
  const double top = sp.magnitudes[peak];
  if (!(top > 0.0) || !std::isfinite(top)) return est;
  const double half = 0.5 * top;

  auto crossing = [&](int dir) -> std::optional<double> {
    double prev = top;
    for (std::size_t step = 1; step < n; ++step) {
      const std::size_t idx = dir > 0 ? (peak + step) % n : (peak + n - step) % n;
      const double cur = sp.magnitudes[idx];
      if (cur < half) return static_cast<double>(step - 1) + (prev - half) / (prev - cur);
      prev = cur;
    }
    return std::nullopt;
  };
  const auto right = crossing(+1);
  const auto left = crossing(-1);
  if (!right || !left) return est;

  est.resolved = true;
  est.peak_bin = peak;
  est.mass = sp.frequencies[peak];
  const double fwhm = (*right + *left) * bin;
  est.delta_e = std::max(bin, 0.5 * fwhm);
  return est;
}

/// max(dE / E_th, (E - E_th) / E_th); the second argument keeps its sign.
inline double accuracy(const MassEstimate& est, double e_th) {
  if (!(e_th > 0.0)) throw Error("theoretical mass must be positive");
  if (!est.resolved) return std::numeric_limits<double>::infinity();
  return std::max(est.delta_e / e_th, (est.mass - e_th) / e_th);
}

inline MassEstimate estimate(const CorrelatorSeries& s, double e_th) {
  MassEstimate est = extract_mass(spectrum(s), s.dt, static_cast<int>(s.values.size()));
  est.accuracy = accuracy(est, e_th);
  return est;
}

struct BestAccuracy {
  double accuracy = std::numeric_limits<double>::infinity();
  int chosen_n = 0;
  MassEstimate estimate;
  double leakage_final = 0.0;
  double e_th = 0.0;
};

/// Evaluates every N in `n_list` and keeps the smallest accuracy (first listed
/// wins ties). Runs with a shared dt differ only in length, so one run of
/// max(N) samples supplies every shorter series as a prefix.
inline BestAccuracy best_accuracy(const RunConfig& base, const std::vector<int>& n_list, double e_th) {
  if (n_list.empty()) throw Error("best_accuracy: empty N list");
  RunConfig c = base;
  c.n_steps = *std::max_element(n_list.begin(), n_list.end());
  const RunResult full = run(c);

  BestAccuracy best;
  best.e_th = e_th;
  for (int n : n_list) {
    CorrelatorSeries prefix{c.dt, {full.series.values.begin(), full.series.values.begin() + n}};
    const MassEstimate est = estimate(prefix, e_th);
    if (best.chosen_n == 0 || est.accuracy < best.accuracy) {
      best.accuracy = est.accuracy;
      best.chosen_n = n;
      best.estimate = est;
      best.leakage_final = full.leakage[static_cast<std::size_t>(n - 1)];
    }
  }
  return best;
}

inline BestAccuracy best_accuracy(const RunConfig& base, const std::vector<int>& n_list = {200, 80, 40}) {
  return best_accuracy(base, n_list, model::theoretical_mass(base.params, base.dt).mass);
}

}  // namespace rotorsim::pipeline
