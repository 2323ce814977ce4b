// Noise-grid sweeps, single-axis studies and threshold contour fits.

#pragma once

#include "rotorsim/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <mutex>
#include <thread>

namespace rotorsim::sweep {

using encoding::EncodingKind;
using pipeline::RunConfig;

inline std::vector<double> log_space(double lo, double hi, int points) {
  if (!(lo > 0.0) || !(hi >= lo) || points < 1) throw Error("log_space: need 0 < lo <= hi and points >= 1");
  if (points == 1) return {lo};
  std::vector<double> out(static_cast<std::size_t>(points));
  const double a = std::log10(lo), b = std::log10(hi);
  for (int i = 0; i < points; ++i) out[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / (points - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

struct SweepGrid {
  std::vector<double> p2_axis;
  std::vector<double> tg_axis;
  std::vector<EncodingKind> encodings{EncodingKind::qubit, EncodingKind::qutrit};
  std::vector<int> n_steps_list{40, 80, 200};

  /// Strictly increasing and positive; a leading zero is allowed as a limit point.
  void validate() const {
    auto check = [](const std::vector<double>& axis, const char* name) {
      if (axis.empty()) throw Error(std::string(name) + " axis is empty");
      for (std::size_t i = 0; i < axis.size(); ++i) {
        const bool ok = axis[i] > 0.0 || (i == 0 && axis[i] == 0.0);
        if (!ok || !std::isfinite(axis[i])) throw Error(std::string(name) + " axis must be positive (leading 0 allowed)");
        if (i > 0 && !(axis[i] > axis[i - 1])) throw Error(std::string(name) + " axis must be strictly increasing");
      }
    };
    check(p2_axis, "p2");
    check(tg_axis, "tg");
    if (encodings.empty()) throw Error("no encodings selected");
    if (n_steps_list.empty()) throw Error("n_steps list is empty");
    for (int n : n_steps_list)
      if (n < 2) throw Error("n_steps entries must be >= 2");
  }

  static SweepGrid desk_default() {
    return {log_space(1e-5, 1e-1, 9), log_space(1e-5, 1.0, 9)};
  }
};

struct SweepRecord {
  EncodingKind encoding = EncodingKind::qutrit;
  double p2 = 0.0;
  double tg_over_t1 = 0.0;
  int chosen_n = 0;
  double mass = std::numeric_limits<double>::quiet_NaN();
  double delta_e = std::numeric_limits<double>::infinity();
  double accuracy = std::numeric_limits<double>::infinity();
  double leakage_final = 0.0;
  double runtime_seconds = 0.0;
};

/// ROTORSIM_THREADS if set to a positive integer, otherwise the hardware count.
inline unsigned worker_count() {
  if (const char* env = std::getenv("ROTORSIM_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs `task(i)` for i in [0, n) on up to `workers` threads. The first
/// exception is rethrown after all workers finish.
template <class Task>
void parallel_for(std::size_t n, unsigned workers, Task&& task) {
  workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto body = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

/// One grid point; failures become unresolved rows.
inline SweepRecord run_point(const RunConfig& base, EncodingKind kind, double p2, double tg,
                             const std::vector<int>& n_list, double e_th) {
  const auto t0 = std::chrono::steady_clock::now();
  SweepRecord rec;
  rec.encoding = kind;
  rec.p2 = p2;
  rec.tg_over_t1 = tg;
  RunConfig c = base;
  c.encoding = encoding::Encoding{kind};
  c.noise.p2 = p2;
  c.noise.tg_over_t1 = tg;
  try {
    const pipeline::BestAccuracy best = pipeline::best_accuracy(c, n_list, e_th);
    rec.chosen_n = best.chosen_n;
    rec.mass = best.estimate.mass;
    rec.delta_e = best.estimate.delta_e;
    rec.accuracy = best.accuracy;
    rec.leakage_final = best.leakage_final;
  } catch (const Error&) {
    rec.chosen_n = 0;
  }
  rec.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

/// Rows ordered by (encoding as listed, p2 ascending, tg ascending) whatever
/// the worker count.
inline std::vector<SweepRecord> run_sweep(const SweepGrid& grid, const RunConfig& base, unsigned workers = worker_count()) {
  grid.validate();
  base.params.validate();
  const double e_th = model::theoretical_mass(base.params, base.dt).mass;
  std::vector<SweepRecord> rows(grid.encodings.size() * grid.p2_axis.size() * grid.tg_axis.size());
  const std::size_t per_enc = grid.p2_axis.size() * grid.tg_axis.size();
  parallel_for(rows.size(), workers, [&](std::size_t i) {
    const auto kind = grid.encodings[i / per_enc];
    const std::size_t rest = i % per_enc;
    const double p2 = grid.p2_axis[rest / grid.tg_axis.size()];
    const double tg = grid.tg_axis[rest % grid.tg_axis.size()];
    rows[i] = run_point(base, kind, p2, tg, grid.n_steps_list, e_th);
  });
  return rows;
}

// ---------------------------------------------------------------------------
// Threshold helpers

/// First upward crossing of `level` along (x, y), interpolated linearly in
/// (log x, y). Non-finite y counts as above every level.
struct Crossing {
  enum class Kind { found, below_range, above_range } kind = Kind::above_range;
  double value = std::numeric_limits<double>::quiet_NaN();
};

inline Crossing log_crossing(const std::vector<double>& x, const std::vector<double>& y, double level) {
  if (x.size() != y.size() || x.empty()) throw Error("log_crossing: size mismatch");
  auto above = [&](std::size_t i) { return !std::isfinite(y[i]) || y[i] > level; };
  if (above(0)) return {Crossing::Kind::below_range, std::numeric_limits<double>::quiet_NaN()};
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (!above(i)) continue;
    if (!(x[i - 1] > 0.0)) return {Crossing::Kind::found, x[i]};
    const double l0 = std::log10(x[i - 1]), l1 = std::log10(x[i]);
    double f = 1.0;
    if (std::isfinite(y[i])) f = (level - y[i - 1]) / (y[i] - y[i - 1]);
    return {Crossing::Kind::found, std::pow(10.0, l0 + f * (l1 - l0))};
  }
  return {};
}

inline double accuracy_floor(const RunConfig& base, const std::vector<int>& n_list, double e_th) {
  const int n = *std::max_element(n_list.begin(), n_list.end());
  return 2.0 * std::numbers::pi / (n * base.dt) / e_th;
}

// ---------------------------------------------------------------------------
// Single-axis studies

struct ProportionalityFit {
  EncodingKind encoding = EncodingKind::qutrit;
  std::optional<double> kappa;  // A = kappa * p2
  int points_used = 0;
  double residual_rms = 0.0;
  Crossing p2_at_20;
  std::string notice;
};

struct PauliStudy {
  std::vector<SweepRecord> rows;
  std::vector<ProportionalityFit> fits;
  double floor = 0.0;
};

/// Least-squares kappa through the origin over points with floor < A <= 0.5.
inline ProportionalityFit fit_proportionality(EncodingKind kind, const std::vector<SweepRecord>& rows, double floor) {
  ProportionalityFit fit;
  fit.encoding = kind;
  double sxy = 0.0, sxx = 0.0;
  std::vector<std::pair<double, double>> used;
  std::vector<double> xs, ys;
  for (const auto& r : rows) {
    if (r.encoding != kind) continue;
    xs.push_back(r.p2);
    ys.push_back(r.accuracy);
    if (std::isfinite(r.accuracy) && r.accuracy > floor && r.accuracy <= 0.5 && r.p2 > 0.0) {
      sxy += r.p2 * r.accuracy;
      sxx += r.p2 * r.p2;
      used.emplace_back(r.p2, r.accuracy);
    }
  }
  fit.points_used = static_cast<int>(used.size());
  fit.p2_at_20 = xs.empty() ? Crossing{} : log_crossing(xs, ys, 0.20);
  if (used.size() < 2) {
    fit.notice = "fit refused: fewer than two points in the linear region";
    return fit;
  }
  fit.kappa = sxy / sxx;
  double ss = 0.0;
  for (auto [x, y] : used) ss += (y - *fit.kappa * x) * (y - *fit.kappa * x);
  fit.residual_rms = std::sqrt(ss / static_cast<double>(used.size()));
  return fit;
}

inline PauliStudy pauli_only_study(const std::vector<double>& p2_axis, const RunConfig& base,
                                   const std::vector<EncodingKind>& encodings = {EncodingKind::qubit, EncodingKind::qutrit},
                                   const std::vector<int>& n_list = {40, 80, 200}, unsigned workers = worker_count()) {
  if (base.noise.tg_over_t1 != 0.0) throw Error("pauli-only study requires tg_over_t1 = 0");
  SweepGrid grid{p2_axis, {0.0}, encodings, n_list};
  PauliStudy study;
  study.rows = run_sweep(grid, base, workers);
  study.floor = accuracy_floor(base, n_list, model::theoretical_mass(base.params, base.dt).mass);
  for (auto kind : encodings) study.fits.push_back(fit_proportionality(kind, study.rows, study.floor));
  return study;
}

struct DampingThresholds {
  EncodingKind encoding = EncodingKind::qutrit;
  std::vector<std::pair<double, Crossing>> thresholds;  // (level, tg_over_t1)
};

struct DampingStudy {
  std::vector<SweepRecord> rows;
  std::vector<DampingThresholds> thresholds;
};

inline DampingStudy damping_only_study(const std::vector<double>& tg_axis, const RunConfig& base,
                                       const std::vector<EncodingKind>& encodings = {EncodingKind::qubit, EncodingKind::qutrit},
                                       const std::vector<int>& n_list = {40, 80, 200},
                                       const std::vector<double>& levels = {0.20, 0.10, 0.05},
                                       unsigned workers = worker_count()) {
  if (base.noise.p2 != 0.0) throw Error("damping-only study requires p2 = 0");
  SweepGrid grid{{0.0}, tg_axis, encodings, n_list};
  DampingStudy study;
  study.rows = run_sweep(grid, base, workers);
  for (auto kind : encodings) {
    DampingThresholds t{kind, {}};
    std::vector<double> xs, ys;
    for (const auto& r : study.rows)
      if (r.encoding == kind) {
        xs.push_back(r.tg_over_t1);
        ys.push_back(r.accuracy);
      }
    for (double level : levels) t.thresholds.emplace_back(level, log_crossing(xs, ys, level));
    study.thresholds.push_back(std::move(t));
  }
  return study;
}

// ---------------------------------------------------------------------------
// Contours

struct ContourFit {
  EncodingKind encoding = EncodingKind::qutrit;
  double level = 0.0;
  bool fitted = false;
  double intercept = std::numeric_limits<double>::quiet_NaN();  // a in T_g/T1 <= a - b p2
  double slope = std::numeric_limits<double>::quiet_NaN();      // b
  double residual_rms = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::pair<double, double>> boundary;  // (p2, tg_over_t1)
  std::string notice;
};

/// Boundary points of {A <= level} from every grid column and row (log
/// interpolation), then least squares tg = a - b p2.
inline ContourFit fit_contour(EncodingKind kind, const std::vector<SweepRecord>& rows, double level) {
  std::vector<double> ps, ts;
  for (const auto& r : rows)
    if (r.encoding == kind) {
      ps.push_back(r.p2);
      ts.push_back(r.tg_over_t1);
    }
  std::sort(ps.begin(), ps.end());
  ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());

  ContourFit fit;
  fit.encoding = kind;
  fit.level = level;
  if (ps.empty() || ts.empty()) {
    fit.notice = "no rows for encoding";
    return fit;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<double>> acc(ps.size(), std::vector<double>(ts.size(), nan));
  for (const auto& r : rows) {
    if (r.encoding != kind) continue;
    const auto i = static_cast<std::size_t>(std::lower_bound(ps.begin(), ps.end(), r.p2) - ps.begin());
    const auto j = static_cast<std::size_t>(std::lower_bound(ts.begin(), ts.end(), r.tg_over_t1) - ts.begin());
    acc[i][j] = r.accuracy;
  }
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const Crossing c = log_crossing(ts, acc[i], level);
    if (c.kind == Crossing::Kind::found) fit.boundary.emplace_back(ps[i], c.value);
  }
  for (std::size_t j = 0; j < ts.size(); ++j) {
    std::vector<double> col(ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i) col[i] = acc[i][j];
    const Crossing c = log_crossing(ps, col, level);
    if (c.kind == Crossing::Kind::found) fit.boundary.emplace_back(c.value, ts[j]);
  }
  std::sort(fit.boundary.begin(), fit.boundary.end());
  fit.boundary.erase(std::unique(fit.boundary.begin(), fit.boundary.end()), fit.boundary.end());
  if (fit.boundary.size() < 2) {
    fit.notice = "fit skipped: boundary absent from grid";
    return fit;
  }

  const double n = static_cast<double>(fit.boundary.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [x, y] : fit.boundary) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double det = n * sxx - sx * sx;
  if (!(std::abs(det) > 0.0)) {
    fit.notice = "fit skipped: degenerate boundary";
    return fit;
  }
  const double beta = (n * sxy - sx * sy) / det;
  fit.intercept = (sy - beta * sx) / n;
  fit.slope = -beta;
  double ss = 0.0;
  for (auto [x, y] : fit.boundary) ss += std::pow(y - (fit.intercept - fit.slope * x), 2);
  fit.residual_rms = std::sqrt(ss / n);
  fit.fitted = true;
  return fit;
}

inline std::vector<ContourFit> fit_contours(const std::vector<SweepRecord>& rows,
                                            const std::vector<double>& levels = {0.20, 0.10, 0.05}) {
  std::vector<EncodingKind> kinds;
  for (const auto& r : rows)
    if (std::find(kinds.begin(), kinds.end(), r.encoding) == kinds.end()) kinds.push_back(r.encoding);
  std::vector<ContourFit> out;
  for (auto k : kinds)
    for (double level : levels) out.push_back(fit_contour(k, rows, level));
  return out;
}

/// Region {p2, tg >= 0 : tg <= a - b p2} of `outer` strictly contains `scale`
/// times that of `inner`: both axis intercepts exceed the scaled ones.
inline bool region_contains_scaled(const ContourFit& outer, const ContourFit& inner, double scale) {
  if (!outer.fitted || !inner.fitted || !(inner.intercept > 0.0) || !(outer.intercept > 0.0)) return false;
  auto p_intercept = [](const ContourFit& f) {
    return f.slope > 0.0 ? f.intercept / f.slope : std::numeric_limits<double>::infinity();
  };
  return outer.intercept > scale * inner.intercept && p_intercept(outer) > scale * p_intercept(inner);
}

}  // namespace rotorsim::sweep
