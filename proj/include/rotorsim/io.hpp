// CSV emission and parsing for correlator series, spectra, sweep tables and
// fits. Numbers round-trip through "%.17g"; non-finite values print as inf/nan.

#pragma once

#include "rotorsim/sweep.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace rotorsim::io {

inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_num(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw Error("malformed number: " + s);
  return v;
}

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

/// Header row plus data rows, header checked against `expected`.
inline std::vector<std::vector<std::string>> read_table(std::istream& in, const std::vector<std::string>& expected) {
  std::string line;
  if (!std::getline(in, line)) throw Error("empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (split(line) != expected) throw Error("unexpected CSV header: " + line);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != expected.size()) throw Error("CSV row has wrong column count");
    rows.push_back(std::move(cells));
  }
  return rows;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  return out;
}

// ---------------------------------------------------------------------------

inline const std::vector<std::string> kCorrelatorHeader{"step", "t", "re_c", "im_c", "abs_c"};

inline void write_correlator(std::ostream& out, const pipeline::CorrelatorSeries& s) {
  out << "step,t,re_c,im_c,abs_c\n";
  for (std::size_t k = 0; k < s.values.size(); ++k) {
    const cplx c = s.values[k];
    out << k << ',' << num(static_cast<double>(k) * s.dt) << ',' << num(c.real()) << ',' << num(c.imag()) << ','
        << num(std::abs(c)) << '\n';
  }
}

/// dt is recovered from the t column.
inline pipeline::CorrelatorSeries read_correlator(std::istream& in) {
  const auto rows = read_table(in, kCorrelatorHeader);
  if (rows.size() < 2) throw Error("correlator file needs at least two samples");
  pipeline::CorrelatorSeries s;
  s.dt = parse_num(rows[1][1]) - parse_num(rows[0][1]);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (std::stoul(rows[k][0]) != k) throw Error("correlator steps must be 0..N-1 in order");
    s.values.emplace_back(parse_num(rows[k][2]), parse_num(rows[k][3]));
  }
  if (!(s.dt > 0.0)) throw Error("correlator time column must increase");
  return s;
}

inline void write_spectrum(std::ostream& out, const pipeline::Spectrum& sp) {
  out << "j,omega,re_f,im_f,abs_f\n";
  for (std::size_t j = 0; j < sp.values.size(); ++j)
    out << j << ',' << num(sp.frequencies[j]) << ',' << num(sp.values[j].real()) << ',' << num(sp.values[j].imag())
        << ',' << num(sp.magnitudes[j]) << '\n';
}

inline const std::vector<std::string> kSweepHeader{"encoding", "p2",   "tg_over_t1", "chosen_n",
                                                   "mass",     "delta_e", "accuracy", "leakage_final"};

inline void write_sweep(std::ostream& out, const std::vector<sweep::SweepRecord>& rows) {
  out << "encoding,p2,tg_over_t1,chosen_n,mass,delta_e,accuracy,leakage_final\n";
  for (const auto& r : rows)
    out << encoding::to_string(r.encoding) << ',' << num(r.p2) << ',' << num(r.tg_over_t1) << ',' << r.chosen_n << ','
        << num(r.mass) << ',' << num(r.delta_e) << ',' << num(r.accuracy) << ',' << num(r.leakage_final) << '\n';
}

inline std::vector<sweep::SweepRecord> read_sweep(std::istream& in) {
  std::vector<sweep::SweepRecord> out;
  for (const auto& c : read_table(in, kSweepHeader)) {
    sweep::SweepRecord r;
    r.encoding = encoding::parse_encoding(c[0]);
    r.p2 = parse_num(c[1]);
    r.tg_over_t1 = parse_num(c[2]);
    r.chosen_n = std::stoi(c[3]);
    r.mass = parse_num(c[4]);
    r.delta_e = parse_num(c[5]);
    r.accuracy = parse_num(c[6]);
    r.leakage_final = parse_num(c[7]);
    out.push_back(r);
  }
  return out;
}

inline void write_contours(std::ostream& out, const std::vector<sweep::ContourFit>& fits) {
  out << "encoding,level,fitted,a,b,residual_rms,boundary_points,notice\n";
  for (const auto& f : fits)
    out << encoding::to_string(f.encoding) << ',' << num(f.level) << ',' << (f.fitted ? 1 : 0) << ',' << num(f.intercept)
        << ',' << num(f.slope) << ',' << num(f.residual_rms) << ',' << f.boundary.size() << ',' << f.notice << '\n';
}

inline std::string crossing_text(const sweep::Crossing& c) {
  switch (c.kind) {
    case sweep::Crossing::Kind::found: return num(c.value);
    case sweep::Crossing::Kind::below_range: return "below_range";
    case sweep::Crossing::Kind::above_range: return "unbounded";
  }
  return "nan";
}

inline void write_pauli_fits(std::ostream& out, const std::vector<sweep::ProportionalityFit>& fits) {
  out << "encoding,kappa,points_used,residual_rms,p2_at_20,notice\n";
  for (const auto& f : fits)
    out << encoding::to_string(f.encoding) << ',' << (f.kappa ? num(*f.kappa) : "nan") << ',' << f.points_used << ','
        << num(f.residual_rms) << ',' << crossing_text(f.p2_at_20) << ',' << f.notice << '\n';
}

inline void write_damping_thresholds(std::ostream& out, const std::vector<sweep::DampingThresholds>& ts) {
  out << "encoding,level,tg_over_t1\n";
  for (const auto& t : ts)
    for (const auto& [level, c] : t.thresholds)
      out << encoding::to_string(t.encoding) << ',' << num(level) << ',' << crossing_text(c) << '\n';
}

}  // namespace rotorsim::io
