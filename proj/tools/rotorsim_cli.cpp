// rotorsim command-line front end.

#include "rotorsim/rotorsim.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>

namespace {

using namespace rotorsim;
using nlohmann::ordered_json;

struct Options {
  std::string encoding = "qutrit";
  int sites = 4;
  double g2 = 5.0;
  double dt = 0.235;
  std::vector<int> steps{40, 80, 200};
  double p2 = 0.0;
  double tg_over_t1 = 0.0;
  double r1q = 0.1;
  bool idle_damping = false;
  std::string boundary = "periodic";
  double p2_min = 1e-5, p2_max = 1e-1;
  int p2_points = 9;
  double tg_min = 1e-5, tg_max = 1.0;
  int tg_points = 9;
  std::string out;
  std::string in;
  bool stamp = false;
  bool encoding_given = false;
};

pipeline::RunConfig run_config(const Options& o) {
  pipeline::RunConfig c;
  c.params.g2 = o.g2;
  c.params.n_sites = o.sites;
  c.params.boundary = o.boundary == "open" ? model::Boundary::open : model::Boundary::periodic;
  c.encoding = encoding::Encoding{encoding::parse_encoding(o.encoding)};
  c.dt = o.dt;
  c.n_steps = *std::max_element(o.steps.begin(), o.steps.end());
  c.noise = {o.p2, o.tg_over_t1, o.r1q, o.idle_damping};
  c.validate();
  return c;
}

std::vector<encoding::EncodingKind> selected_encodings(const Options& o) {
  if (o.encoding_given) return {encoding::parse_encoding(o.encoding)};
  return {encoding::EncodingKind::qubit, encoding::EncodingKind::qutrit};
}

ordered_json manifest(const std::string& command, const Options& o, const std::vector<std::string>& outputs) {
  ordered_json j;
  j["tool"] = "rotorsim";
  j["version"] = kVersion;
  j["command"] = command;
  j["parameters"] = {
      {"encoding", o.encoding_given ? ordered_json(o.encoding) : ordered_json(command == "simulate" ? o.encoding : "both")},
      {"sites", o.sites},
      {"g2", o.g2},
      {"dt", o.dt},
      {"steps", o.steps},
      {"p2", o.p2},
      {"tg_over_t1", o.tg_over_t1},
      {"r1q", o.r1q},
      {"idle_damping", o.idle_damping},
      {"boundary", o.boundary},
      {"p2_min", o.p2_min},
      {"p2_max", o.p2_max},
      {"p2_points", o.p2_points},
      {"tg_min", o.tg_min},
      {"tg_max", o.tg_max},
      {"tg_points", o.tg_points},
      {"in", o.in},
  };
  j["outputs"] = outputs;
  if (o.stamp) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    j["timestamp"] = buf;
  }
  return j;
}

void write_manifest(const std::string& out, const std::string& command, const Options& o,
                    const std::vector<std::string>& outputs) {
  auto f = io::open_out(out + ".manifest.json");
  f << manifest(command, o, outputs).dump(2) << '\n';
}

std::string sibling(const std::string& path, const std::string& suffix) {
  std::filesystem::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix + p.extension().string())).string();
}

std::string out_or(const Options& o, const char* fallback) {
  return o.out.empty() ? std::string(fallback) : o.out;
}

int cmd_simulate(const Options& o) {
  const auto c = run_config(o);
  const auto series = pipeline::evolve_and_record(c);
  const std::string out = out_or(o, "correlator.csv");
  auto f = io::open_out(out);
  io::write_correlator(f, series);
  write_manifest(out, "simulate", o, {out});
  std::cout << "wrote " << series.values.size() << " samples to " << out << '\n';
  return 0;
}

int cmd_mass(const Options& o) {
  auto in = io::open_in(o.in.empty() ? "correlator.csv" : o.in);
  const auto series = io::read_correlator(in);
  auto params = run_config(o).params;
  const auto ref = model::theoretical_mass(params, series.dt);
  const auto est = pipeline::estimate(series, ref.mass);
  const double bin = 2.0 * std::numbers::pi / (static_cast<double>(series.values.size()) * series.dt);
  std::cout << "n_samples " << series.values.size() << "\nmass " << io::num(est.mass) << "\ndelta_e "
            << io::num(est.delta_e) << "\ne_th " << io::num(ref.mass) << "\naccuracy " << io::num(est.accuracy)
            << "\nbin_width " << io::num(bin) << '\n';
  if (!o.out.empty()) {
    auto f = io::open_out(o.out);
    f << "n_samples,dt,mass,delta_e,e_th,accuracy\n"
      << series.values.size() << ',' << io::num(series.dt) << ',' << io::num(est.mass) << ',' << io::num(est.delta_e)
      << ',' << io::num(ref.mass) << ',' << io::num(est.accuracy) << '\n';
    write_manifest(o.out, "mass", o, {o.out});
  }
  return est.resolved ? 0 : 3;
}

int cmd_spectrum(const Options& o) {
  auto in = io::open_in(o.in.empty() ? "correlator.csv" : o.in);
  const auto sp = pipeline::spectrum(io::read_correlator(in));
  const std::string out = out_or(o, "spectrum.csv");
  auto f = io::open_out(out);
  io::write_spectrum(f, sp);
  write_manifest(out, "spectrum", o, {out});
  return 0;
}

int cmd_sweep(const Options& o) {
  const auto base = run_config(o);
  sweep::SweepGrid grid{sweep::log_space(o.p2_min, o.p2_max, o.p2_points),
                        sweep::log_space(o.tg_min, o.tg_max, o.tg_points), selected_encodings(o), o.steps};
  const auto rows = sweep::run_sweep(grid, base);
  const std::string out = out_or(o, "sweep.csv");
  auto f = io::open_out(out);
  io::write_sweep(f, rows);
  write_manifest(out, "sweep", o, {out});
  std::cout << "wrote " << rows.size() << " rows to " << out << '\n';
  return 0;
}

int cmd_pauli_study(Options o) {
  o.tg_over_t1 = 0.0;
  const auto base = run_config(o);
  const auto study = sweep::pauli_only_study(sweep::log_space(o.p2_min, o.p2_max, o.p2_points), base,
                                             selected_encodings(o), o.steps);
  const std::string out = out_or(o, "pauli_study.csv");
  const std::string fit_out = sibling(out, "_fit");
  auto f = io::open_out(out);
  io::write_sweep(f, study.rows);
  auto g = io::open_out(fit_out);
  io::write_pauli_fits(g, study.fits);
  write_manifest(out, "pauli-study", o, {out, fit_out});
  io::write_pauli_fits(std::cout, study.fits);
  return 0;
}

int cmd_damping_study(Options o) {
  o.p2 = 0.0;
  const auto base = run_config(o);
  const auto study = sweep::damping_only_study(sweep::log_space(o.tg_min, o.tg_max, o.tg_points), base,
                                               selected_encodings(o), o.steps);
  const std::string out = out_or(o, "damping_study.csv");
  const std::string thr_out = sibling(out, "_thresholds");
  auto f = io::open_out(out);
  io::write_sweep(f, study.rows);
  auto g = io::open_out(thr_out);
  io::write_damping_thresholds(g, study.thresholds);
  write_manifest(out, "damping-study", o, {out, thr_out});
  io::write_damping_thresholds(std::cout, study.thresholds);
  return 0;
}

int cmd_contours(const Options& o) {
  auto in = io::open_in(o.in.empty() ? "sweep.csv" : o.in);
  const auto rows = io::read_sweep(in);
  const auto fits = sweep::fit_contours(rows);
  const std::string out = out_or(o, "contours.csv");
  auto f = io::open_out(out);
  io::write_contours(f, fits);
  write_manifest(out, "contours", o, {out});
  io::write_contours(std::cout, fits);
  const sweep::ContourFit* qubit = nullptr;
  const sweep::ContourFit* qutrit = nullptr;
  for (const auto& fit : fits)
    if (fit.level == 0.20) (fit.encoding == encoding::EncodingKind::qubit ? qubit : qutrit) = &fit;
  if (qubit && qutrit)
    std::cout << "qutrit 20% region contains 10x qubit region: "
              << (sweep::region_contains_scaled(*qutrit, *qubit, 10.0) ? "yes" : "no") << '\n';
  return 0;
}

int cmd_costs() {
  std::cout << "Operator & 1-qubit & 2-qubit & 1 qutrit & 2-qutrit\n";
  for (const auto& row : encoding::kCostRows) {
    const auto qb = encoding::cost_table(row.op, encoding::EncodingKind::qubit);
    const auto qt = encoding::cost_table(row.op, encoding::EncodingKind::qutrit);
    std::cout << row.name << " & " << qb.one_qudit << " & " << qb.two_qudit << " & " << qt.one_qudit << " & "
              << qt.two_qudit << '\n';
  }
  return 0;
}

int cmd_validate() {
  bool ok = true;
  for (const auto& c : validate::run_all()) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << "  value=" << io::num(c.value) << " bound=" << io::num(c.bound)
              << '\n';
    ok = ok && c.passed;
  }
  std::cout << (ok ? "all invariants hold\n" : "invariant violations found\n");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noisy mass-gap simulator for truncated scalar QED on qubits and qutrits", "rotorsim"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.failure_message(CLI::FailureMessage::help);
  app.set_config("--config", "", "Key-value file mirroring the flags; flags win");

  Options o;
  app.add_option("--encoding", o.encoding, "qubit or qutrit")->check(CLI::IsMember({"qubit", "qutrit"}));
  app.add_option("--sites", o.sites, "Number of rotors")->check(CLI::Range(1, 5));
  app.add_option("--g2", o.g2, "Coupling g^2")->check(CLI::PositiveNumber);
  app.add_option("--dt", o.dt, "Trotter step")->check(CLI::PositiveNumber);
  app.add_option("--steps", o.steps, "Comma list of sample counts")->delimiter(',')->check(CLI::Range(2, 100000));
  app.add_option("--p2", o.p2, "Pauli probability per entangling gate")->check(CLI::Range(0.0, 1.0));
  app.add_option("--tg-over-t1", o.tg_over_t1, "Entangling gate time over T1")->check(CLI::NonNegativeNumber);
  app.add_option("--r1q", o.r1q, "One-qudit gate time over entangling gate time")->check(CLI::NonNegativeNumber);
  app.add_flag("--idle-damping", o.idle_damping, "Damp idle qudits too");
  app.add_option("--boundary", o.boundary, "periodic or open")->check(CLI::IsMember({"periodic", "open"}));
  app.add_option("--p2-min", o.p2_min)->check(CLI::PositiveNumber);
  app.add_option("--p2-max", o.p2_max)->check(CLI::PositiveNumber);
  app.add_option("--p2-points", o.p2_points)->check(CLI::Range(1, 1000));
  app.add_option("--tg-min", o.tg_min)->check(CLI::PositiveNumber);
  app.add_option("--tg-max", o.tg_max)->check(CLI::PositiveNumber);
  app.add_option("--tg-points", o.tg_points)->check(CLI::Range(1, 1000));
  app.add_option("--out", o.out, "Output path");
  app.add_option("--in", o.in, "Input CSV (mass, spectrum, contours)");
  app.add_flag("--stamp", o.stamp, "Add a timestamp to the manifest");

  auto* simulate = app.add_subcommand("simulate", "Run one configuration and write the correlator CSV");
  auto* mass = app.add_subcommand("mass", "Extract the mass from a correlator CSV");
  auto* spectrum = app.add_subcommand("spectrum", "Write the DFT of a correlator CSV");
  auto* sweep_cmd = app.add_subcommand("sweep", "Accuracy over a (p2, tg/T1) grid");
  auto* pauli = app.add_subcommand("pauli-study", "Accuracy versus p2 with tg/T1 = 0, proportionality fit");
  auto* damping = app.add_subcommand("damping-study", "Accuracy versus tg/T1 with p2 = 0, thresholds");
  auto* contours = app.add_subcommand("contours", "Fit accuracy contours from a sweep CSV");
  auto* costs = app.add_subcommand("costs", "Print the gate cost table");
  auto* validate_cmd = app.add_subcommand("validate", "Run the invariant suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  o.encoding_given = app.count("--encoding") > 0;

  try {
    if (*simulate) return cmd_simulate(o);
    if (*mass) return cmd_mass(o);
    if (*spectrum) return cmd_spectrum(o);
    if (*sweep_cmd) return cmd_sweep(o);
    if (*pauli) return cmd_pauli_study(o);
    if (*damping) return cmd_damping_study(o);
    if (*contours) return cmd_contours(o);
    if (*costs) return cmd_costs();
    if (*validate_cmd) return cmd_validate();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
