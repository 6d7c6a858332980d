// semiclassic: command-line front end for the Hartree/Vlasov laboratory.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "semiclassic/error.hpp"
#include "semiclassic/harness.hpp"
#include "semiclassic/initial.hpp"
#include "semiclassic/io.hpp"
#include "semiclassic/metrics.hpp"

namespace fs = std::filesystem;
using namespace semiclassic;
using nlohmann::json;

namespace {

enum Exit { ok = 0, config_failure = 2, numerical_failure = 3, check_failure = 4 };

struct Options {
  std::string config;
  std::string out;
  std::string in;
  bool check = false;
  int jobs = 0;
  std::size_t index = 0;
};

ExperimentConfig load(const Options& o) {
  ExperimentConfig cfg = load_config(o.config);
  if (o.jobs > 0) cfg.jobs = o.jobs;
  return cfg;
}

void emit(const json& doc, const Options& o, const std::string& file) {
  if (o.out.empty()) {
    std::cout << doc.dump(2) << '\n';
    return;
  }
  fs::create_directories(o.out);
  std::ofstream out(fs::path(o.out) / file);
  out << doc.dump(2) << '\n';
  if (!out) throw ConfigError("cannot write " + (fs::path(o.out) / file).string());
}

void print_slopes(const ComparisonReport& report) {
  for (const auto& s : report.slopes) {
    std::cerr << to_string(s.metric) << " t=" << s.t << " slope=";
    if (s.fit.slope)
      std::cerr << *s.fit.slope << " +- " << s.fit.std_error;
    else
      std::cerr << "null (" << s.fit.reason << ")";
    std::cerr << " points=" << s.fit.points << '\n';
  }
}

int report_check(const std::optional<CheckOutcome>& check) {
  if (!check) return ok;
  for (const auto& f : check->failures) std::cerr << "check failed: " << f << '\n';
  std::cerr << (check->pass ? "check passed\n" : "check FAILED\n");
  return check->pass ? ok : check_failure;
}

int cmd_run(const Options& o) {
  const ExperimentConfig cfg = load(o);
  RunOptions ro;
  ro.keep_final_states = !o.out.empty();
  const PairResult run = run_pair(cfg, o.index, ro);
  json doc = to_json(run);
  doc["schema"] = kReportSchema;
  emit(doc, o, "run.json");
  if (!o.out.empty()) {
    write_kernel(fs::path(o.out) / "hartree_final.bin", *run.final_op);
    write_phase(fs::path(o.out) / "vlasov_final.bin", *run.final_wigner);
  }
  return ok;
}

int cmd_sweep(const Options& o) {
  ExperimentConfig cfg = load(o);
  if (o.check && !cfg.check) cfg.check = CheckSpec{};
  if (!o.check) cfg.check.reset();
  const ComparisonReport report = sweep(cfg);
  if (o.out.empty())
    std::cout << to_json(report).dump(2) << '\n';
  else
    write_reports(report, o.out);
  print_slopes(report);
  for (const auto& f : report.failures) std::cerr << "eps=" << f.eps << " failed (" << f.kind << "): " << f.message << '\n';
  if (!report.complete) {
    const bool config = std::all_of(report.failures.begin(), report.failures.end(),
                                    [](const RunFailure& f) { return f.kind == "config"; });
    return config ? config_failure : numerical_failure;
  }
  return report_check(report.check);
}

int cmd_residuals(const Options& o) {
  ExperimentConfig cfg = load(o);
  if (o.check && !cfg.check) cfg.check = CheckSpec{};
  if (!o.check) cfg.check.reset();
  const ResidualSweep res = residual_sweep(cfg);
  emit(to_json(res), o, "residuals.json");
  return report_check(res.check);
}

int cmd_norms(const Options& o) {
  NormReport report;
  json doc;
  if (peek_dump_kind(o.in) == DumpKind::kernel) {
    const DensityOperator op = read_kernel(o.in);
    report.trace_norm = trace_norm(op);
    report.hs_norm = hs_norm(op);
    report.commutators = commutator_norms(op);
    doc = to_json(report);
    doc["kind"] = "kernel";
  } else {
    const PhaseSpaceDensity W = read_phase(o.in);
    report.hs_norm = W.l2_norm();
    for (int s : {0, 1, 2, 3, 4})
      for (int a : {0, 1, 2, 4}) report.sobolev[{s, a}] = sobolev_norm(W, s, a);
    doc = to_json(report);
    doc["kind"] = "phase";
  }
  doc["schema"] = kReportSchema;
  emit(doc, o, "norms.json");
  return ok;
}

int cmd_dump(const Options& o) {
  const ExperimentConfig cfg = load(o);
  if (o.index >= cfg.N.size()) throw ConfigError("eps index out of range");
  InitialOptions io;
  io.max_leak = cfg.max_leak;
  io.measure_commutators = false;
  const InitialState init = build_initial_state(Profile(cfg.profile_name, cfg.profile_params, cfg.dim),
                                                cfg.N[o.index], cfg.eps(o.index), cfg.grid(o.index), io);
  fs::create_directories(o.out);
  write_kernel(fs::path(o.out) / "omega.bin", init.op);
  write_phase(fs::path(o.out) / "wigner.bin", init.wigner);
  std::cout << json{{"omega", (fs::path(o.out) / "omega.bin").string()},
                    {"wigner", (fs::path(o.out) / "wigner.bin").string()},
                    {"clip_magnitude", init.clip_magnitude}}
                   .dump(2)
            << '\n';
  return ok;
}

int cmd_load(const Options& o) {
  json doc;
  if (peek_dump_kind(o.in) == DumpKind::kernel) {
    const DensityOperator op = read_kernel(o.in);
    doc = {{"kind", "kernel"}, {"dim", op.grid.dim()},     {"points", op.grid.points()},
           {"length", op.grid.length()}, {"eps", op.eps}, {"N", op.N},
           {"trace", op.trace()}};
  } else {
    const PhaseSpaceDensity W = read_phase(o.in);
    doc = {{"kind", "phase"},         {"dim", W.grid.dim()},
           {"points", W.grid.spatial().points()}, {"velocity_points", W.grid.velocity_points()},
           {"length", W.grid.spatial().length()}, {"v_max", W.grid.v_max()},
           {"eps", W.eps},            {"N", W.N},
           {"mass", W.mass().real()}};
  }
  std::cout << doc.dump(2) << '\n';
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semiclassical Hartree/Vlasov laboratory", "semiclassic"};
  app.require_subcommand(1);
  Options o;

  auto* run = app.add_subcommand("run", "Evolve one Hartree/Vlasov pair and report its distances");
  run->add_option("--config", o.config, "experiment config (JSON)")->required();
  run->add_option("--index", o.index, "position in the N list");
  run->add_option("--out", o.out, "directory for run.json and final-state dumps");

  auto* sw = app.add_subcommand("sweep", "Run every eps of a config and fit convergence slopes");
  sw->add_option("--config", o.config, "experiment config (JSON)")->required();
  sw->add_option("--out", o.out, "directory for report.json and report.csv");
  sw->add_flag("--check", o.check, "exit 4 when a slope leaves its band");
  sw->add_option("--jobs", o.jobs, "worker threads (overrides the config)");

  auto* res = app.add_subcommand("residuals", "Residual-operator diagnostics across the eps list");
  res->add_option("--config", o.config, "experiment config (JSON)")->required();
  res->add_option("--out", o.out, "directory for residuals.json");
  res->add_flag("--check", o.check, "exit 4 when a residual slope leaves its band");
  res->add_option("--jobs", o.jobs, "worker threads (overrides the config)");

  auto* norms = app.add_subcommand("norms", "Norm report of a binary state dump");
  norms->add_option("--in", o.in, "kernel or phase-space dump")->required();
  norms->add_option("--out", o.out, "directory for norms.json");

  auto* dump = app.add_subcommand("dump", "Write the initial state of one eps as binary dumps");
  dump->add_option("--config", o.config, "experiment config (JSON)")->required();
  dump->add_option("--index", o.index, "position in the N list");
  dump->add_option("--out", o.out, "output directory")->required();

  auto* ld = app.add_subcommand("load", "Print the header and invariants of a binary dump");
  ld->add_option("--in", o.in, "kernel or phase-space dump")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return config_failure;
  }

  try {
    if (*run) return cmd_run(o);
    if (*sw) return cmd_sweep(o);
    if (*res) return cmd_residuals(o);
    if (*norms) return cmd_norms(o);
    if (*dump) return cmd_dump(o);
    if (*ld) return cmd_load(o);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return config_failure;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return numerical_failure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return numerical_failure;
  }
  return config_failure;
}
