#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "semiclassic/hartree.hpp"
#include "semiclassic/metrics.hpp"
#include "semiclassic/potential.hpp"
#include "semiclassic/residuals.hpp"
#include "semiclassic/states.hpp"
#include "semiclassic/vlasov.hpp"

namespace semiclassic {

inline constexpr const char* kReportSchema = "semiclassic-lab/1";

enum class Metric { trace, hs, observable, wigner_l2 };

std::string to_string(Metric m);
Metric metric_from_string(const std::string& name);

struct SlopeBand {
  double min = 0.7;
  double max = 1.3;
};

struct CheckSpec {
  SlopeBand band;
  std::vector<Metric> metrics;  // empty: every requested metric
  std::vector<double> times;    // empty: t_final only
};

// Parsed form of the JSON config documented in docs/config.md.
struct ExperimentConfig {
  int dim = 1;
  std::string profile_name = "fermi_ball";
  std::map<std::string, double> profile_params;
  std::vector<double> N;      // eps = N^(-1/d)
  double length = 4.0;
  double h_over_eps = 0.25;   // n = L / (h_over_eps * eps), rounded up to a power of two
  std::vector<int> points;    // explicit n per eps; overrides h_over_eps
  InteractionPotential potential{1};
  double t_final = 0.5;
  double snapshot_interval = 0.1;
  double dt_over_eps = 0.1;
  SelfConsistency self_consistency = SelfConsistency::predictor_corrector;
  Interpolation interpolation = Interpolation::fourier_x_cubic_v;
  ForceUpdate force_update = ForceUpdate::per_substep;
  bool clip_undershoot = false;
  std::vector<Metric> metrics{Metric::trace, Metric::hs, Metric::observable, Metric::wigner_l2};
  ObservableBox box;
  double max_leak = 1e-5;
  bool drop_coarsest = false;
  std::optional<CheckSpec> check;
  // limit profile W0 for the input distances kappa_N
  std::optional<std::pair<std::string, std::map<std::string, double>>> reference_profile;
  double residual_time = 0.1;
  unsigned seed = 1;
  int jobs = 1;
  nlohmann::json source;  // the parsed document, echoed in reports

  double eps(std::size_t index) const;
  int grid_points(std::size_t index) const;
  SpatialGrid grid(std::size_t index) const;
  double dt(std::size_t index) const;
};

ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

struct SnapshotMetrics {
  double t = 0.0;
  double trace_distance = 0.0;  // tr|omega - weyl W| / N
  double hs_distance = 0.0;     // ||omega - weyl W||_HS / sqrt(N)
  double observable = 0.0;      // weighted sup / N
  double wigner_l2 = 0.0;       // ||W_H - W||_2
  double hartree_trace = 0.0;
  double hartree_hermitian_defect = 0.0;
  double vlasov_mass = 0.0;
  double vlasov_l2 = 0.0;
  double vlasov_min_ratio = 0.0;
  bool vlasov_undershoot = false;
  double momentum_leak = 0.0;

  double value(Metric m) const;
};

struct InputDistances {
  double l1 = 0.0;          // kappa_{N,1}
  double l2 = 0.0;          // kappa_{N,2}
  double observable = 0.0;  // kappa_N
};

struct PairResult {
  std::size_t index = 0;
  double eps = 0.0;
  double N = 0.0;
  int points = 0;
  double dt = 0.0;
  double clip_magnitude = 0.0;
  CommutatorNorms initial_commutators;
  std::optional<InputDistances> kappa;
  std::vector<SnapshotMetrics> snapshots;
  std::optional<DensityOperator> final_op;
  std::optional<PhaseSpaceDensity> final_wigner;
};

struct RunOptions {
  bool keep_final_states = false;
};

PairResult run_pair(const ExperimentConfig& config, std::size_t eps_index,
                    const RunOptions& options = {});

struct SlopeFit {
  std::optional<double> slope;
  double std_error = 0.0;
  std::pair<double, double> ci95{0.0, 0.0};
  std::size_t points = 0;
  bool dropped_coarsest = false;
  std::string reason;       // why the slope is missing, empty otherwise
  std::vector<std::string> warnings;
};

// Least squares on (log eps, log value). Nonpositive values are skipped with a warning.
SlopeFit fit_slope(std::span<const std::pair<double, double>> points, bool drop_coarsest = false);

struct SlopeEntry {
  Metric metric;
  double t = 0.0;
  SlopeFit fit;
};

struct RunFailure {
  std::size_t index = 0;
  double eps = 0.0;
  std::string kind;  // "config" or "numerical"
  std::string message;
};

struct CheckOutcome {
  bool pass = true;
  std::vector<std::string> failures;
};

struct ComparisonReport {
  nlohmann::json config;
  std::vector<PairResult> runs;  // successful runs in sweep order
  std::vector<RunFailure> failures;
  std::vector<SlopeEntry> slopes;
  bool complete = true;
  std::optional<CheckOutcome> check;
};

ComparisonReport sweep(const ExperimentConfig& config);

// Runs fn(i) for i in [0, count) on at most `jobs` threads.
void run_jobs(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

CheckOutcome check_slopes(const std::vector<SlopeEntry>& slopes, const ExperimentConfig& config);

struct ResidualPoint {
  double eps = 0.0;
  double kinetic = 0.0;    // hs(F omega) / sqrt(N)
  double remainder = 0.0;  // hs(C) / sqrt(N)
  SymbolBoundReport symbol;
  ResidualReport evolution;
};

struct ResidualSweep {
  nlohmann::json config;
  std::vector<ResidualPoint> points;
  SlopeFit kinetic_slope;
  SlopeFit remainder_slope;
  SlopeFit evolution_slope;
  std::optional<CheckOutcome> check;
};

// Kinetic residual, remainder C, symbol bounds and the Wigner evolution residual per eps.
ResidualSweep residual_sweep(const ExperimentConfig& config);

// Numbers are rounded to 12 significant digits.
nlohmann::json to_json(const PairResult& run);
nlohmann::json to_json(const SlopeFit& fit);
nlohmann::json to_json(const ComparisonReport& report, bool with_timestamp = true);
nlohmann::json to_json(const ResidualSweep& sweep);
nlohmann::json to_json(const ResidualReport& report);
std::string to_csv(const ComparisonReport& report);

// report.json and report.csv under `dir`
void write_reports(const ComparisonReport& report, const std::filesystem::path& dir);

double round_significant(double value, int digits = 12);

}  // namespace semiclassic
