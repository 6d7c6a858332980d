#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <fstream>
#include <cmath>
#include <random>
#include <sstream>

#include "semiclassic/error.hpp"
#include "semiclassic/harness.hpp"

using namespace semiclassic;
using nlohmann::json;

namespace {

json small_config() {
  return json::parse(R"({
    "dim": 1,
    "profile": {"name": "fermi_ball", "params": {"sigma_x": 0.8, "sigma_v": 8.0, "exponent": 2.0}},
    "N": [8, 12, 16],
    "length": 2.0,
    "grid": {"h_over_eps": 0.125},
    "potential": {"cosine": {"amplitude": 1.0, "mode": [1]}},
    "t_final": 0.1,
    "snapshot_interval": 0.05,
    "dt_over_eps": 0.1,
    "max_leak": 1e-5
  })");
}

std::vector<std::pair<double, double>> power_law(const std::vector<double>& eps, double c, double p) {
  std::vector<std::pair<double, double>> pts;
  for (double e : eps) pts.emplace_back(e, c * std::pow(e, p));
  return pts;
}

}  // namespace

TEST(Config, ParsesDefaultsAndDerivedGrid) {
  const ExperimentConfig cfg = parse_config(small_config());
  EXPECT_EQ(cfg.N.size(), 3u);
  EXPECT_DOUBLE_EQ(cfg.eps(0), 0.125);
  EXPECT_EQ(cfg.grid_points(0), 128);
  EXPECT_EQ(cfg.grid_points(2), 256);
  EXPECT_LE(cfg.length / cfg.grid_points(1), cfg.eps(1) / 4);
  EXPECT_EQ(cfg.metrics.size(), 4u);
  EXPECT_FALSE(cfg.check.has_value());
  EXPECT_FALSE(cfg.potential.is_zero());
  for (std::size_t i = 0; i < 3; ++i) {
    const double per = cfg.snapshot_interval / cfg.dt(i);
    EXPECT_NEAR(per, std::round(per), 1e-9);
    EXPECT_LE(cfg.dt(i), 0.1 * cfg.eps(i) * (1 + 1e-12));
    EXPECT_LE(cfg.dt(i), 0.5 * cfg.length / cfg.grid_points(i) * (1 + 1e-12));
  }
}

TEST(Config, RejectsInvalidDocuments) {
  auto bad = [](auto mutate) {
    json doc = small_config();
    mutate(doc);
    EXPECT_THROW(parse_config(doc), ConfigError) << doc.dump();
  };
  bad([](json& d) { d["colour"] = "blue"; });
  bad([](json& d) { d["N"] = json::array({16, 8}); });
  bad([](json& d) { d["N"] = json::array(); });
  bad([](json& d) { d["dim"] = 3; });
  bad([](json& d) { d["grid"]["h_over_eps"] = 0.5; });
  bad([](json& d) { d["dt_over_eps"] = 0.2; });
  bad([](json& d) { d["t_final"] = 0.12; });
  bad([](json& d) { d["profile"]["name"] = "pyramid"; });
  bad([](json& d) { d["metrics"] = json::array({"energy"}); });
  bad([](json& d) { d["potential"] = {{"square", 1}}; });
  bad([](json& d) { d["check"] = {{"slope_min", 1.5}, {"slope_max", 1.0}}; });
  bad([](json& d) { d["jobs"] = 0; });
  bad([](json& d) { d.erase("profile"); });
}

TEST(Config, MissingFileIsConfigError) {
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(FitSlope, ExactLinearData) {
  const auto pts = power_law({1.0 / 16, 1.0 / 32, 1.0 / 64}, 3.0, 1.0);
  const SlopeFit fit = fit_slope(pts);
  ASSERT_TRUE(fit.slope);
  EXPECT_NEAR(*fit.slope, 1.0, 1e-12);
  EXPECT_LE(fit.std_error, 1e-12);
  EXPECT_EQ(fit.points, 3u);
}

TEST(FitSlope, ExactQuadraticData) {
  const SlopeFit fit = fit_slope(power_law({1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64}, 1.0, 2.0));
  ASSERT_TRUE(fit.slope);
  EXPECT_NEAR(*fit.slope, 2.0, 1e-12);
}

TEST(FitSlope, NoisyLinearData) {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> noise;
  std::vector<std::pair<double, double>> pts;
  for (double e : {1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64}) pts.emplace_back(e, e * (1 + 0.05 * noise(rng)));
  const SlopeFit fit = fit_slope(pts);
  ASSERT_TRUE(fit.slope);
  EXPECT_GE(*fit.slope, 0.9);
  EXPECT_LE(*fit.slope, 1.1);
  EXPECT_GT(fit.std_error, 0.0);
  EXPECT_LT(fit.ci95.first, *fit.slope);
  EXPECT_GT(fit.ci95.second, *fit.slope);
}

TEST(FitSlope, DegenerateInputsGiveNoSlope) {
  const std::vector<std::pair<double, double>> same{{0.1, 1.0}, {0.1, 2.0}, {0.1, 3.0}};
  const SlopeFit degenerate = fit_slope(same);
  EXPECT_FALSE(degenerate.slope);
  EXPECT_FALSE(degenerate.reason.empty());

  const std::vector<std::pair<double, double>> two{{0.1, 0.1}, {0.05, 0.05}};
  const SlopeFit short_fit = fit_slope(two);
  EXPECT_FALSE(short_fit.slope);
  EXPECT_FALSE(short_fit.reason.empty());
}

TEST(FitSlope, NonpositivePointsAreExcluded) {
  auto pts = power_law({1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64}, 2.0, 1.0);
  pts.emplace_back(1.0 / 128, 0.0);
  pts.emplace_back(1.0 / 256, -1.0);
  const SlopeFit fit = fit_slope(pts);
  ASSERT_TRUE(fit.slope);
  EXPECT_NEAR(*fit.slope, 1.0, 1e-12);
  EXPECT_EQ(fit.points, 4u);
  EXPECT_EQ(fit.warnings.size(), 2u);
}

TEST(FitSlope, DropsCoarsestOnlyWhenEnoughPointsRemain) {
  auto pts = power_law({1.0 / 16, 1.0 / 32, 1.0 / 64}, 1.0, 1.0);
  pts.insert(pts.begin(), {0.25, 1.0});  // off the power law
  const SlopeFit dropped = fit_slope(pts, true);
  ASSERT_TRUE(dropped.slope);
  EXPECT_TRUE(dropped.dropped_coarsest);
  EXPECT_NEAR(*dropped.slope, 1.0, 1e-12);

  const SlopeFit kept = fit_slope(power_law({0.1, 0.05, 0.025}, 1.0, 1.0), true);
  EXPECT_FALSE(kept.dropped_coarsest);
  EXPECT_EQ(kept.points, 3u);
}

TEST(RunJobs, VisitsEveryIndexOnce) {
  for (int jobs : {1, 2, 5}) {
    std::vector<std::atomic<int>> hits(23);
    run_jobs(hits.size(), jobs, [&](std::size_t i) { ++hits[i]; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
}

TEST(CheckSlopes, BandAndMissingEntries) {
  ExperimentConfig cfg = parse_config(small_config());
  cfg.metrics = {Metric::trace, Metric::hs};
  cfg.check = CheckSpec{};
  SlopeFit good;
  good.slope = 1.0;
  SlopeFit steep;
  steep.slope = 2.0;
  std::vector<SlopeEntry> slopes{{Metric::trace, 0.1, good}, {Metric::hs, 0.1, good}};
  EXPECT_TRUE(check_slopes(slopes, cfg).pass);

  slopes[1].fit = steep;
  const CheckOutcome out = check_slopes(slopes, cfg);
  EXPECT_FALSE(out.pass);
  ASSERT_EQ(out.failures.size(), 1u);
  EXPECT_NE(out.failures[0].find("hs"), std::string::npos);

  cfg.check->metrics = {Metric::trace};
  EXPECT_TRUE(check_slopes(slopes, cfg).pass);

  cfg.check->times = {0.05};
  EXPECT_FALSE(check_slopes(slopes, cfg).pass);

  slopes[0].fit = SlopeFit{};
  slopes[0].fit.reason = "degenerate";
  cfg.check->times.clear();
  EXPECT_FALSE(check_slopes(slopes, cfg).pass);
}

TEST(RunPair, ZeroTimeDistancesVanish) {
  json doc = small_config();
  doc["t_final"] = 0.0;
  const ExperimentConfig cfg = parse_config(doc);
  const PairResult run = run_pair(cfg, 2);
  ASSERT_EQ(run.snapshots.size(), 1u);
  const auto& s = run.snapshots.front();
  EXPECT_EQ(s.t, 0.0);
  EXPECT_LE(s.trace_distance, 1e-10);
  EXPECT_LE(s.hs_distance, 1e-10);
  EXPECT_LE(s.observable, 1e-10);
  EXPECT_LE(s.wigner_l2, 1e-10);
  EXPECT_NEAR(s.hartree_trace, 16.0, 1e-9);
}

TEST(RunPair, SnapshotsMatchSchedule) {
  const ExperimentConfig cfg = parse_config(small_config());
  const PairResult run = run_pair(cfg, 0, RunOptions{true});
  ASSERT_EQ(run.snapshots.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(run.snapshots[k].t, 0.05 * k, 1e-12);
  EXPECT_GT(run.snapshots.back().hs_distance, 0.0);
  ASSERT_TRUE(run.final_op);
  ASSERT_TRUE(run.final_wigner);
  EXPECT_NEAR(run.final_op->trace(), 8.0, 1e-9);
  EXPECT_THROW(run_pair(cfg, 3), ConfigError);
}

TEST(RunPair, InputDistancesAgainstReferenceProfile) {
  json doc = small_config();
  doc["t_final"] = 0.0;
  doc["reference_profile"] = doc["profile"];
  const PairResult run = run_pair(parse_config(doc), 1);
  ASSERT_TRUE(run.kappa);
  // the clip is the only difference between W_N and the sampled profile
  EXPECT_GE(run.kappa->l1, 0.0);
  EXPECT_GT(run.kappa->l2, 0.0);
  // |tr e^{ipx+q eps grad} D| <= tr|D| for the clip correction D
  EXPECT_LE(run.kappa->observable, run.clip_magnitude / 12.0);
  EXPECT_LE(run.kappa->observable, 1e-2);
}

TEST(FreeFlow, HsDistanceStaysInExponentialEnvelope) {
  json doc = small_config();
  doc["potential"] = nullptr;
  doc["t_final"] = 0.5;
  doc["snapshot_interval"] = 0.1;
  const ExperimentConfig cfg = parse_config(doc);
  const PairResult run = run_pair(cfg, 2);
  const double eps = run.eps;
  ASSERT_EQ(run.snapshots.size(), 6u);
  EXPECT_LE(run.snapshots[0].hs_distance, 1e-10);

  // least squares of log(d / eps) = log C + c t over t > 0
  std::vector<double> t, y;
  for (const auto& s : run.snapshots)
    if (s.t > 0) {
      ASSERT_GT(s.hs_distance, 0.0);
      t.push_back(s.t);
      y.push_back(std::log(s.hs_distance / eps));
    }
  double mt = 0, my = 0;
  for (std::size_t i = 0; i < t.size(); ++i) mt += t[i], my += y[i];
  mt /= t.size();
  my /= t.size();
  double stt = 0, sty = 0;
  for (std::size_t i = 0; i < t.size(); ++i) stt += (t[i] - mt) * (t[i] - mt), sty += (t[i] - mt) * (y[i] - my);
  const double c = sty / stt;
  double excess = 0;
  for (std::size_t i = 0; i < t.size(); ++i) excess = std::max(excess, y[i] - (my + c * (t[i] - mt)));
  const double C = std::exp(my - c * mt + excess);
  for (const auto& s : run.snapshots) EXPECT_LE(s.hs_distance, C * eps * std::exp(c * s.t) * (1 + 1e-12));
  // the envelope is a fit, not a loose bound
  EXPECT_LT(excess, std::log(2.0));
  EXPECT_LT(C, 100.0);
}

TEST(Sweep, DegenerateEpsListGivesNullSlopes) {
  json doc = small_config();
  doc["N"] = json::array({8, 8});
  doc["t_final"] = 0.05;
  const ComparisonReport report = sweep(parse_config(doc));
  EXPECT_TRUE(report.complete);
  ASSERT_FALSE(report.slopes.empty());
  for (const auto& s : report.slopes) {
    EXPECT_FALSE(s.fit.slope);
    EXPECT_FALSE(s.fit.reason.empty());
  }
  const json j = to_json(report);
  EXPECT_TRUE(j["slopes"][0]["slope"].is_null());
  EXPECT_TRUE(j["slopes"][0].contains("reason"));
}

TEST(Sweep, DeterministicAcrossWorkerCounts) {
  ExperimentConfig cfg = parse_config(small_config());
  cfg.jobs = 1;
  const json serial = to_json(sweep(cfg), false);
  cfg.jobs = 3;
  const json parallel = to_json(sweep(cfg), false);
  EXPECT_EQ(serial.dump(), parallel.dump());
  EXPECT_FALSE(serial.contains("generated_at"));
}

TEST(Sweep, FailuresAreRecordedPerEps) {
  json doc = small_config();
  doc["profile"]["params"]["sigma_v"] = 24.0;  // support runs past the velocity cutoff
  const ComparisonReport report = sweep(parse_config(doc));
  EXPECT_FALSE(report.complete);
  EXPECT_FALSE(report.failures.empty());
  EXPECT_EQ(report.runs.size() + report.failures.size(), 3u);
}

TEST(Report, JsonSchemaAndCsv) {
  const ComparisonReport report = sweep(parse_config(small_config()));
  const json j = to_json(report);
  EXPECT_EQ(j["schema"], "semiclassic-lab/1");
  EXPECT_TRUE(j.contains("generated_at"));
  EXPECT_TRUE(j["complete"].get<bool>());
  EXPECT_EQ(j["runs"].size(), 3u);
  EXPECT_EQ(j["config"], small_config());
  // 2 snapshot times with t > 0, 4 metrics
  EXPECT_EQ(j["slopes"].size(), 8u);
  for (const auto& s : j["slopes"]) {
    EXPECT_TRUE(s["slope"].is_number());
    EXPECT_EQ(s["points"], 3);
  }
  for (const auto& run : j["runs"])
    for (const auto& snap : run["snapshots"]) {
      const double v = snap["hs_distance"].get<double>();
      EXPECT_EQ(v, round_significant(v));
    }

  std::istringstream csv(to_csv(report));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "eps,N,t,metric,value");
  std::size_t rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 4);
  }
  EXPECT_EQ(rows, 3u * 3u * 4u);
}

TEST(Report, RoundSignificant) {
  EXPECT_EQ(round_significant(0.0), 0.0);
  EXPECT_DOUBLE_EQ(round_significant(1.23456789012345678), 1.23456789012);
  EXPECT_DOUBLE_EQ(round_significant(-9.87654321098765e-7), -9.87654321099e-7);
  EXPECT_DOUBLE_EQ(round_significant(123456.7, 3), 123000.0);
}

TEST(Report, ParseMetricNames) {
  for (Metric m : {Metric::trace, Metric::hs, Metric::observable, Metric::wigner_l2})
    EXPECT_EQ(metric_from_string(to_string(m)), m);
  EXPECT_THROW(metric_from_string("energy"), ConfigError);
}

namespace {

json standard_config() {
  std::ifstream in(std::string(SEMICLASSIC_CONFIG_DIR) + "/standard.json");
  return json::parse(in);
}

}  // namespace

TEST(StandardConfig, SmokeRunAtN128) {
  json doc = standard_config();
  doc["N"] = json::array({8});
  doc["max_leak"] = 1e-4;  // the clip tail at N = 8 sits just above the sweep guard
  const ExperimentConfig cfg = parse_config(doc);
  ASSERT_EQ(cfg.grid_points(0), 128);
  const auto start = std::chrono::steady_clock::now();
  const PairResult run = run_pair(cfg, 0);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_LT(seconds, 60.0);
  ASSERT_EQ(run.snapshots.size(), 6u);
  EXPECT_GT(run.snapshots.back().hs_distance, 0.0);
}

TEST(StandardConfig, RefinementChangesDistancesByLessThanTenPercent) {
  json doc = standard_config();
  doc["N"] = json::array({16});
  std::vector<PairResult> runs;
  for (int n : {256, 512}) {
    doc["grid"]["points"] = json::array({n});
    runs.push_back(run_pair(parse_config(doc), 0));
  }
  ASSERT_EQ(runs[0].snapshots.size(), runs[1].snapshots.size());
  for (std::size_t k = 1; k < runs[0].snapshots.size(); ++k)
    for (Metric m : {Metric::trace, Metric::hs, Metric::observable, Metric::wigner_l2}) {
      const double coarse = runs[0].snapshots[k].value(m);
      const double fine = runs[1].snapshots[k].value(m);
      EXPECT_LT(std::abs(fine - coarse), 0.1 * coarse) << to_string(m) << " at t = " << runs[0].snapshots[k].t;
    }
}
