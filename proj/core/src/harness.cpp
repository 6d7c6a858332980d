#include "semiclassic/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "semiclassic/error.hpp"
#include "semiclassic/initial.hpp"

namespace semiclassic {

using nlohmann::json;

namespace {

constexpr double kTimeTol = 1e-9;

// bands used by the residual diagnostics in --check mode
constexpr SlopeBand kKineticBand{1.7, 2.3};
constexpr SlopeBand kRemainderBand{1.7, 2.3};
constexpr SlopeBand kEvolutionBand{0.8, 1.4};

[[noreturn]] void config_error(const std::string& what) { throw ConfigError("config: " + what); }

int next_power_of_two(double x) {
  int n = 2;
  while (n < x - 1e-9) n *= 2;
  return n;
}

template <class T>
T enum_from(const json& doc, const char* key, T fallback,
            std::initializer_list<std::pair<const char*, T>> names) {
  if (!doc.contains(key)) return fallback;
  const auto value = doc.at(key).get<std::string>();
  for (const auto& [name, v] : names)
    if (value == name) return v;
  config_error(std::string("unknown value '") + value + "' for " + key);
}

Index parse_mode(const json& j, int dim) {
  const auto k = j.get<std::vector<int>>();
  if (static_cast<int>(k.size()) != dim) config_error("potential mode must have one entry per axis");
  Index idx{0, 0};
  for (int a = 0; a < dim; ++a) idx[a] = k[a];
  return idx;
}

InteractionPotential parse_potential(const json& doc, int dim) {
  InteractionPotential V(dim);
  if (doc.is_null()) return V;
  for (const auto& [key, value] : doc.items())
    if (key != "cosine" && key != "modes") config_error("unknown potential key '" + key + "'");
  if (doc.contains("cosine")) {
    const auto& c = doc.at("cosine");
    V = InteractionPotential::cosine(c.at("amplitude").get<double>(), parse_mode(c.at("mode"), dim), dim);
  }
  if (doc.contains("modes")) {
    for (const auto& m : doc.at("modes"))
      V.set_mode(parse_mode(m.at("k"), dim), Complex(m.value("re", 0.0), m.value("im", 0.0)));
  }
  return V;
}

std::vector<Metric> parse_metrics(const json& doc) {
  std::vector<Metric> out;
  for (const auto& m : doc) out.push_back(metric_from_string(m.get<std::string>()));
  if (out.empty()) config_error("metric list is empty");
  return out;
}

json num(double x) {
  if (!std::isfinite(x)) return nullptr;
  return round_significant(x);
}

json to_json(const CommutatorNorms& c, int) {
  return {{"trace_x", num(c.trace_x)},
          {"trace_grad", num(c.trace_grad)},
          {"hs_x", num(c.hs_x)},
          {"hs_grad", num(c.hs_grad)}};
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

bool in_band(const SlopeFit& fit, SlopeBand band) {
  return fit.slope && *fit.slope >= band.min && *fit.slope <= band.max;
}

void check_band(CheckOutcome& out, const std::string& name, const SlopeFit& fit, SlopeBand band) {
  if (in_band(fit, band)) return;
  out.pass = false;
  std::ostringstream msg;
  msg << name << ": slope ";
  if (fit.slope)
    msg << *fit.slope;
  else
    msg << "undefined (" << fit.reason << ")";
  msg << " outside [" << band.min << ", " << band.max << "]";
  out.failures.push_back(msg.str());
}

// Hartree states at t - dt, t, t + dt and the Vlasov state at t.
std::pair<std::vector<HartreeSnapshot>, std::vector<VlasovSnapshot>> residual_window(
    const InitialState& init, const ExperimentConfig& cfg, std::size_t index, double t) {
  const double dt = cfg.dt(index);
  HartreeConfig hc;
  hc.dt = dt;
  hc.self_consistency = cfg.self_consistency;
  VlasovConfig vc;
  vc.dt = dt;
  vc.interpolation = cfg.interpolation;
  vc.force_update = cfg.force_update;
  vc.clip_undershoot = cfg.clip_undershoot;
  const auto& V = cfg.potential;
  auto lead = evolve_hartree(init.op, V, hc, t - dt).snapshots.back();
  hc.snapshot_interval = dt;
  auto hartree = evolve_hartree(lead.op, V, hc, 2 * dt).snapshots;
  for (auto& s : hartree) s.t += t - dt;
  std::vector<VlasovSnapshot> vlasov{evolve_vlasov(init.wigner, V, vc, t).back()};
  return {std::move(hartree), std::move(vlasov)};
}

InitialOptions initial_options(const ExperimentConfig& cfg, bool commutators) {
  InitialOptions opts;
  opts.max_leak = cfg.max_leak;
  opts.measure_commutators = commutators;
  return opts;
}

}  // namespace

std::string to_string(Metric m) {
  switch (m) {
    case Metric::trace: return "trace";
    case Metric::hs: return "hs";
    case Metric::observable: return "observable";
    case Metric::wigner_l2: return "wigner_l2";
  }
  return "unknown";
}

Metric metric_from_string(const std::string& name) {
  if (name == "trace") return Metric::trace;
  if (name == "hs") return Metric::hs;
  if (name == "observable") return Metric::observable;
  if (name == "wigner_l2") return Metric::wigner_l2;
  config_error("unknown metric '" + name + "' (expected trace, hs, observable or wigner_l2)");
}

double ExperimentConfig::eps(std::size_t index) const { return std::pow(N.at(index), -1.0 / dim); }

int ExperimentConfig::grid_points(std::size_t index) const {
  if (!points.empty()) return points.at(index);
  return next_power_of_two(length / (h_over_eps * eps(index)));
}

SpatialGrid ExperimentConfig::grid(std::size_t index) const {
  return SpatialGrid(length, grid_points(index), dim);
}

double ExperimentConfig::dt(std::size_t index) const {
  // |u| < 1, so dt <= h/2 keeps the transport CFL number below one half
  const double target = std::min(dt_over_eps * eps(index), 0.5 * length / grid_points(index));
  const double per = std::ceil(snapshot_interval / target - kTimeTol);
  return snapshot_interval / per;
}

ExperimentConfig parse_config(const json& doc) {
  static const std::set<std::string> known{
      "dim",         "profile",        "N",          "length",        "grid",
      "potential",   "t_final",        "snapshot_interval", "dt_over_eps", "hartree",
      "vlasov",      "metrics",        "observable_box", "max_leak",    "drop_coarsest",
      "check",       "reference_profile", "residual_time", "seed",      "jobs"};
  if (!doc.is_object()) config_error("top level must be an object");
  for (const auto& [key, value] : doc.items())
    if (!known.contains(key)) config_error("unknown key '" + key + "'");

  ExperimentConfig cfg;
  cfg.source = doc;
  try {
    cfg.dim = doc.value("dim", 1);
    if (cfg.dim != 1 && cfg.dim != 2) config_error("dim must be 1 or 2");

    const auto& prof = doc.at("profile");
    cfg.profile_name = prof.at("name").get<std::string>();
    if (prof.contains("params")) cfg.profile_params = prof.at("params").get<std::map<std::string, double>>();
    Profile(cfg.profile_name, cfg.profile_params, cfg.dim);

    cfg.N = doc.at("N").get<std::vector<double>>();
    if (cfg.N.empty()) config_error("N list is empty");
    for (std::size_t i = 0; i < cfg.N.size(); ++i) {
      if (!(cfg.N[i] >= 1.0)) config_error("every N must be at least 1");
      if (i > 0 && cfg.N[i] < cfg.N[i - 1]) config_error("eps must not increase along the sweep");
    }
    cfg.length = doc.value("length", cfg.length);
    if (!(cfg.length > 0.0)) config_error("length must be positive");

    if (doc.contains("grid")) {
      const auto& g = doc.at("grid");
      cfg.h_over_eps = g.value("h_over_eps", cfg.h_over_eps);
      if (g.contains("points")) cfg.points = g.at("points").get<std::vector<int>>();
    }
    if (!cfg.points.empty() && cfg.points.size() != cfg.N.size())
      config_error("grid.points needs one entry per N");
    if (!(cfg.h_over_eps > 0.0)) config_error("grid.h_over_eps must be positive");
    for (std::size_t i = 0; i < cfg.N.size(); ++i) {
      const int n = cfg.grid_points(i);
      if (n < 4 || n % 2 != 0) config_error("grid sizes must be even and at least 4");
      if (cfg.length / n > 0.25 * cfg.eps(i) * (1 + 1e-12))
        config_error("grid does not resolve eps (need h <= eps/4) at N = " + std::to_string(cfg.N[i]));
    }

    cfg.potential = parse_potential(doc.value("potential", json()), cfg.dim);
    cfg.t_final = doc.value("t_final", cfg.t_final);
    cfg.snapshot_interval = doc.value("snapshot_interval", std::min(cfg.snapshot_interval, cfg.t_final));
    if (!(cfg.t_final >= 0.0)) config_error("t_final must be nonnegative");
    if (cfg.t_final > 0.0) {
      if (!(cfg.snapshot_interval > 0.0)) config_error("snapshot_interval must be positive");
      const double k = cfg.t_final / cfg.snapshot_interval;
      if (std::abs(k - std::round(k)) > 1e-9 * k) config_error("t_final must be a multiple of snapshot_interval");
    }
    cfg.dt_over_eps = doc.value("dt_over_eps", cfg.dt_over_eps);
    if (!(cfg.dt_over_eps > 0.0) || cfg.dt_over_eps > 0.1) config_error("dt_over_eps must lie in (0, 0.1]");

    const json hartree = doc.value("hartree", json::object());
    cfg.self_consistency = enum_from(hartree, "self_consistency", cfg.self_consistency,
                                     {{"predictor_corrector", SelfConsistency::predictor_corrector},
                                      {"frozen_density", SelfConsistency::frozen_density}});
    const json vlasov = doc.value("vlasov", json::object());
    cfg.interpolation = enum_from(vlasov, "interpolation", cfg.interpolation,
                                  {{"fourier_x_cubic_v", Interpolation::fourier_x_cubic_v},
                                   {"cubic_both", Interpolation::cubic_both}});
    cfg.force_update = enum_from(vlasov, "force_update", cfg.force_update,
                                 {{"per_substep", ForceUpdate::per_substep}, {"per_step", ForceUpdate::per_step}});
    cfg.clip_undershoot = vlasov.value("clip_undershoot", false);

    if (doc.contains("metrics")) cfg.metrics = parse_metrics(doc.at("metrics"));
    if (doc.contains("observable_box")) {
      cfg.box.p_max = doc.at("observable_box").value("p_max", cfg.box.p_max);
      cfg.box.q_max = doc.at("observable_box").value("q_max", cfg.box.q_max);
    }
    cfg.max_leak = doc.value("max_leak", cfg.max_leak);
    cfg.drop_coarsest = doc.value("drop_coarsest", false);

    if (doc.contains("check")) {
      const auto& c = doc.at("check");
      CheckSpec spec;
      spec.band.min = c.value("slope_min", spec.band.min);
      spec.band.max = c.value("slope_max", spec.band.max);
      if (!(spec.band.min <= spec.band.max)) config_error("check.slope_min exceeds check.slope_max");
      if (c.contains("metrics")) spec.metrics = parse_metrics(c.at("metrics"));
      if (c.contains("times")) spec.times = c.at("times").get<std::vector<double>>();
      cfg.check = spec;
    }
    if (doc.contains("reference_profile")) {
      const auto& r = doc.at("reference_profile");
      std::map<std::string, double> params;
      if (r.contains("params")) params = r.at("params").get<std::map<std::string, double>>();
      Profile(r.at("name").get<std::string>(), params, cfg.dim);
      cfg.reference_profile = std::make_pair(r.at("name").get<std::string>(), params);
    }
    cfg.residual_time = doc.value("residual_time", std::min(cfg.snapshot_interval, cfg.t_final));
    if (!(cfg.residual_time >= 0.0)) config_error("residual_time must be nonnegative");
    cfg.seed = doc.value("seed", 1u);
    cfg.jobs = doc.value("jobs", 1);
    if (cfg.jobs < 1) config_error("jobs must be at least 1");
  } catch (const json::exception& e) {
    config_error(e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

double SnapshotMetrics::value(Metric m) const {
  switch (m) {
    case Metric::trace: return trace_distance;
    case Metric::hs: return hs_distance;
    case Metric::observable: return observable;
    case Metric::wigner_l2: return wigner_l2;
  }
  return 0.0;
}

PairResult run_pair(const ExperimentConfig& cfg, std::size_t index, const RunOptions& options) {
  if (index >= cfg.N.size()) throw ConfigError("eps index out of range");
  PairResult out;
  out.index = index;
  out.eps = cfg.eps(index);
  out.N = cfg.N[index];
  out.points = cfg.grid_points(index);
  out.dt = cfg.dt(index);
  const SpatialGrid grid = cfg.grid(index);
  const Profile profile(cfg.profile_name, cfg.profile_params, cfg.dim);
  const InitialState init = build_initial_state(profile, out.N, out.eps, grid, initial_options(cfg, true));
  out.clip_magnitude = init.clip_magnitude;
  out.initial_commutators = init.commutators;

  if (cfg.reference_profile) {
    const Profile ref(cfg.reference_profile->first, cfg.reference_profile->second, cfg.dim);
    const PhaseSpaceDensity W0 = ref.sample(init.wigner.grid, out.eps, out.N);
    InputDistances k;
    double l1 = 0.0;
    for (std::size_t i = 0; i < W0.values.size(); ++i)
      l1 += std::abs(init.wigner.values.storage()[i] - W0.values.storage()[i]);
    k.l1 = l1 * W0.cell_volume();
    PhaseSpaceDensity diff = init.wigner;
    diff.values -= W0.values;
    k.l2 = diff.l2_norm();
    k.observable = observable_distance(init.op, W0, cfg.box).value / out.N;
    out.kappa = k;
  }

  HartreeConfig hc;
  hc.dt = out.dt;
  hc.self_consistency = cfg.self_consistency;
  hc.snapshot_interval = cfg.snapshot_interval;
  VlasovConfig vc;
  vc.dt = out.dt;
  vc.interpolation = cfg.interpolation;
  vc.force_update = cfg.force_update;
  vc.clip_undershoot = cfg.clip_undershoot;
  vc.snapshot_interval = cfg.snapshot_interval;

  std::vector<HartreeSnapshot> hartree;
  std::vector<VlasovSnapshot> vlasov;
  try {
    hartree = evolve_hartree(init.op, cfg.potential, hc, cfg.t_final).snapshots;
    vlasov = evolve_vlasov(init.wigner, cfg.potential, vc, cfg.t_final);
  } catch (const NumericalError& e) {
    std::ostringstream msg;
    msg << "eps = " << out.eps << ": " << e.what();
    throw NumericalError(msg.str());
  }
  if (hartree.size() != vlasov.size()) throw NumericalError("Hartree and Vlasov snapshot counts differ");

  auto wants = [&](Metric m) { return std::find(cfg.metrics.begin(), cfg.metrics.end(), m) != cfg.metrics.end(); };
  WignerOptions raw;
  raw.check_cutoff = false;
  const double N = out.N;
  for (std::size_t k = 0; k < hartree.size(); ++k) {
    const auto& hs = hartree[k];
    const auto& vs = vlasov[k];
    if (std::abs(hs.t - vs.t) > kTimeTol * std::max(1.0, hs.t))
      throw NumericalError("Hartree and Vlasov snapshot times differ");
    SnapshotMetrics m;
    m.t = hs.t;
    m.hartree_trace = hs.trace;
    m.hartree_hermitian_defect = hs.hermitian_defect;
    m.vlasov_mass = vs.mass;
    m.vlasov_l2 = vs.l2_norm;
    m.vlasov_min_ratio = vs.min_ratio;
    m.vlasov_undershoot = vs.undershoot;
    m.momentum_leak = momentum_leak(hs.op, vs.W.grid);
    if (wants(Metric::trace) || wants(Metric::hs)) {
      const CMatrix diff = hs.op.kernel - weyl_quantize(vs.W).kernel;
      if (wants(Metric::trace)) m.trace_distance = trace_norm(diff, grid) / N;
      if (wants(Metric::hs)) m.hs_distance = hs_norm(diff, grid) / std::sqrt(N);
    }
    if (wants(Metric::observable)) m.observable = observable_distance(hs.op, vs.W, cfg.box).value / N;
    if (wants(Metric::wigner_l2)) {
      PhaseSpaceDensity diff = wigner_transform(hs.op, vs.W.grid, raw);
      diff.values -= vs.W.values;
      m.wigner_l2 = diff.l2_norm();
    }
    out.snapshots.push_back(m);
  }
  if (options.keep_final_states) {
    out.final_op = hartree.back().op;
    out.final_wigner = vlasov.back().W;
  }
  return out;
}

SlopeFit fit_slope(std::span<const std::pair<double, double>> points, bool drop_coarsest) {
  SlopeFit fit;
  std::vector<std::pair<double, double>> pts;
  for (const auto& [eps, value] : points) {
    if (eps > 0.0 && value > 0.0 && std::isfinite(eps) && std::isfinite(value)) {
      pts.emplace_back(eps, value);
    } else {
      std::ostringstream msg;
      msg << "point (eps = " << eps << ", value = " << value << ") excluded: nonpositive or non-finite";
      fit.warnings.push_back(msg.str());
    }
  }
  std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  if (drop_coarsest) {
    if (pts.size() > 3) {
      pts.erase(pts.begin());
      fit.dropped_coarsest = true;
    } else {
      fit.warnings.push_back("coarsest point kept: dropping it would leave fewer than 3 points");
    }
  }
  fit.points = pts.size();
  if (pts.size() < 3) {
    fit.reason = "needs at least 3 positive points";
    return fit;
  }
  const double n = static_cast<double>(pts.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [e, v] : pts) {
    mx += std::log(e);
    my += std::log(v);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [e, v] : pts) {
    sxx += (std::log(e) - mx) * (std::log(e) - mx);
    sxy += (std::log(e) - mx) * (std::log(v) - my);
  }
  if (sxx <= 1e-24) {
    fit.reason = "degenerate sweep: all eps identical";
    return fit;
  }
  const double slope = sxy / sxx;
  double ssr = 0.0;
  for (const auto& [e, v] : pts) {
    const double r = std::log(v) - (my + slope * (std::log(e) - mx));
    ssr += r * r;
  }
  fit.slope = slope;
  fit.std_error = std::sqrt(ssr / (n - 2) / sxx);
  const boost::math::students_t dist(n - 2);
  const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
  fit.ci95 = {slope - t * fit.std_error, slope + t * fit.std_error};
  return fit;
}

void run_jobs(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(jobs, 1), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
}

CheckOutcome check_slopes(const std::vector<SlopeEntry>& slopes, const ExperimentConfig& cfg) {
  CheckOutcome out;
  if (!cfg.check) return out;
  const auto metrics = cfg.check->metrics.empty() ? cfg.metrics : cfg.check->metrics;
  const auto times = cfg.check->times.empty() ? std::vector<double>{cfg.t_final} : cfg.check->times;
  for (Metric m : metrics)
    for (double t : times) {
      const auto it = std::find_if(slopes.begin(), slopes.end(), [&](const SlopeEntry& e) {
        return e.metric == m && std::abs(e.t - t) <= kTimeTol * std::max(1.0, t);
      });
      std::ostringstream name;
      name << to_string(m) << " at t = " << t;
      if (it == slopes.end()) {
        out.pass = false;
        out.failures.push_back(name.str() + ": no slope recorded");
        continue;
      }
      check_band(out, name.str(), it->fit, cfg.check->band);
    }
  return out;
}

ComparisonReport sweep(const ExperimentConfig& cfg) {
  const std::size_t count = cfg.N.size();
  std::vector<std::optional<PairResult>> results(count);
  std::vector<std::optional<RunFailure>> failures(count);
  run_jobs(count, cfg.jobs, [&](std::size_t i) {
    try {
      results[i] = run_pair(cfg, i);
    } catch (const ConfigError& e) {
      failures[i] = RunFailure{i, cfg.eps(i), "config", e.what()};
    } catch (const std::exception& e) {
      failures[i] = RunFailure{i, cfg.eps(i), "numerical", e.what()};
    }
  });

  ComparisonReport report;
  report.config = cfg.source;
  for (std::size_t i = 0; i < count; ++i) {
    if (results[i]) report.runs.push_back(std::move(*results[i]));
    if (failures[i]) report.failures.push_back(*failures[i]);
  }
  report.complete = report.failures.empty();

  if (!report.runs.empty()) {
    for (Metric m : cfg.metrics)
      for (const auto& snap : report.runs.front().snapshots) {
        if (snap.t <= 0.0) continue;
        std::vector<std::pair<double, double>> pts;
        for (const auto& run : report.runs)
          for (const auto& s : run.snapshots)
            if (std::abs(s.t - snap.t) <= kTimeTol * std::max(1.0, snap.t)) pts.emplace_back(run.eps, s.value(m));
        report.slopes.push_back({m, snap.t, fit_slope(pts, cfg.drop_coarsest)});
      }
  }
  if (cfg.check) report.check = check_slopes(report.slopes, cfg);
  return report;
}

ResidualSweep residual_sweep(const ExperimentConfig& cfg) {
  const std::size_t count = cfg.N.size();
  std::vector<ResidualPoint> points(count);
  std::vector<std::string> errors(count);
  std::vector<int> kinds(count, 0);
  run_jobs(count, cfg.jobs, [&](std::size_t i) {
    try {
      ResidualPoint p;
      p.eps = cfg.eps(i);
      const Profile profile(cfg.profile_name, cfg.profile_params, cfg.dim);
      const InitialState init =
          build_initial_state(profile, cfg.N[i], p.eps, cfg.grid(i), initial_options(cfg, false));
      const double root_n = std::sqrt(cfg.N[i]);
      p.kinetic = hs_norm(kinetic_residual(init.op), init.op.grid) / root_n;
      if (!cfg.potential.is_zero())
        p.remainder = hs_norm(remainder_operator_C(init.wigner, cfg.potential), init.op.grid) / root_n;
      p.symbol = symbol_bound_check(p.eps, 20000, cfg.seed);
      const double t = std::max(cfg.residual_time, cfg.dt(i));
      auto [hartree, vlasov] = residual_window(init, cfg, i, t);
      p.evolution = wigner_evolution_residual(hartree, vlasov, vlasov.front().t, cfg.potential);
      points[i] = p;
    } catch (const ConfigError& e) {
      errors[i] = e.what();
      kinds[i] = 1;
    } catch (const std::exception& e) {
      errors[i] = e.what();
      kinds[i] = 2;
    }
  });
  for (std::size_t i = 0; i < count; ++i) {
    if (kinds[i] == 1) throw ConfigError(errors[i]);
    if (kinds[i] == 2) throw NumericalError(errors[i]);
  }

  ResidualSweep out;
  out.config = cfg.source;
  out.points = points;
  std::vector<std::pair<double, double>> kin, rem, evo;
  for (const auto& p : points) {
    kin.emplace_back(p.eps, p.kinetic);
    rem.emplace_back(p.eps, p.remainder);
    evo.emplace_back(p.eps, p.evolution.residual_l2);
  }
  out.kinetic_slope = fit_slope(kin);
  if (!cfg.potential.is_zero()) {
    out.remainder_slope = fit_slope(rem);
  } else {
    out.remainder_slope.reason = "no interaction: the remainder vanishes";
  }
  out.evolution_slope = fit_slope(evo);
  if (cfg.check) {
    CheckOutcome c;
    check_band(c, "kinetic residual", out.kinetic_slope, kKineticBand);
    if (!cfg.potential.is_zero()) check_band(c, "remainder C", out.remainder_slope, kRemainderBand);
    check_band(c, "Wigner evolution residual", out.evolution_slope, kEvolutionBand);
    for (const auto& p : points)
      if (!p.symbol.pass) {
        c.pass = false;
        c.failures.push_back("symbol bound ratios unstable at eps = " + std::to_string(p.eps));
      }
    out.check = c;
  }
  return out;
}

double round_significant(double value, int digits) {
  if (value == 0.0 || !std::isfinite(value)) return value;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, value);
  return std::strtod(buf, nullptr);
}

json to_json(const SlopeFit& fit) {
  json j;
  j["slope"] = fit.slope ? num(*fit.slope) : json(nullptr);
  j["stderr"] = fit.slope ? num(fit.std_error) : json(nullptr);
  j["ci95"] = fit.slope ? json::array({num(fit.ci95.first), num(fit.ci95.second)}) : json(nullptr);
  j["points"] = fit.points;
  j["dropped_coarsest"] = fit.dropped_coarsest;
  if (!fit.reason.empty()) j["reason"] = fit.reason;
  if (!fit.warnings.empty()) j["warnings"] = fit.warnings;
  return j;
}

json to_json(const PairResult& run) {
  json snaps = json::array();
  for (const auto& s : run.snapshots)
    snaps.push_back({{"t", num(s.t)},
                     {"trace_distance", num(s.trace_distance)},
                     {"hs_distance", num(s.hs_distance)},
                     {"observable_distance", num(s.observable)},
                     {"wigner_l2_distance", num(s.wigner_l2)},
                     {"hartree_trace", num(s.hartree_trace)},
                     {"hartree_hermitian_defect", num(s.hartree_hermitian_defect)},
                     {"vlasov_mass", num(s.vlasov_mass)},
                     {"vlasov_l2", num(s.vlasov_l2)},
                     {"vlasov_min_ratio", num(s.vlasov_min_ratio)},
                     {"vlasov_undershoot", s.vlasov_undershoot},
                     {"momentum_leak", num(s.momentum_leak)}});
  json j{{"eps", num(run.eps)},
         {"N", num(run.N)},
         {"points", run.points},
         {"dt", num(run.dt)},
         {"clip_magnitude", num(run.clip_magnitude)},
         {"initial_commutators", to_json(run.initial_commutators, 0)},
         {"snapshots", snaps}};
  if (run.kappa)
    j["kappa"] = {{"l1", num(run.kappa->l1)}, {"l2", num(run.kappa->l2)}, {"observable", num(run.kappa->observable)}};
  return j;
}

json to_json(const ComparisonReport& report, bool with_timestamp) {
  json j;
  j["schema"] = kReportSchema;
  if (with_timestamp) j["generated_at"] = timestamp();
  j["config"] = report.config;
  j["complete"] = report.complete;
  j["runs"] = json::array();
  for (const auto& r : report.runs) j["runs"].push_back(to_json(r));
  j["failures"] = json::array();
  for (const auto& f : report.failures)
    j["failures"].push_back({{"eps", num(f.eps)}, {"kind", f.kind}, {"message", f.message}});
  j["slopes"] = json::array();
  for (const auto& s : report.slopes) {
    json e = to_json(s.fit);
    e["metric"] = to_string(s.metric);
    e["t"] = num(s.t);
    j["slopes"].push_back(e);
  }
  if (report.check) j["check"] = {{"pass", report.check->pass}, {"failures", report.check->failures}};
  return j;
}

json to_json(const ResidualReport& r) {
  return {{"t", num(r.t)},
          {"eps", num(r.eps)},
          {"residual_l2", num(r.residual_l2)},
          {"time_derivative_l2", num(r.time_derivative_l2)},
          {"transport_l2", num(r.transport_l2)},
          {"b_identity_defect", num(r.b_identity_defect)}};
}

json to_json(const ResidualSweep& sweep) {
  json j;
  j["schema"] = kReportSchema;
  j["kind"] = "residuals";
  j["config"] = sweep.config;
  j["points"] = json::array();
  for (const auto& p : sweep.points)
    j["points"].push_back({{"eps", num(p.eps)},
                           {"kinetic_residual", num(p.kinetic)},
                           {"remainder_C", num(p.remainder)},
                           {"symbol_bounds",
                            {{"samples", p.symbol.samples},
                             {"value_ratio", num(p.symbol.value_ratio)},
                             {"gradient_ratio", num(p.symbol.gradient_ratio)},
                             {"laplacian_ratio", num(p.symbol.laplacian_ratio)},
                             {"pass", p.symbol.pass}}},
                           {"evolution", to_json(p.evolution)}});
  j["slopes"] = {{"kinetic_residual", to_json(sweep.kinetic_slope)},
                 {"remainder_C", to_json(sweep.remainder_slope)},
                 {"evolution_residual", to_json(sweep.evolution_slope)}};
  if (sweep.check) j["check"] = {{"pass", sweep.check->pass}, {"failures", sweep.check->failures}};
  return j;
}

std::string to_csv(const ComparisonReport& report) {
  std::ostringstream out;
  out << std::setprecision(12);
  out << "eps,N,t,metric,value\n";
  for (const auto& run : report.runs)
    for (const auto& s : run.snapshots)
      for (Metric m : {Metric::trace, Metric::hs, Metric::observable, Metric::wigner_l2}) {
        bool wanted = false;
        for (const auto& slope : report.slopes) wanted = wanted || slope.metric == m;
        if (!wanted && !report.slopes.empty()) continue;
        out << run.eps << ',' << run.N << ',' << s.t << ',' << to_string(m) << ',' << s.value(m) << '\n';
      }
  return out.str();
}

void write_reports(const ComparisonReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream json_out(dir / "report.json");
  json_out << to_json(report).dump(2) << '\n';
  std::ofstream csv_out(dir / "report.csv");
  csv_out << to_csv(report);
  if (!json_out || !csv_out) throw ConfigError("cannot write reports under '" + dir.string() + "'");
}

}  // namespace semiclassic
