#include "mion/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mion/lindblad.hpp"

namespace mion {

using Json = nlohmann::ordered_json;

namespace {

constexpr const char* kArtifactFormat = "mion-scenario/1";
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string number17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

constexpr const char* kAnalyticSuffix = "@analytic";

}  // namespace

bool ScenarioReport::pass() const {
  const bool comparisons_ok = std::all_of(comparisons.begin(), comparisons.end(),
                                          [](const auto& c) { return c.pass; });
  const bool checks_ok =
      std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
  return comparisons_ok && checks_ok && uncertainty_ok;
}

ChannelComparison compare_channel(const std::string& channel, const TimeSeries& a,
                                  const TimeSeries& b, double tolerance) {
  const auto& va = a.values(channel);
  const auto& vb = b.values(channel);
  if (va.size() != vb.size()) {
    throw ValidationError("channel '" + channel + "' has different lengths in the two series");
  }
  ChannelComparison out{channel, 0.0, 0.0, tolerance, true};
  for (std::size_t i = 0; i < va.size(); ++i) {
    const double d = std::abs(va[i] - vb[i]);
    if (d > out.max_abs_deviation || std::isnan(d)) {
      out.max_abs_deviation = d;
      out.time_of_max = a.times()[i];
      if (std::isnan(d)) break;
    }
  }
  out.pass = out.max_abs_deviation <= tolerance;
  return out;
}

// -- runs --------------------------------------------------------------------

namespace {

CheckOutcome evaluate_check(ScenarioCheck check, const TimeSeries& s,
                            const ComparisonTolerances& tol) {
  CheckOutcome out{check, false, {}};
  const auto& t = s.times();
  std::ostringstream detail;
  switch (check) {
    case ScenarioCheck::MonotonePDown: {
      const auto& p = s.values(channels::kPDown);
      double worst = 0.0;
      for (std::size_t i = 1; i < p.size(); ++i) worst = std::max(worst, p[i] - p[i - 1]);
      out.pass = worst <= 1e-12;
      detail << "largest increase of P_down between samples: " << worst;
      break;
    }
    case ScenarioCheck::OscillatingPDown: {
      const int n = count_crossings(t, s.values(channels::kPDown), 0.5, t.back());
      out.pass = n > 0;
      detail << n << " sign changes of P_down - 1/2";
      break;
    }
    case ScenarioCheck::ConstantEnergy: {
      const auto& e = s.values(channels::kMeanEnergy);
      double drift = 0.0;
      for (double v : e) drift = std::max(drift, std::abs(v - e.front()));
      out.pass = drift <= tol.mean_energy;
      detail << "max |<H>(t) - <H>(0)| = " << drift << " hbar*omega (tolerance "
             << tol.mean_energy << ")";
      break;
    }
  }
  out.detail = detail.str();
  return out;
}

/// Envelope rate of numeric position: the closed form with its
/// exp(-kappa t / 4) factor removed serves as the undamped profile.
EnvelopeFit position_envelope(const TimeSeries& numeric, const TimeSeries& analytic,
                              double kappa) {
  const auto& t = numeric.times();
  const auto& x = analytic.values(channels::kMeanPosition);
  std::vector<double> profile(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) profile[i] = x[i] * std::exp(kappa * t[i] / 4);
  return {channels::kMeanPosition,
          fit_decay_against_profile(t, numeric.values(channels::kMeanPosition), profile),
          kappa / 4};
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& config) {
  const auto& c = config;
  c.trap.validate();
  c.integrator.validate();

  ScenarioResult res;
  res.config = c;
  res.config_hash = config_hash(c);

  const auto prepared = initial_state(c.initial, c.dim_fock, c.tail_budget);
  res.initial_renormalization = prepared.renormalization;
  const auto rho0 = compose_initial(prepared.matrix, c.dim_fock);

  IntegrationOptions options;
  options.tail_budget = c.tail_budget;
  options.compute_min_eigenvalue =
      std::find(c.outputs.begin(), c.outputs.end(), channels::kMinEigenvalue) != c.outputs.end();
  auto run = integrate_collecting(rho0, c.trap, c.mode, c.integrator, options);
  res.numeric = std::move(run.series);
  res.stats = run.stats;
  if (run.failure) {
    res.complete = false;
    try {
      std::rethrow_exception(run.failure);
    } catch (const std::exception& e) {
      res.failure = e.what();
    }
  }

  auto& report = res.report;
  const auto& numeric = res.numeric;
  if (numeric.size() == 0) return res;

  const int k = c.trap.k_sideband;
  const bool in_scope = std::holds_alternative<ReducedJCM>(c.mode);
  if (c.compare && in_scope) {
    const auto table = rabi_table(c.trap, c.dim_fock - 1 + k);
    res.analytic =
        analytic_series(c.trap, table, prepared.matrix, numeric.times(), k == 1);
    const auto& a = *res.analytic;
    report.comparisons.push_back(
        compare_channel(channels::kPDown, numeric, a, c.tolerances.p_down));
    if (k == 1) {
      report.comparisons.push_back(
          compare_channel(channels::kMeanPosition, numeric, a, c.tolerances.mean_position));
    }
    report.comparisons.push_back(
        compare_channel(channels::kMeanEnergy, numeric, a, c.tolerances.mean_energy));
  }

  report.envelopes.push_back({channels::kPDown,
                              fit_extrema_decay(numeric.times(),
                                                numeric.values(channels::kPDown), 0.5),
                              c.trap.kappa / 4});
  if (res.analytic && res.analytic->has(channels::kMeanPosition)) {
    const auto& x = res.analytic->values(channels::kMeanPosition);
    const bool nontrivial =
        std::any_of(x.begin(), x.end(), [](double v) { return std::abs(v) > 1e-9; });
    if (nontrivial) report.envelopes.push_back(position_envelope(numeric, *res.analytic, c.trap.kappa));
  }

  for (auto check : c.checks) {
    report.checks.push_back(evaluate_check(check, numeric, c.tolerances));
  }

  const auto& vx = numeric.values(channels::kPositionVariance);
  const auto& vp = numeric.values(channels::kMomentumVariance);
  report.min_uncertainty_product = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < vx.size(); ++i) {
    report.min_uncertainty_product =
        std::min(report.min_uncertainty_product, std::sqrt(std::max(0.0, vx[i] * vp[i])));
  }
  report.uncertainty_ok = report.min_uncertainty_product >= kUncertaintyFloor - 1e-8;
  return res;
}

// -- artifacts ---------------------------------------------------------------

std::string to_csv(const ScenarioResult& r) {
  std::ostringstream os;
  std::vector<const std::vector<double>*> columns;
  os << "t_seconds";
  for (const auto& name : r.config.outputs) {
    const auto& ch = r.numeric.channel(name);
    os << ',' << ch.name << '[' << ch.unit << ']';
    columns.push_back(&ch.values);
  }
  if (r.analytic) {
    for (const auto& ch : r.analytic->channels()) {
      os << ',' << ch.name << kAnalyticSuffix << '[' << ch.unit << ']';
      columns.push_back(&ch.values);
    }
  }
  os << '\n';
  const auto& t = r.numeric.times();
  for (std::size_t i = 0; i < t.size(); ++i) {
    os << number17(t[i]);
    for (const auto* col : columns) os << ',' << number17((*col)[i]);
    os << '\n';
  }
  return os.str();
}

namespace {

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json fit_json(const RateFit& f) {
  return Json{{"rate", number_or_null(f.rate)},
              {"std_error", number_or_null(f.std_error)},
              {"ci_low", number_or_null(f.ci_low)},
              {"ci_high", number_or_null(f.ci_high)},
              {"points", f.points},
              {"valid", f.valid()}};
}

Json channels_json(const std::vector<const Channel*>& chans) {
  Json out = Json::array();
  for (const auto* ch : chans) {
    Json values = Json::array();
    for (double v : ch->values) values.push_back(number_or_null(v));
    out.push_back(Json{{"name", ch->name}, {"unit", ch->unit}, {"values", std::move(values)}});
  }
  return out;
}

}  // namespace

std::string to_json(const ScenarioResult& r) {
  Json j;
  j["format"] = kArtifactFormat;
  j["name"] = r.config.name;
  j["provenance"] = std::string(to_string(r.numeric.provenance()));
  j["config_hash"] = r.config_hash;
  j["config"] = canonical_config(r.config);
  j["complete"] = r.complete;
  j["failure"] = r.complete ? Json(nullptr) : Json(r.failure);
  j["pass"] = r.pass();
  j["warnings"] = r.config.warnings;
  j["initial_renormalization"] = r.initial_renormalization;
  j["stats"] = Json{{"accepted_steps", r.stats.accepted},
                    {"rejected_steps", r.stats.rejected},
                    {"rhs_evaluations", r.stats.rhs_evaluations}};

  Json report;
  Json comparisons = Json::array();
  for (const auto& c : r.report.comparisons) {
    comparisons.push_back(Json{{"channel", c.channel},
                               {"max_abs_deviation", number_or_null(c.max_abs_deviation)},
                               {"time_of_max", c.time_of_max},
                               {"tolerance", c.tolerance},
                               {"pass", c.pass}});
  }
  report["comparisons"] = std::move(comparisons);
  Json envelopes = Json::array();
  for (const auto& e : r.report.envelopes) {
    envelopes.push_back(
        Json{{"channel", e.channel}, {"expected_rate", e.expected_rate}, {"fit", fit_json(e.fit)}});
  }
  report["envelopes"] = std::move(envelopes);
  Json checks = Json::array();
  for (const auto& c : r.report.checks) {
    checks.push_back(
        Json{{"check", std::string(to_string(c.check))}, {"pass", c.pass}, {"detail", c.detail}});
  }
  report["checks"] = std::move(checks);
  report["min_uncertainty_product"] = number_or_null(r.report.min_uncertainty_product);
  report["uncertainty_floor"] = kUncertaintyFloor;
  report["uncertainty_ok"] = r.report.uncertainty_ok;
  j["report"] = std::move(report);

  j["times"] = r.numeric.times();
  std::vector<const Channel*> numeric;
  for (const auto& name : r.config.outputs) numeric.push_back(&r.numeric.channel(name));
  j["channels"] = channels_json(numeric);
  if (r.analytic) {
    std::vector<const Channel*> analytic;
    for (const auto& ch : r.analytic->channels()) analytic.push_back(&ch);
    j["analytic"] = channels_json(analytic);
  } else {
    j["analytic"] = nullptr;
  }
  return j.dump(2) + "\n";
}

std::vector<std::filesystem::path> write_artifacts(const ScenarioResult& r,
                                                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto write = [&](const std::string& ext, const std::string& body) {
    const auto path = dir / (r.config.name + ext);
    std::ofstream out(path, std::ios::binary);
    out << body;
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    written.push_back(path);
  };
  if (r.config.emit_csv) write(".csv", to_csv(r));
  if (r.config.emit_json) write(".json", to_json(r));
  return written;
}

namespace {

TimeSeries series_from_json(const Json& chans, Provenance provenance,
                            const std::vector<double>& times) {
  std::vector<Channel> cols;
  for (const auto& ch : chans) {
    Channel c{ch.at("name").get<std::string>(), ch.at("unit").get<std::string>(), {}};
    for (const auto& v : ch.at("values")) c.values.push_back(v.is_null() ? kNaN : v.get<double>());
    cols.push_back(std::move(c));
  }
  return TimeSeries::from_columns(provenance, times, std::move(cols));
}

}  // namespace

LoadedArtifact parse_artifact(std::string_view json_text) {
  try {
    const Json j = Json::parse(json_text);
    if (j.value("format", std::string{}) != kArtifactFormat) {
      throw ValidationError("not a scenario artifact (format tag missing or unknown)");
    }
    LoadedArtifact a;
    a.name = j.at("name").get<std::string>();
    a.config_hash = j.at("config_hash").get<std::string>();
    a.canonical_config = j.at("config").get<std::string>();
    a.complete = j.at("complete").get<bool>();
    const auto times = j.at("times").get<std::vector<double>>();
    a.numeric = series_from_json(
        j.at("channels"), provenance_from_string(j.at("provenance").get<std::string>()), times);
    if (!j.at("analytic").is_null()) {
      a.analytic = series_from_json(j.at("analytic"), Provenance::Analytic, times);
    }
    return a;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed artifact: ") + e.what());
  }
}

LoadedArtifact load_artifact(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open artifact '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_artifact(text.str());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string recompute_config_hash(const LoadedArtifact& artifact) {
  return config_hash(parse_config(artifact.canonical_config, artifact.name + " (recorded config)"));
}

std::vector<ChannelComparison> compare_artifacts(
    const LoadedArtifact& a, const LoadedArtifact& b,
    const std::map<std::string, double>& tolerances, double default_tolerance) {
  const auto& ta = a.numeric.times();
  const auto& tb = b.numeric.times();
  if (ta.size() != tb.size()) {
    throw ValidationError("time grids differ in length (" + std::to_string(ta.size()) +
                          " vs " + std::to_string(tb.size()) + ")");
  }
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (std::abs(ta[i] - tb[i]) > 1e-12 * std::max(1.0, std::abs(ta[i]))) {
      throw ValidationError("time grids differ at sample " + std::to_string(i));
    }
  }
  for (const auto& [name, tol] : tolerances) {
    if (!a.numeric.has(name) || !b.numeric.has(name)) {
      throw ValidationError("tolerance given for channel '" + name +
                            "' which is not in both artifacts");
    }
    (void)tol;
  }
  std::vector<ChannelComparison> out;
  for (const auto& ch : a.numeric.channels()) {
    if (!b.numeric.has(ch.name)) continue;
    const auto it = tolerances.find(ch.name);
    out.push_back(compare_channel(ch.name, a.numeric, b.numeric,
                                  it == tolerances.end() ? default_tolerance : it->second));
  }
  return out;
}

// -- kappa sweeps ------------------------------------------------------------

namespace {

double reference_rabi(const ScenarioConfig& c) {
  return std::abs(rabi_frequency(c.reference_n, c.trap));
}

}  // namespace

std::vector<double> parse_kappa_grid(std::string_view text_in, const ScenarioConfig& base) {
  std::string text(text_in);
  auto fail = [&](const std::string& what) -> void {
    throw ConfigError("kappa grid '" + std::string(text_in) + "': " + what, "kappa");
  };
  double scale = 1.0;
  const auto cut = text.find_last_of(" \t");
  if (cut != std::string::npos) {
    const std::string unit = text.substr(cut + 1);
    if (unit == "kappa_crit") {
      const double rabi = reference_rabi(base);
      if (rabi == 0.0) fail("kappa_crit is zero for the reference manifold");
      scale = 4.0 * rabi;
    } else if (unit != "1/s" && unit != "s^-1") {
      fail("unknown unit '" + unit + "' (accepted: 1/s, s^-1, kappa_crit)");
    }
    text.resize(cut);
  }

  std::vector<double> grid;
  auto eval = [&](const std::string& part) {
    try {
      return evaluate_expression(part);
    } catch (const ConfigError& e) {
      fail(e.what());
    }
    return 0.0;
  };
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::istringstream in(text);
    for (std::string p; std::getline(in, p, ':');) parts.push_back(p);
    const bool log = parts.size() == 4 && parts[3] == "log";
    if (parts.size() != 3 && !log) fail("expected start:stop:steps[:log]");
    const double start = eval(parts[0]);
    const double stop = eval(parts[1]);
    const double steps_d = eval(parts[2]);
    if (steps_d < 1 || steps_d != std::floor(steps_d)) fail("steps must be a positive integer");
    const int steps = static_cast<int>(steps_d);
    if (log && !(start > 0)) fail("a log grid needs start > 0");
    for (int i = 0; i < steps; ++i) {
      const double f = steps == 1 ? 0.0 : double(i) / (steps - 1);
      grid.push_back(log ? start * std::pow(stop / start, f) : start + (stop - start) * f);
    }
    grid.back() = steps == 1 ? start : stop;
  } else {
    std::istringstream in(text);
    for (std::string p; std::getline(in, p, ',');) grid.push_back(eval(p));
  }
  for (auto& v : grid) v *= scale;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 0) fail("values must be >= 0");
    if (i > 0 && !(grid[i] > grid[i - 1])) fail("values must be strictly ascending");
  }
  if (grid.empty()) fail("empty grid");
  return grid;
}

std::vector<SweepRow> sweep_kappa(const ScenarioConfig& base, const std::vector<double>& kappas,
                                  const SweepOptions& options) {
  const double rabi = reference_rabi(base);
  if (rabi == 0.0) {
    throw ConfigError("sweep needs a nonzero Rabi frequency for reference_n = " +
                          std::to_string(base.reference_n),
                      "reference_n");
  }
  if (!(options.periods > 0) || options.samples_per_period < 4) {
    throw ValidationError("sweep needs periods > 0 and samples_per_period >= 4");
  }
  const double t_end = options.periods * 2.0 * std::numbers::pi / rabi;
  const int samples =
      static_cast<int>(std::ceil(options.periods * options.samples_per_period)) + 1;
  const auto prepared = initial_state(base.initial, base.dim_fock, base.tail_budget);
  const auto rho0 = compose_initial(prepared.matrix, base.dim_fock);

  std::vector<SweepRow> rows(kappas.size());
  auto evaluate = [&](std::size_t i) {
    SweepRow& row = rows[i];
    row.kappa = kappas[i];
    row.kappa_over_crit = kappas[i] / (4.0 * rabi);
    row.frequency = branched_frequency(rabi, kappas[i]);
    row.expected_rate = kappas[i] / 4;
    row.window = 10.0 / rabi;
    try {
      TrapParams trap = base.trap;
      trap.kappa = kappas[i];
      IntegratorConfig ic = base.integrator;
      ic.sample_times = uniform_times(t_end, samples);
      if (ic.method == Method::FixedRK4) ic.max_step = std::min(ic.max_step, t_end / (samples - 1));
      IntegrationOptions opt;
      opt.tail_budget = base.tail_budget;
      opt.compute_min_eigenvalue = false;
      const auto run = integrate(rho0, trap, base.mode, ic, opt);
      const auto& t = run.series.times();
      const auto& p = run.series.values(channels::kPDown);
      row.fit = fit_extrema_decay(t, p, 0.5);
      row.oscillations = count_crossings(t, p, 0.5, row.window);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  };

  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(kappas.size())));
  std::atomic<std::size_t> next{0};
  std::vector<std::future<void>> workers;
  for (unsigned w = 0; w < threads; ++w) {
    workers.push_back(std::async(std::launch::async, [&] {
      for (std::size_t i; (i = next.fetch_add(1)) < kappas.size();) evaluate(i);
    }));
  }
  for (auto& f : workers) f.get();
  return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "kappa[1/s],kappa_over_crit[1],branch,radicand[rad^2/s^2],w[rad/s],"
        "fit_rate[1/s],fit_ci_low[1/s],fit_ci_high[1/s],expected_rate[1/s],"
        "oscillations[1],window[s],error\n";
  for (const auto& r : rows) {
    std::string error = r.error;
    for (std::size_t p = 0; (p = error.find('"', p)) != std::string::npos; p += 2) {
      error.insert(p, 1, '"');
    }
    os << number17(r.kappa) << ',' << number17(r.kappa_over_crit) << ','
       << to_string(r.frequency.branch) << ',' << number17(r.frequency.radicand) << ','
       << number17(r.frequency.value) << ',' << number17(r.fit.rate) << ','
       << number17(r.fit.ci_low) << ',' << number17(r.fit.ci_high) << ','
       << number17(r.expected_rate) << ',' << r.oscillations << ',' << number17(r.window)
       << ",\"" << error << "\"\n";
  }
  return os.str();
}

// -- presets -----------------------------------------------------------------

const std::vector<Preset>& presets() {
  static const std::vector<Preset> all = [] {
    std::vector<Preset> v{
#include "mion_presets.inc"
    };
    v.push_back({"headline-numbers",
                 "arithmetic check of the headline measurement rate, decay time and "
                 "kappa/kappa_crit ratio",
                 {}});
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    return v;
  }();
  return all;
}

const Preset& find_preset(std::string_view name) {
  for (const auto& p : presets()) {
    if (p.name == name) return p;
  }
  std::string known;
  for (const auto& p : presets()) known += (known.empty() ? "" : ", ") + p.name;
  throw ConfigError("unknown preset '" + std::string(name) + "' (available: " + known + ")");
}

HeadlineNumbers headline_numbers() {
  HeadlineNumbers p;
  p.tau_computed = 4.0 / p.kappa;
  p.tau_ratio = p.tau_printed / p.tau_computed;
  p.tau_agrees = std::abs(p.tau_ratio - 1.0) <= 0.01;
  p.omega01 = p.kappa / (4.0 * p.ratio_printed);
  p.kappa_crit01 = 4.0 * p.omega01;
  p.ratio_roundtrip = p.kappa / p.kappa_crit01;
  p.ratio_agrees = std::abs(p.ratio_roundtrip / p.ratio_printed - 1.0) <= 1e-12;
  p.tau_experiment_vs_computed = (p.tau_experiment - p.tau_computed) / p.tau_computed;
  return p;
}

std::string to_text(const HeadlineNumbers& p) {
  char buf[512];
  std::string out;
  auto line = [&](const char* fmt, auto... args) {
    std::snprintf(buf, sizeof buf, fmt, args...);
    out += buf;
    out += '\n';
  };
  line("kappa                          %.4g 1/s", p.kappa);
  line("tau = 4/kappa                  %.4g us   printed %.4g us   %s (printed/computed = %.4g)",
       p.tau_computed * 1e6, p.tau_printed * 1e6, p.tau_agrees ? "AGREE" : "DISAGREE",
       p.tau_ratio);
  line("Omega_01 = kappa/(4 * %.3g)    %.4g 1/s", p.ratio_printed, p.omega01);
  line("kappa_crit_01 = 4 Omega_01     %.4g 1/s", p.kappa_crit01);
  line("kappa / kappa_crit_01          %.4g   printed %.4g   %s", p.ratio_roundtrip,
       p.ratio_printed, p.ratio_agrees ? "AGREE" : "DISAGREE");
  line("measured tau for |down,0> -> |up,1>   %.4g us   vs 4/kappa: %+.1f %%",
       p.tau_experiment * 1e6, 100.0 * p.tau_experiment_vs_computed);
  return out;
}

}  // namespace mion
