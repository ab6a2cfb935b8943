#pragma once

// Scenario runs, kappa sweeps, artifact files and the shipped presets.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mion/closed_form.hpp"
#include "mion/config.hpp"
#include "mion/fit.hpp"
#include "mion/time_series.hpp"

namespace mion {

/// Lower bound of dX * dP with X = a + a^dagger and P = i(a^dagger - a),
/// i.e. dx * dp >= x0 * p0.
inline constexpr double kUncertaintyFloor = 1.0;

struct ChannelComparison {
  std::string channel;
  double max_abs_deviation = 0;
  double time_of_max = 0;  ///< s
  double tolerance = 0;
  bool pass = true;
};

/// Decay rate of a channel's envelope next to the expected kappa/4.
struct EnvelopeFit {
  std::string channel;
  RateFit fit;
  double expected_rate = 0;  ///< 1/s
};

struct CheckOutcome {
  ScenarioCheck check;
  bool pass = false;
  std::string detail;
};

struct ScenarioReport {
  std::vector<ChannelComparison> comparisons;  ///< empty when out of closed-form scope
  std::vector<EnvelopeFit> envelopes;
  std::vector<CheckOutcome> checks;
  double min_uncertainty_product = 0;  ///< min over samples of dX * dP
  bool uncertainty_ok = true;

  bool pass() const;
};

struct ScenarioResult {
  ScenarioConfig config;
  std::string config_hash;
  TimeSeries numeric;
  std::optional<TimeSeries> analytic;  ///< same grid as numeric
  StepStats stats;
  double initial_renormalization = 1.0;
  bool complete = true;
  std::string failure;  ///< integrator error text when incomplete
  ScenarioReport report;

  bool pass() const { return complete && report.pass(); }
};

/// Integrates the scenario, evaluates closed forms where they apply (reduced
/// JCM; position only for k = 1) and builds the report. Integrator failures
/// are captured: the samples produced so far are kept and `complete` is false.
/// Invalid configurations throw.
ScenarioResult run_scenario(const ScenarioConfig& config);

/// Max |a - b| per channel on a shared grid.
ChannelComparison compare_channel(const std::string& channel, const TimeSeries& a,
                                  const TimeSeries& b, double tolerance);

// -- artifacts ---------------------------------------------------------------

/// `t_seconds`, then the configured numeric channels, then `<name>@analytic`
/// columns; header cells are `name[unit]`, numbers at 17 significant digits.
std::string to_csv(const ScenarioResult& result);

/// Metadata, canonical configuration, hash, report and all channel arrays.
std::string to_json(const ScenarioResult& result);

/// Writes `<name>.csv` / `<name>.json` into `dir` as configured; returns the
/// paths written.
std::vector<std::filesystem::path> write_artifacts(const ScenarioResult& result,
                                                   const std::filesystem::path& dir);

/// A JSON artifact read back from disk.
struct LoadedArtifact {
  std::string name;
  std::string config_hash;       ///< as recorded
  std::string canonical_config;  ///< as recorded
  bool complete = true;
  TimeSeries numeric;
  std::optional<TimeSeries> analytic;
};

/// Parses a JSON artifact. Throws ValidationError on malformed content.
LoadedArtifact parse_artifact(std::string_view json_text);
LoadedArtifact load_artifact(const std::filesystem::path& path);

/// Re-parses the recorded canonical configuration and returns its hash.
std::string recompute_config_hash(const LoadedArtifact& artifact);

/// Channel-by-channel comparison of two artifacts' numeric series. Channels
/// present in only one artifact are skipped; `tolerances` maps channel
/// names to limits, other channels use `default_tolerance`. Throws
/// ValidationError when the time grids differ.
std::vector<ChannelComparison> compare_artifacts(
    const LoadedArtifact& a, const LoadedArtifact& b,
    const std::map<std::string, double>& tolerances, double default_tolerance);

// -- kappa sweeps ------------------------------------------------------------

/// "start:stop:steps[:log]" with optional trailing unit (1/s or
/// kappa_crit, relative to reference_n), or a comma-separated list.
/// Values must be non-negative and strictly ascending; log grids need
/// start > 0.
std::vector<double> parse_kappa_grid(std::string_view text, const ScenarioConfig& base);

struct SweepRow {
  double kappa = 0;               ///< 1/s
  double kappa_over_crit = 0;     ///< kappa / kappa_crit(reference_n)
  BranchedFrequency frequency;    ///< w for the reference manifold
  RateFit fit;                    ///< extrema fit of P_down - 1/2
  double expected_rate = 0;       ///< kappa / 4
  int oscillations = 0;           ///< sign changes of P_down - 1/2 in window
  double window = 0;              ///< s, 10 / |Omega_ref|
  std::string error;              ///< non-empty when the row failed
};

struct SweepOptions {
  double periods = 10.0;          ///< run length in reference Rabi periods
  int samples_per_period = 200;
  unsigned threads = 0;           ///< 0: hardware concurrency
};

/// One reduced run per kappa, rows evaluated in parallel and returned in
/// grid order. Row failures are recorded in the row, not thrown.
std::vector<SweepRow> sweep_kappa(const ScenarioConfig& base, const std::vector<double>& kappas,
                                  const SweepOptions& options = {});

std::string sweep_to_csv(const std::vector<SweepRow>& rows);

// -- presets -----------------------------------------------------------------

struct Preset {
  std::string name;
  std::string description;
  std::string text;  ///< configuration file contents; empty for report presets
};

/// The shipped presets, sorted by name.
const std::vector<Preset>& presets();
const Preset& find_preset(std::string_view name);  ///< throws ConfigError

/// Arithmetic behind the headline measurement numbers of the single-ion
/// sideband experiment: kappa = 4.9e4 1/s, tau = 4/kappa, and the printed
/// ratio kappa / kappa_crit01 = 2.1e-2.
struct HeadlineNumbers {
  double kappa = 4.9e4;
  double tau_computed = 0;         ///< 4 / kappa, s
  double tau_printed = 816e-6;     ///< s
  bool tau_agrees = false;         ///< within 1 %
  double tau_ratio = 0;            ///< printed / computed
  double ratio_printed = 2.1e-2;
  double omega01 = 0;              ///< kappa / (4 * ratio_printed), 1/s
  double kappa_crit01 = 0;         ///< 4 * omega01
  double ratio_roundtrip = 0;      ///< kappa / kappa_crit01
  bool ratio_agrees = false;       ///< within 1e-12 relative
  double tau_experiment = 84e-6;   ///< s, measured for |down,0> -> |up,1>
  double tau_experiment_vs_computed = 0;  ///< relative difference
};

HeadlineNumbers headline_numbers();
std::string to_text(const HeadlineNumbers& numbers);

}  // namespace mion
