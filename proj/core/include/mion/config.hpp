#pragma once

// Scenario configuration files.
//
// A scenario is a flat list of `key = value` lines; `#` starts a comment.
// Physical values are arithmetic expressions followed by a unit:
//
//   omega  = 2pi*11.2e6 rad/s
//   omega0 = 0.01 omega
//   kappa  = 0.05 kappa_crit
//   t_end  = 40 1/rabi
//
// Unknown keys are rejected with the nearest known key as a suggestion, and
// every diagnostic names the key and the line it came from.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mion/errors.hpp"
#include "mion/hilbert.hpp"
#include "mion/integrator.hpp"
#include "mion/lindblad.hpp"

namespace mion {

/// Input error in a configuration file or expression.
class ConfigError : public ValidationError {
 public:
  ConfigError(const std::string& what, std::string key = {}, int line = 0)
      : ValidationError(what), key_(std::move(key)), line_(line) {}

  const std::string& key() const noexcept { return key_; }
  int line() const noexcept { return line_; }

 private:
  std::string key_;
  int line_;
};

/// Evaluates an arithmetic expression: numbers, `pi`, + - * / ^, unary
/// minus, parentheses, implicit multiplication after a number (`2pi`), and
/// the functions sqrt, exp, log, sin, cos, abs.
double evaluate_expression(std::string_view text);

/// Additional verdicts a scenario can ask for beyond the closed-form match.
enum class ScenarioCheck {
  MonotonePDown,     ///< P_down never increases (overdamped / Zeno)
  OscillatingPDown,  ///< P_down - 1/2 changes sign
  ConstantEnergy,    ///< |<H>(t) - <H>(0)| stays within tol_energy
};

std::string_view to_string(ScenarioCheck c);

struct ComparisonTolerances {
  double p_down = 1e-6;
  double mean_position = 1e-5;  ///< x0
  double mean_energy = 1e-6;    ///< hbar omega
};

struct ScenarioConfig {
  std::string name = "scenario";
  TrapParams trap;  ///< SI: rad/s, 1/s, rad
  MotionalStateSpec initial = FockState{0};
  std::string explicit_file;  ///< absolute path when initial is explicit
  int reference_n = 0;        ///< Fock level behind the relative units
  int dim_fock = 0;
  double tail_budget = kDefaultTailBudget;
  DynamicsMode mode = ReducedJCM{};
  IntegratorConfig integrator;  ///< sample_times filled from t_end, samples
  double t_end = 0.0;           ///< s
  int samples = 2000;
  std::vector<std::string> outputs;  ///< numeric channels written out
  bool emit_csv = true;
  bool emit_json = true;
  bool compare = true;  ///< compare against closed forms when in scope
  ComparisonTolerances tolerances;
  std::vector<ScenarioCheck> checks;
  std::vector<std::string> warnings;  ///< regime diagnostics
};

/// Parses a configuration text. `origin` names the source in diagnostics,
/// `base_dir` resolves relative paths (explicit_file). Throws ConfigError.
ScenarioConfig parse_config(std::string_view text, std::string_view origin = "<config>",
                            const std::filesystem::path& base_dir = {});

/// Reads and parses a file; the default scenario name is the file stem.
ScenarioConfig load_config(const std::filesystem::path& path);

/// Fully resolved configuration in the same file format, SI units only,
/// numbers at 17 significant digits, keys in a fixed order. Parsing it
/// reproduces the configuration exactly.
std::string canonical_config(const ScenarioConfig& config);

/// "fnv1a64:<16 hex digits>" of canonical_config(config).
std::string config_hash(const ScenarioConfig& config);

/// Every key the parser accepts, in canonical order.
const std::vector<std::string>& config_keys();

/// The standard numeric channel names in their output order.
const std::vector<std::string>& standard_channels();

}  // namespace mion
