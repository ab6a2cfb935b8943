#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "mion/config.hpp"
#include "mion/scenario.hpp"

namespace fs = std::filesystem;
using namespace mion;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitInput = 2;

const char* verdict(bool ok) { return ok ? "PASS" : "FAIL"; }

fs::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("MION_OUTPUT_DIR"); env && *env) return env;
  return fs::current_path();
}

void print_result(const ScenarioResult& r) {
  std::printf("scenario %s  %s\n", r.config.name.c_str(), r.config_hash.c_str());
  std::printf("  %s, %zu samples, %lld steps accepted, %lld rejected\n",
              describe(r.config.initial).c_str(), r.numeric.size(),
              static_cast<long long>(r.stats.accepted),
              static_cast<long long>(r.stats.rejected));
  for (const auto& w : r.config.warnings) std::printf("  warning: %s\n", w.c_str());
  if (!r.complete) std::printf("  INCOMPLETE: %s\n", r.failure.c_str());
  const auto& rep = r.report;
  if (rep.comparisons.empty()) std::printf("  no closed-form comparison for this scenario\n");
  for (const auto& c : rep.comparisons) {
    std::printf("  %-16s max |numeric - analytic| %.3e at t = %.6g s  (tol %.1e)  %s\n",
                c.channel.c_str(), c.max_abs_deviation, c.time_of_max, c.tolerance,
                verdict(c.pass));
  }
  for (const auto& e : rep.envelopes) {
    if (e.fit.valid()) {
      std::printf("  envelope %-13s rate %.6g 1/s  95%% CI [%.6g, %.6g]  kappa/4 = %.6g\n",
                  e.channel.c_str(), e.fit.rate, e.fit.ci_low, e.fit.ci_high, e.expected_rate);
    } else {
      std::printf("  envelope %-13s not fitted (too few extrema)\n", e.channel.c_str());
    }
  }
  for (const auto& c : rep.checks) {
    std::printf("  check %-18s %s  %s\n", std::string(to_string(c.check)).c_str(),
                verdict(c.pass), c.detail.c_str());
  }
  std::printf("  min dX*dP %.10f (floor %.0f)  %s\n", rep.min_uncertainty_product,
              kUncertaintyFloor, verdict(rep.uncertainty_ok));
  std::printf("  verdict %s\n", verdict(r.pass()));
}

int run_and_write(const ScenarioConfig& config, const std::string& out_flag) {
  const auto result = run_scenario(config);
  print_result(result);
  for (const auto& p : write_artifacts(result, output_dir(out_flag))) {
    std::printf("  wrote %s\n", p.string().c_str());
  }
  return result.pass() ? kExitPass : kExitFail;
}

std::map<std::string, double> parse_tolerances(const std::string& text, double& fallback) {
  std::map<std::string, double> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      fallback = evaluate_expression(item);
    } else {
      out[item.substr(0, eq)] = evaluate_expression(item.substr(eq + 1));
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trapped-ion sideband dynamics under continuous measurement"};
  app.require_subcommand(1);
  std::string out_flag;

  auto* run = app.add_subcommand("run", "integrate a scenario file and write CSV/JSON");
  std::string config_path;
  run->add_option("config", config_path, "scenario file")->required();
  run->add_option("-o,--output", out_flag, "output directory (overrides MION_OUTPUT_DIR)");

  auto* sweep = app.add_subcommand("sweep", "sweep the measurement strength kappa");
  std::string sweep_config, grid_text;
  SweepOptions sweep_options;
  sweep->add_option("config", sweep_config, "scenario file")->required();
  sweep->add_option("--kappa", grid_text,
                    "start:stop:steps[:log] or a comma list, optionally followed by a "
                    "unit (1/s, kappa_crit)")
      ->required();
  sweep->add_option("--periods", sweep_options.periods, "run length in Rabi periods");
  sweep->add_option("--samples-per-period", sweep_options.samples_per_period);
  sweep->add_option("--threads", sweep_options.threads, "0 = all cores");
  sweep->add_option("-o,--output", out_flag, "output directory (overrides MION_OUTPUT_DIR)");

  auto* presets_cmd = app.add_subcommand("presets", "list, show or run the shipped presets");
  presets_cmd->require_subcommand(1);
  presets_cmd->add_subcommand("list", "list presets");
  auto* preset_show = presets_cmd->add_subcommand("show", "print a preset's scenario file");
  auto* preset_run = presets_cmd->add_subcommand("run", "run a preset");
  std::string preset_name;
  preset_show->add_option("name", preset_name)->required();
  preset_run->add_option("name", preset_name)->required();
  preset_run->add_option("-o,--output", out_flag, "output directory (overrides MION_OUTPUT_DIR)");

  auto* compare = app.add_subcommand("compare", "compare the numeric channels of two JSON artifacts");
  std::string json_a, json_b, tol_text = "1e-6";
  compare->add_option("a", json_a)->required();
  compare->add_option("b", json_b)->required();
  compare->add_option("--tol", tol_text,
                      "default tolerance and/or channel=tolerance pairs, comma separated");

  auto* verify = app.add_subcommand("verify", "check a JSON artifact's recorded config hash");
  std::string json_verify;
  verify->add_option("artifact", json_verify)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitInput;
  }

  try {
    if (*run) return run_and_write(load_config(config_path), out_flag);

    if (*sweep) {
      const auto base = load_config(sweep_config);
      const auto grid = parse_kappa_grid(grid_text, base);
      const auto rows = sweep_kappa(base, grid, sweep_options);
      std::printf("%14s %10s %12s %6s %14s %14s\n", "kappa[1/s]", "k/k_crit", "branch", "osc",
                  "fit rate", "kappa/4");
      bool all_ok = true;
      for (const auto& r : rows) {
        if (!r.error.empty()) {
          all_ok = false;
          std::printf("%14.6g %10.4f  error: %s\n", r.kappa, r.kappa_over_crit, r.error.c_str());
          continue;
        }
        std::printf("%14.6g %10.4f %12s %6d %14.6g %14.6g\n", r.kappa, r.kappa_over_crit,
                    std::string(to_string(r.frequency.branch)).c_str(), r.oscillations,
                    r.fit.rate, r.expected_rate);
      }
      const auto dir = output_dir(out_flag);
      fs::create_directories(dir);
      const auto path = dir / (base.name + "-sweep.csv");
      std::ofstream(path, std::ios::binary) << sweep_to_csv(rows);
      std::printf("wrote %s\n", path.string().c_str());
      return all_ok ? kExitPass : kExitFail;
    }

    if (*presets_cmd) {
      if (presets_cmd->got_subcommand("list")) {
        for (const auto& p : presets()) {
          std::printf("%-18s %s\n", p.name.c_str(), p.description.c_str());
        }
        return kExitPass;
      }
      const auto& preset = find_preset(preset_name);
      if (*preset_show) {
        std::fputs(preset.text.empty() ? "(built-in report, no scenario file)\n"
                                       : preset.text.c_str(),
                   stdout);
        return kExitPass;
      }
      if (preset.text.empty()) {
        const auto numbers = headline_numbers();
        std::fputs(to_text(numbers).c_str(), stdout);
        // the report exists to surface the printed inconsistency; it passes
        // when the ratio round-trips
        return numbers.ratio_agrees ? kExitPass : kExitFail;
      }
      auto config = parse_config(preset.text, "preset " + preset.name);
      config.name = preset.name;
      return run_and_write(config, out_flag);
    }

    if (*compare) {
      const auto a = load_artifact(json_a);
      const auto b = load_artifact(json_b);
      double fallback = 1e-6;
      const auto tolerances = parse_tolerances(tol_text, fallback);
      bool ok = true;
      for (const auto& c : compare_artifacts(a, b, tolerances, fallback)) {
        ok = ok && c.pass;
        std::printf("%-20s max |a - b| %.3e at t = %.6g s  (tol %.1e)  %s\n", c.channel.c_str(),
                    c.max_abs_deviation, c.time_of_max, c.tolerance, verdict(c.pass));
      }
      if (a.config_hash != b.config_hash) {
        std::printf("note: config hashes differ (%s vs %s)\n", a.config_hash.c_str(),
                    b.config_hash.c_str());
      }
      std::printf("verdict %s\n", verdict(ok));
      return ok ? kExitPass : kExitFail;
    }

    if (*verify) {
      const auto a = load_artifact(json_verify);
      const auto recomputed = recompute_config_hash(a);
      const bool ok = recomputed == a.config_hash;
      std::printf("recorded   %s\nrecomputed %s\n%s\n", a.config_hash.c_str(), recomputed.c_str(),
                  verdict(ok));
      return ok ? kExitPass : kExitFail;
    }
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  } catch (const TruncationError& e) {
    std::fprintf(stderr, "error: %s (try dim_fock = %zu)\n", e.what(), e.required_dim());
    return kExitInput;
  } catch (const InvalidDimension& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFail;
  }
  return kExitInput;
}
