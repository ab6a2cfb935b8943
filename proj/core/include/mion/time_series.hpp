#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mion {

enum class Provenance { NumericJCM, NumericFull, Analytic };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

struct Channel {
  std::string name;
  std::string unit;
  std::vector<double> values;
};

// Standard channel names.
namespace channels {
inline constexpr const char* kPDown = "P_down";
inline constexpr const char* kMeanPosition = "mean_position";
inline constexpr const char* kMeanMomentum = "mean_momentum";
inline constexpr const char* kMeanEnergy = "mean_energy";
inline constexpr const char* kPositionSq = "mean_position_sq";
inline constexpr const char* kMomentumSq = "mean_momentum_sq";
inline constexpr const char* kPositionVariance = "position_variance";
inline constexpr const char* kMomentumVariance = "momentum_variance";
inline constexpr const char* kTraceError = "trace_error";
inline constexpr const char* kHermiticityDefect = "hermiticity_defect";
inline constexpr const char* kMinEigenvalue = "min_eigenvalue";
inline constexpr const char* kTailMass = "tail_mass";
inline constexpr const char* kPurity = "purity";
}  // namespace channels

/// Sampled trajectory of named real observables.
class TimeSeries {
 public:
  TimeSeries() = default;
  explicit TimeSeries(Provenance provenance) : provenance_(provenance) {}

  Provenance provenance() const { return provenance_; }
  const std::vector<double>& times() const { return times_; }
  const std::vector<Channel>& channels() const { return channels_; }
  std::size_t size() const { return times_.size(); }

  /// Declares a channel; must happen before the first sample is appended.
  void add_channel(std::string name, std::string unit);
  bool has(std::string_view name) const { return find(name) != nullptr; }
  const Channel* find(std::string_view name) const;
  /// Throws ValidationError when the channel is absent.
  const Channel& channel(std::string_view name) const;
  const std::vector<double>& values(std::string_view name) const {
    return channel(name).values;
  }

  /// Appends one sample; `row` holds one value per declared channel.
  void append(double t, const std::vector<double>& row);

  /// Builds a series directly from columns (all must match times.size()).
  static TimeSeries from_columns(Provenance provenance, std::vector<double> times,
                                 std::vector<Channel> columns);

 private:
  Provenance provenance_ = Provenance::Analytic;
  std::vector<double> times_;
  std::vector<Channel> channels_;
};

}  // namespace mion
