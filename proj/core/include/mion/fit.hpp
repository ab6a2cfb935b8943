#pragma once

// Signal analysis on sampled channels: envelope decay-rate fits and
// oscillation counting.

#include <limits>
#include <span>

namespace mion {

struct RateFit {
  double rate = std::numeric_limits<double>::quiet_NaN();  ///< 1/s
  double std_error = std::numeric_limits<double>::quiet_NaN();
  double ci_low = std::numeric_limits<double>::quiet_NaN();  ///< 95 %
  double ci_high = std::numeric_limits<double>::quiet_NaN();
  int points = 0;

  bool valid() const { return points >= 3 && rate == rate; }
};

/// Fits |v - baseline| ~ A exp(-rate t) through the local extrema of
/// v - baseline (parabolically refined). Extrema below `floor` are ignored.
RateFit fit_extrema_decay(std::span<const double> t, std::span<const double> v,
                          double baseline, double floor = 1e-10);

/// Fits v ~ exp(-rate t) * profile by regressing log|v / profile| on t,
/// using the samples where |profile| exceeds min_relative * max|profile|.
RateFit fit_decay_against_profile(std::span<const double> t, std::span<const double> v,
                                  std::span<const double> profile,
                                  double min_relative = 0.1);

/// Sign changes of v - baseline for samples with t <= window. Values within
/// +-deadband of the baseline do not establish a sign.
int count_crossings(std::span<const double> t, std::span<const double> v,
                    double baseline, double window, double deadband = 1e-7);

/// Two-sided 95 % Student-t quantile.
double student_t95(int dof);

}  // namespace mion
