#include "mion/fit.hpp"

#include <cmath>
#include <vector>

#include "mion/errors.hpp"

namespace mion {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw ValidationError("fit: time and value lengths differ");
}

// Ordinary least squares y = c + s x; returns rate = -s.
RateFit regress(const std::vector<double>& x, const std::vector<double>& y) {
  RateFit fit;
  fit.points = static_cast<int>(x.size());
  if (x.size() < 3) return fit;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= double(x.size());
  my /= double(x.size());
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) return fit;
  const double slope = sxy / sxx;
  double ssr = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (my + slope * (x[i] - mx));
    ssr += r * r;
  }
  const int dof = fit.points - 2;
  fit.rate = -slope;
  fit.std_error = std::sqrt(ssr / dof / sxx);
  const double half = student_t95(dof) * fit.std_error;
  fit.ci_low = fit.rate - half;
  fit.ci_high = fit.rate + half;
  return fit;
}

}  // namespace

double student_t95(int dof) {
  static constexpr double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365,
                                     2.306,  2.262, 2.228, 2.201, 2.179, 2.160, 2.145,
                                     2.131,  2.120, 2.110, 2.101, 2.093, 2.086, 2.080,
                                     2.074,  2.069, 2.064, 2.060, 2.056, 2.052, 2.048,
                                     2.045,  2.042};
  if (dof < 1) return std::numeric_limits<double>::infinity();
  if (dof <= 30) return table[dof - 1];
  if (dof <= 60) return 2.000;
  if (dof <= 120) return 1.980;
  return 1.960;
}

RateFit fit_extrema_decay(std::span<const double> t, std::span<const double> v,
                          double baseline, double floor) {
  check_lengths(t.size(), v.size());
  std::vector<double> xs, ys;
  const std::size_t n = t.size();
  if (n < 3) return {};
  auto s = [&](std::size_t i) { return v[i] - baseline; };

  if (std::abs(s(0)) >= std::abs(s(1)) && std::abs(s(0)) > floor) {
    xs.push_back(t[0]);
    ys.push_back(std::log(std::abs(s(0))));
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double a = s(i - 1), b = s(i), c = s(i + 1);
    if (!(std::abs(b) >= std::abs(a) && std::abs(b) > std::abs(c))) continue;
    if (a * b <= 0 || b * c <= 0) continue;
    const double curvature = a - 2 * b + c;
    double offset = 0.0, peak = b;
    if (curvature != 0.0) {
      offset = 0.5 * (a - c) / curvature;
      if (std::abs(offset) <= 1.0) {
        peak = b - 0.25 * (a - c) * offset;
      } else {
        offset = 0.0;
      }
    }
    if (std::abs(peak) <= floor) continue;
    const double dt = offset >= 0 ? t[i + 1] - t[i] : t[i] - t[i - 1];
    xs.push_back(t[i] + offset * dt);
    ys.push_back(std::log(std::abs(peak)));
  }
  return regress(xs, ys);
}

RateFit fit_decay_against_profile(std::span<const double> t, std::span<const double> v,
                                  std::span<const double> profile, double min_relative) {
  check_lengths(t.size(), v.size());
  check_lengths(t.size(), profile.size());
  double peak = 0.0;
  for (double p : profile) peak = std::max(peak, std::abs(p));
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (std::abs(profile[i]) <= min_relative * peak) continue;
    const double ratio = v[i] / profile[i];
    if (!(ratio > 0)) continue;
    xs.push_back(t[i]);
    ys.push_back(std::log(ratio));
  }
  return regress(xs, ys);
}

int count_crossings(std::span<const double> t, std::span<const double> v, double baseline,
                    double window, double deadband) {
  check_lengths(t.size(), v.size());
  int sign = 0;
  int crossings = 0;
  for (std::size_t i = 0; i < t.size() && t[i] <= window; ++i) {
    const double s = v[i] - baseline;
    if (std::abs(s) <= deadband) continue;
    const int now = s > 0 ? 1 : -1;
    if (sign != 0 && now != sign) ++crossings;
    sign = now;
  }
  return crossings;
}

}  // namespace mion
