#include "mion/closed_form.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "mion/errors.hpp"

namespace mion {

namespace {

constexpr double kSeriesThreshold = 1e-4;
constexpr double kNormalizationTol = 1e-10;

void check_time(double t) {
  if (!(t >= 0) || !std::isfinite(t)) throw ValidationError("t must be finite and >= 0");
}

void check_normalized(std::span<const double> diag0) {
  double sum = 0.0;
  for (double p : diag0) sum += p;
  if (std::abs(sum - 1.0) > kNormalizationTol) {
    throw ValidationError("initial occupation sums to " + std::to_string(sum) +
                          ", not 1");
  }
}

double need(const RabiTable& rabi, int n) { return rabi.at(n); }

// sin(vt)/v and sinh(vt)/v with a two-term series near v t = 0.
double sinc_t(double v, double t) {
  const double x = v * t;
  if (std::abs(x) < kSeriesThreshold) return t * (1.0 - x * x / 6.0);
  return std::sin(x) / v;
}
double sinhc_t(double v, double t) {
  const double x = v * t;
  if (std::abs(x) < kSeriesThreshold) return t * (1.0 + x * x / 6.0);
  return std::sinh(x) / v;
}

}  // namespace

std::string_view to_string(Branch b) {
  switch (b) {
    case Branch::Oscillatory:
      return "oscillatory";
    case Branch::Critical:
      return "critical";
    case Branch::Hyperbolic:
      return "hyperbolic";
  }
  return "unknown";
}

BranchedFrequency branched_frequency(double x, double kappa) {
  const double g = kappa / 4.0;
  const double radicand = x * x - g * g;
  BranchedFrequency f;
  f.radicand = radicand;
  if ((x == 0.0 && kappa == 0.0) || std::abs(radicand) <= 1e-30 * g * g) {
    f.branch = Branch::Critical;
    f.value = 0.0;
  } else if (radicand > 0) {
    f.branch = Branch::Oscillatory;
    f.value = std::sqrt(radicand);
  } else {
    f.branch = Branch::Hyperbolic;
    f.value = std::sqrt(-radicand);
  }
  return f;
}

double envelope(const BranchedFrequency& f, double kappa, double t) {
  const double g = kappa / 4.0;
  switch (f.branch) {
    case Branch::Oscillatory:
      return std::cos(f.value * t) + g * sinc_t(f.value, t);
    case Branch::Hyperbolic:
      return std::cosh(f.value * t) + g * sinhc_t(f.value, t);
    case Branch::Critical:
      break;
  }
  return 1.0 + g * t;
}

double damped_envelope(const BranchedFrequency& f, double kappa, double t) {
  const double g = kappa / 4.0;
  const double v = f.value;
  switch (f.branch) {
    case Branch::Oscillatory:
      return std::exp(-g * t) * (std::cos(v * t) + g * sinc_t(v, t));
    case Branch::Hyperbolic: {
      const double x = v * t;
      if (x < kSeriesThreshold) {
        return std::exp(-g * t) * (1.0 + 0.5 * x * x + g * sinhc_t(v, t));
      }
      // e^{-g t} [cosh x + g sinh(x)/v] = e^{(v-g)t} [(1 + e^{-2x}) + g (1 - e^{-2x})/v] / 2
      const double decay = std::exp(-2.0 * x);
      return std::exp((v - g) * t) * 0.5 *
             ((1.0 + decay) + g * (-std::expm1(-2.0 * x)) / v);
    }
    case Branch::Critical:
      break;
  }
  return std::exp(-g * t) * (1.0 + g * t);
}

FrequencyPair frequencies(int n, int m, const TrapParams& params, const RabiTable& rabi) {
  const double wn = need(rabi, n);
  const double wm = need(rabi, m);
  return {branched_frequency(0.5 * (wn + wm), params.kappa),
          branched_frequency(0.5 * (wn - wm), params.kappa)};
}

double kappa_crit(int n, const RabiTable& rabi) { return 4.0 * std::abs(need(rabi, n)); }

double p_down(double t, std::span<const double> diag0, const TrapParams& params,
              const RabiTable& rabi) {
  check_time(t);
  check_normalized(diag0);
  double z = 0.0;
  for (std::size_t i = 0; i < diag0.size(); ++i) {
    if (diag0[i] == 0.0) continue;
    const int n = static_cast<int>(i);
    const auto w = branched_frequency(need(rabi, n), params.kappa);
    z += diag0[i] * damped_envelope(w, params.kappa, t);
  }
  return 0.5 * (1.0 + z);
}

double p_down_fock(double t, int n_bar, const TrapParams& params, const RabiTable& rabi) {
  if (n_bar < 0) throw RangeError("n_bar must be >= 0");
  std::vector<double> diag(static_cast<std::size_t>(n_bar) + 1, 0.0);
  diag.back() = 1.0;
  return p_down(t, diag, params, rabi);
}

double mean_position(double t, std::span<const Complex> coherences0,
                     const TrapParams& params, const RabiTable& rabi) {
  check_time(t);
  const int k = params.k_sideband;
  const double theta = std::fmod(params.omega * t, 2.0 * std::numbers::pi);
  const Complex carrier = std::polar(1.0, theta);
  double x = 0.0;
  for (std::size_t i = 0; i < coherences0.size(); ++i) {
    if (coherences0[i] == 0.0) continue;
    const int n = static_cast<int>(i);
    const auto [w, u] = frequencies(n, n + 1, params, rabi);
    const double upper = std::sqrt(double(n + k + 1));
    const double lower = std::sqrt(double(n + 1));
    const double bracket = (upper + lower) * damped_envelope(u, params.kappa, t) -
                           (upper - lower) * damped_envelope(w, params.kappa, t);
    x += (carrier * coherences0[i]).real() * bracket;
  }
  return x;
}

double mean_energy(double t, std::span<const double> diag0, const TrapParams& params,
                   const RabiTable& rabi) {
  check_time(t);
  check_normalized(diag0);
  const int k = params.k_sideband;
  double nbar = 0.0;
  double z = 0.0;
  for (std::size_t i = 0; i < diag0.size(); ++i) {
    if (diag0[i] == 0.0) continue;
    const int n = static_cast<int>(i);
    nbar += n * diag0[i];
    if (k == 0) continue;
    const auto w = branched_frequency(need(rabi, n), params.kappa);
    z += diag0[i] * damped_envelope(w, params.kappa, t);
  }
  return nbar + 0.5 + 0.5 * k - 0.5 * k * z;
}

double asymptotic_mean(const MotionalObservable& obs, std::span<const double> diag0,
                       int k_sideband) {
  if (k_sideband < 0) throw ValidationError("k must be >= 0");
  check_normalized(diag0);
  const auto dim = obs.matrix.rows();
  double sum = 0.0;
  for (std::size_t i = 0; i < diag0.size(); ++i) {
    if (diag0[i] == 0.0) continue;
    const auto n = static_cast<Eigen::Index>(i);
    if (n + k_sideband >= dim) {
      throw RangeError("observable '" + obs.name + "' (dim " + std::to_string(dim) +
                       ") does not cover n + k = " + std::to_string(n + k_sideband));
    }
    sum += 0.5 * (obs.matrix(n, n).real() + obs.matrix(n + k_sideband, n + k_sideband).real()) *
           diag0[i];
  }
  return sum;
}

VarianceAsymptote asymptotic_position_variance(std::span<const double> diag0,
                                               int k_sideband) {
  check_normalized(diag0);
  const int dim = std::max<int>(2, static_cast<int>(diag0.size()) + k_sideband + 1);
  const double x = asymptotic_mean(make_observable(ObservableKind::Position, dim), diag0,
                                   k_sideband);
  const double x2 = asymptotic_mean(make_observable(ObservableKind::PositionSq, dim),
                                    diag0, k_sideband);
  double nbar = 0.0;
  for (std::size_t i = 0; i < diag0.size(); ++i) nbar += double(i) * diag0[i];
  return {x2 - x * x, 4.0 * (nbar + 0.5 + 0.5 * k_sideband)};
}

EquipartitionReport equipartition_check(const TimeSeries& series, double tail_fraction,
                                        double tolerance) {
  if (!(tail_fraction > 0 && tail_fraction <= 1)) {
    throw ValidationError("tail_fraction must lie in (0, 1]");
  }
  const auto& e = series.values(channels::kMeanEnergy);
  const auto& x2 = series.values(channels::kPositionSq);
  const auto& p2 = series.values(channels::kMomentumSq);
  const std::size_t n = series.size();
  if (n == 0) throw ValidationError("equipartition_check: empty series");

  EquipartitionReport r;
  r.tail_samples = std::max<std::size_t>(1, std::size_t(std::ceil(tail_fraction * n)));
  const std::size_t first = n - r.tail_samples;

  auto q = [&](std::size_t i) {
    return std::array<double, 3>{0.5 * e[i], 0.25 * x2[i], 0.25 * p2[i]};
  };
  const auto q0 = q(0);
  std::array<double, 3> lo{}, hi{}, mean{};
  lo.fill(std::numeric_limits<double>::infinity());
  hi.fill(-std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    const auto qi = q(i);
    for (int j = 0; j < 3; ++j) {
      r.drift_from_initial = std::max(r.drift_from_initial, std::abs(qi[j] - q0[j]));
    }
    if (i < first) continue;
    const double spread = *std::max_element(qi.begin(), qi.end()) -
                          *std::min_element(qi.begin(), qi.end());
    r.max_pairwise_deviation = std::max(r.max_pairwise_deviation, spread);
    for (int j = 0; j < 3; ++j) {
      lo[j] = std::min(lo[j], qi[j]);
      hi[j] = std::max(hi[j], qi[j]);
      mean[j] += qi[j] / double(r.tail_samples);
    }
  }
  for (int j = 0; j < 3; ++j) r.tail_variation = std::max(r.tail_variation, hi[j] - lo[j]);
  r.half_energy = mean[0];
  r.scaled_position_sq = mean[1];
  r.scaled_momentum_sq = mean[2];
  r.converged = r.tail_variation <= tolerance;
  r.equipartition = r.converged && r.max_pairwise_deviation <= tolerance;
  return r;
}

std::vector<double> diagonal_of(const CMatrix& motional) {
  std::vector<double> d(static_cast<std::size_t>(motional.rows()));
  for (Eigen::Index n = 0; n < motional.rows(); ++n) d[std::size_t(n)] = motional(n, n).real();
  return d;
}

std::vector<Complex> superdiagonal_of(const CMatrix& motional) {
  std::vector<Complex> c;
  for (Eigen::Index n = 0; n + 1 < motional.rows(); ++n) c.push_back(motional(n, n + 1));
  return c;
}

TimeSeries analytic_series(const TrapParams& params, const RabiTable& rabi,
                           const CMatrix& motional0, const std::vector<double>& times,
                           bool with_position) {
  const auto diag = diagonal_of(motional0);
  const auto coh = superdiagonal_of(motional0);
  std::vector<Channel> cols;
  cols.push_back({channels::kPDown, "1", {}});
  cols.push_back({channels::kMeanEnergy, "hbar*omega", {}});
  if (with_position) cols.push_back({channels::kMeanPosition, "x0", {}});
  for (auto& c : cols) c.values.reserve(times.size());
  for (double t : times) {
    cols[0].values.push_back(p_down(t, diag, params, rabi));
    cols[1].values.push_back(mean_energy(t, diag, params, rabi));
    if (with_position) cols[2].values.push_back(mean_position(t, coh, params, rabi));
  }
  return TimeSeries::from_columns(Provenance::Analytic, times, std::move(cols));
}

}  // namespace mion
