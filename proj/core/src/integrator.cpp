#include "mion/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mion/errors.hpp"

namespace mion {

void IntegratorConfig::validate() const {
  if (!(abs_tol > 0) || !(rel_tol > 0)) {
    throw ValidationError("integrator tolerances must be > 0");
  }
  if (!(max_step > 0)) throw ValidationError("max_step must be > 0");
  if (method == Method::FixedRK4 && !std::isfinite(max_step)) {
    throw ValidationError("fixed-step RK4 needs a finite max_step");
  }
  if (sample_times.empty()) throw ValidationError("no sample times");
  if (sample_times.front() != 0.0) {
    throw ValidationError("sample times must start at 0");
  }
  for (std::size_t i = 1; i < sample_times.size(); ++i) {
    if (!(sample_times[i] > sample_times[i - 1])) {
      throw ValidationError("sample times must be strictly increasing");
    }
  }
  if (max_steps <= 0) throw ValidationError("max_steps must be > 0");
}

std::vector<double> uniform_times(double t_end, int n) {
  if (n < 2 || !(t_end > 0)) {
    throw ValidationError("uniform_times needs n >= 2 and t_end > 0");
  }
  std::vector<double> t(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) t[std::size_t(i)] = t_end * i / (n - 1);
  t.back() = t_end;
  return t;
}

namespace {

// Cubic Hermite interpolant on [t0, t0 + h] at theta in [0, 1].
void hermite(double theta, double h, const CMatrix& y0, const CMatrix& f0,
             const CMatrix& y1, const CMatrix& f1, CMatrix& out) {
  const double t2 = theta * theta;
  const double t3 = t2 * theta;
  const double h00 = 2 * t3 - 3 * t2 + 1;
  const double h10 = t3 - 2 * t2 + theta;
  const double h01 = -2 * t3 + 3 * t2;
  const double h11 = t3 - t2;
  out = h00 * y0 + (h10 * h) * f0 + h01 * y1 + (h11 * h) * f1;
}

class SampleCursor {
 public:
  SampleCursor(const std::vector<double>& times, const SampleSink& sink)
      : times_(times), sink_(sink) {}

  bool done() const { return next_ >= times_.size(); }
  double end() const { return times_.back(); }

  void emit_first(const CMatrix& y) {
    sink_(times_[0], y);
    next_ = 1;
  }

  // Emits every pending sample inside (t0, t0 + h].
  void emit_step(double t0, double h, const CMatrix& y0, const CMatrix& f0,
                 const CMatrix& y1, const CMatrix& f1, bool last) {
    const double t1 = t0 + h;
    while (!done() && (times_[next_] <= t1 || (last && next_ + 1 == times_.size()))) {
      const double ts = times_[next_];
      if (ts == t1 || (last && next_ + 1 == times_.size())) {
        sink_(ts, y1);
      } else {
        hermite((ts - t0) / h, h, y0, f0, y1, f1, scratch_);
        sink_(ts, scratch_);
      }
      ++next_;
    }
  }

 private:
  const std::vector<double>& times_;
  const SampleSink& sink_;
  std::size_t next_ = 0;
  CMatrix scratch_;
};

StepStats propagate_rk4(const MatrixRhs& rhs, const CMatrix& y0,
                        const IntegratorConfig& cfg, const SampleSink& sink) {
  StepStats stats;
  SampleCursor cursor(cfg.sample_times, sink);
  const double span = cursor.end() - cfg.sample_times.front();
  const auto steps = static_cast<std::int64_t>(std::ceil(span / cfg.max_step));
  if (steps > cfg.max_steps) {
    throw ValidationError("fixed-step run needs " + std::to_string(steps) +
                          " steps, above max_steps");
  }
  const double h = span / double(std::max<std::int64_t>(steps, 1));

  CMatrix y = y0, f(y0.rows(), y0.cols()), k2(f), k3(f), k4(f), tmp(f), y1(f),
          f1(f);
  double t = cfg.sample_times.front();
  rhs(t, y, f);
  ++stats.rhs_evaluations;
  cursor.emit_first(y);
  for (std::int64_t i = 0; i < steps; ++i) {
    tmp = y + (0.5 * h) * f;
    rhs(t + 0.5 * h, tmp, k2);
    tmp = y + (0.5 * h) * k2;
    rhs(t + 0.5 * h, tmp, k3);
    tmp = y + h * k3;
    rhs(t + h, tmp, k4);
    y1 = y + (h / 6.0) * (f + 2.0 * k2 + 2.0 * k3 + k4);
    const bool last = i + 1 == steps;
    const double t1 = last ? cursor.end() : t + h;
    rhs(t1, y1, f1);
    stats.rhs_evaluations += 4;
    ++stats.accepted;
    cursor.emit_step(t, t1 - t, y, f, y1, f1, last);
    t = t1;
    y.swap(y1);
    f.swap(f1);
  }
  return stats;
}

// Dormand-Prince 5(4) coefficients.
namespace dp {
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
}  // namespace dp

StepStats propagate_dopri(const MatrixRhs& rhs, const CMatrix& y0,
                          const IntegratorConfig& cfg, const SampleSink& sink) {
  using namespace dp;
  StepStats stats;
  SampleCursor cursor(cfg.sample_times, sink);
  const double t_start = cfg.sample_times.front();
  const double t_end = cursor.end();
  const double span = t_end - t_start;

  const Eigen::Index r = y0.rows(), c = y0.cols();
  CMatrix y = y0, k1(r, c), k2(r, c), k3(r, c), k4(r, c), k5(r, c), k6(r, c),
          k7(r, c), tmp(r, c), y1(r, c);

  double t = t_start;
  rhs(t, y, k1);
  ++stats.rhs_evaluations;
  cursor.emit_first(y);
  if (cursor.done()) return stats;

  double h;
  {
    const double d0 = y.cwiseAbs().maxCoeff();
    const double d1 = k1.cwiseAbs().maxCoeff();
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * span : 0.01 * d0 / d1;
    h = std::min({h, cfg.max_step, span});
  }

  constexpr double kSafety = 0.9, kMinFactor = 0.2, kMaxFactor = 10.0;
  bool last_rejected = false;

  while (!cursor.done()) {
    if (stats.accepted + stats.rejected >= cfg.max_steps) {
      std::ostringstream os;
      os << "step budget of " << cfg.max_steps << " exhausted at t = " << t;
      throw StiffnessError(os.str(), t);
    }
    bool last = false;
    if (t + h >= t_end || t_end - (t + h) < 1e-12 * span) {
      h = t_end - t;
      last = true;
    }
    if (h <= 16 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t), span)) {
      std::ostringstream os;
      os << "step size underflow (h = " << h << ") at t = " << t;
      throw StiffnessError(os.str(), t);
    }

    tmp = y + h * (a21 * k1);
    rhs(t + c2 * h, tmp, k2);
    tmp = y + h * (a31 * k1 + a32 * k2);
    rhs(t + c3 * h, tmp, k3);
    tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs(t + c4 * h, tmp, k4);
    tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(t + c5 * h, tmp, k5);
    tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(t + h, tmp, k6);
    y1 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    rhs(t + h, y1, k7);
    stats.rhs_evaluations += 6;

    // error estimate, max norm scaled per element
    tmp = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const auto scale = (cfg.abs_tol +
                        cfg.rel_tol * y.cwiseAbs2().cwiseMax(y1.cwiseAbs2()).cwiseSqrt().array());
    double err = std::sqrt((tmp.cwiseAbs2().array() / scale.square()).maxCoeff());
    if (!std::isfinite(err)) err = 1e10;

    if (err <= 1.0) {
      ++stats.accepted;
      const double t1 = last ? t_end : t + h;
      cursor.emit_step(t, t1 - t, y, k1, y1, k7, last);
      t = t1;
      y.swap(y1);
      k1.swap(k7);
      double factor = err == 0.0 ? kMaxFactor
                                 : std::clamp(kSafety * std::pow(err, -0.2),
                                              kMinFactor, kMaxFactor);
      if (last_rejected) factor = std::min(factor, 1.0);
      h = std::min(h * factor, cfg.max_step);
      last_rejected = false;
    } else {
      ++stats.rejected;
      h *= std::max(kMinFactor, kSafety * std::pow(err, -0.2));
      last_rejected = true;
    }
  }
  return stats;
}

}  // namespace

StepStats propagate(const MatrixRhs& rhs, const CMatrix& y0,
                    const IntegratorConfig& config, const SampleSink& sink) {
  config.validate();
  if (config.method == Method::FixedRK4) return propagate_rk4(rhs, y0, config, sink);
  return propagate_dopri(rhs, y0, config, sink);
}

}  // namespace mion
