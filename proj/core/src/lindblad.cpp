#include "mion/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mion/errors.hpp"

namespace mion {

namespace {

constexpr Complex kI{0.0, 1.0};

// Coupling entries below this magnitude (relative to omega0/2) are parity
// zeros of the standing-wave matrix and are dropped.
constexpr double kNegligibleCoupling = 1e-15;

// exp(-i omega M_a t) for every basis index a, M_a = n - k S.
Eigen::VectorXcd frame_phases(int dim_fock, int k, double omega, double t) {
  const double theta = std::fmod(omega * t, 2.0 * std::numbers::pi);
  Eigen::VectorXcd v(2 * dim_fock);
  for (int s = 0; s < 2; ++s) {
    for (int n = 0; n < dim_fock; ++n) {
      v(s * dim_fock + n) = std::polar(1.0, -theta * double(n - k * s));
    }
  }
  return v;
}

void check_state_shape(const VibronicDensityMatrix& rho, int dim_fock) {
  if (rho.dim_fock() != dim_fock) {
    throw InvalidDimension("state dim_fock " + std::to_string(rho.dim_fock()) +
                           " does not match coupling dim_fock " +
                           std::to_string(dim_fock));
  }
}

}  // namespace

FullCoupling default_full_coupling(int k_sideband) {
  return FullCoupling{k_sideband + 4};
}

// -- SidebandCoupling --------------------------------------------------------

SidebandCoupling::SidebandCoupling(int dim_fock, int k, std::vector<Entry> entries)
    : dim_fock_(dim_fock), k_(k), entries_(std::move(entries)) {
  if (!entries_.empty()) {
    q_min_ = q_max_ = entries_.front().phase_multiple;
    for (const auto& e : entries_) {
      q_min_ = std::min(q_min_, e.phase_multiple);
      q_max_ = std::max(q_max_, e.phase_multiple);
    }
  }
}

SidebandCoupling SidebandCoupling::full(const TrapParams& params, int dim_fock,
                                        int cutoff) {
  params.validate();
  const int k = params.k_sideband;
  if (cutoff < k) {
    throw ValidationError("sideband_cutoff (" + std::to_string(cutoff) +
                          ") must be >= k (" + std::to_string(k) + ")");
  }
  if (dim_fock < 2) throw InvalidDimension("dim_fock must be >= 2");
  const RMatrix c = standing_wave_coupling(params, dim_fock);
  std::vector<Entry> entries;
  for (int n = 0; n < dim_fock; ++n) {
    const int lo = std::max(0, n - cutoff);
    const int hi = std::min(dim_fock - 1, n + cutoff);
    for (int m = lo; m <= hi; ++m) {
      if (std::abs(c(n, m)) < kNegligibleCoupling) continue;
      entries.push_back({n, m, 0.5 * params.omega0 * c(n, m), n - m + k});
    }
  }
  return SidebandCoupling(dim_fock, k, std::move(entries));
}

SidebandCoupling SidebandCoupling::resonant(const RabiTable& rabi, int dim_fock) {
  const int k = rabi.k_sideband();
  const int needed = dim_fock - 1 - k;
  if (needed >= 0 && !rabi.covers(needed)) {
    throw RangeError("Rabi table covers n <= " + std::to_string(rabi.size() - 1) +
                     ", dynamics needs n <= " + std::to_string(needed));
  }
  std::vector<Entry> entries;
  for (int n = 0; n <= needed; ++n) entries.push_back({n, n + k, 0.5 * rabi[n], 0});
  return SidebandCoupling(dim_fock, k, std::move(entries));
}

// -- generators --------------------------------------------------------------

SlowFrameGenerator::SlowFrameGenerator(const TrapParams& params,
                                       SidebandCoupling coupling)
    : omega_(params.omega),
      kappa_(params.kappa),
      coupling_(std::move(coupling)),
      static_(coupling_.min_phase_multiple() == 0 &&
              coupling_.max_phase_multiple() == 0) {}

void SlowFrameGenerator::operator()(double t, const CMatrix& rho,
                                    CMatrix& drho) const {
  const int d = coupling_.dim_fock();
  drho.setZero(rho.rows(), rho.cols());

  // exp(i q omega t) for the q range present
  const int q_min = coupling_.min_phase_multiple();
  const int q_count = coupling_.max_phase_multiple() - q_min + 1;
  Complex phase_buf[64];
  std::vector<Complex> phase_vec;
  Complex* phases = phase_buf;
  if (q_count > 64) {
    phase_vec.resize(std::size_t(q_count));
    phases = phase_vec.data();
  }
  if (static_) {
    phases[0] = 1.0;
  } else {
    const double theta = std::fmod(omega_ * t, 2.0 * std::numbers::pi);
    for (int i = 0; i < q_count; ++i) phases[i] = std::polar(1.0, theta * (q_min + i));
  }

  // -i [H, rho] with H(dn, um) = h, H(um, dn) = conj(h)
  for (const auto& e : coupling_.entries()) {
    const Complex h = e.amplitude * phases[e.phase_multiple - q_min];
    const int a = e.down_n;
    const int b = d + e.up_m;
    const Complex mih = -kI * h;
    const Complex mihc = -kI * std::conj(h);
    drho.row(a) += mih * rho.row(b);
    drho.row(b) += mihc * rho.row(a);
    drho.col(b) -= mih * rho.col(a);
    drho.col(a) -= mihc * rho.col(b);
  }

  // -(kappa/2) [A, [A, rho]] only touches the electronic coherence blocks.
  if (kappa_ != 0.0) {
    const double g = 0.5 * kappa_;
    drho.topRightCorner(d, d) -= g * rho.topRightCorner(d, d);
    drho.bottomLeftCorner(d, d) -= g * rho.bottomLeftCorner(d, d);
  }
}

CMatrix free_motion_rhs(const CMatrix& rho, int dim_fock, int k_sideband,
                        double omega) {
  CMatrix out(rho.rows(), rho.cols());
  for (Eigen::Index b = 0; b < rho.cols(); ++b) {
    const int mb = int(b % dim_fock) - k_sideband * int(b / dim_fock);
    for (Eigen::Index a = 0; a < rho.rows(); ++a) {
      const int ma = int(a % dim_fock) - k_sideband * int(a / dim_fock);
      out(a, b) = -kI * omega * double(ma - mb) * rho(a, b);
    }
  }
  return out;
}

CMatrix jcm_rhs(const VibronicDensityMatrix& rho, const TrapParams& params,
                const RabiTable& rabi) {
  if (rabi.k_sideband() != params.k_sideband) {
    throw ValidationError("Rabi table k does not match params k");
  }
  const int d = rho.dim_fock();
  SlowFrameGenerator gen(params, SidebandCoupling::resonant(rabi, d));
  CMatrix out;
  gen(0.0, rho.entries(), out);
  out += free_motion_rhs(rho.entries(), d, params.k_sideband, params.omega);
  return out;
}

CMatrix full_rhs(const VibronicDensityMatrix& rho, const TrapParams& params,
                 double t, const SidebandCoupling& coupling) {
  check_state_shape(rho, coupling.dim_fock());
  if (coupling.k_sideband() != params.k_sideband) {
    throw ValidationError("coupling k does not match params k");
  }
  SlowFrameGenerator gen(params, coupling);
  CMatrix out;
  gen(t, rho.entries(), out);
  return out;
}

CMatrix full_rhs(const VibronicDensityMatrix& rho, const TrapParams& params,
                 double t, const FullCoupling& mode) {
  return full_rhs(rho, params, t,
                  SidebandCoupling::full(params, rho.dim_fock(), mode.sideband_cutoff));
}

CMatrix slow_to_motional_frame(const CMatrix& rho_slow, int dim_fock, int k_sideband,
                               double omega, double t) {
  const Eigen::VectorXcd v = frame_phases(dim_fock, k_sideband, omega, t);
  return v.asDiagonal() * rho_slow * v.conjugate().asDiagonal();
}

CMatrix motional_to_slow_frame(const CMatrix& rho, int dim_fock, int k_sideband,
                               double omega, double t) {
  const Eigen::VectorXcd v = frame_phases(dim_fock, k_sideband, omega, t);
  return v.conjugate().asDiagonal() * rho * v.asDiagonal();
}

// -- integration -------------------------------------------------------------

namespace {

struct Sampler {
  int dim_fock;
  int k;
  double omega;
  double tail_budget;
  bool want_min_eig;
  MotionalObservable x, p, x2, p2, energy;
  std::vector<MotionalObservable> extras;
  TimeSeries series;
  std::optional<VibronicDensityMatrix> final_state;
  double t_last;

  void declare() {
    using namespace channels;
    series.add_channel(kPDown, "1");
    series.add_channel(kMeanPosition, "x0");
    series.add_channel(kMeanMomentum, "p0");
    series.add_channel(kMeanEnergy, "hbar*omega");
    series.add_channel(kPositionSq, "x0^2");
    series.add_channel(kMomentumSq, "p0^2");
    series.add_channel(kPositionVariance, "x0^2");
    series.add_channel(kMomentumVariance, "p0^2");
    series.add_channel(kTraceError, "1");
    series.add_channel(kHermiticityDefect, "1");
    series.add_channel(kMinEigenvalue, "1");
    series.add_channel(kTailMass, "1");
    series.add_channel(kPurity, "1");
    for (const auto& o : extras) series.add_channel(o.name, o.unit);
  }

  void operator()(double t, const CMatrix& rho_slow) {
    const int d = dim_fock;
    // Motional reduced state: both diagonal blocks pick up exp(-i omega (n-m) t).
    CMatrix cm = rho_slow.topLeftCorner(d, d) + rho_slow.bottomRightCorner(d, d);
    {
      const double theta = std::fmod(omega * t, 2.0 * std::numbers::pi);
      Eigen::VectorXcd v(d);
      for (int n = 0; n < d; ++n) v(n) = std::polar(1.0, -theta * n);
      cm = v.asDiagonal() * cm * v.conjugate().asDiagonal();
    }
    const double mx = expectation(cm, x);
    const double mp = expectation(cm, p);
    const double mx2 = expectation(cm, x2);
    const double mp2 = expectation(cm, p2);
    const double me = expectation(cm, energy);
    const double p_down = rho_slow.topLeftCorner(d, d).diagonal().real().sum();
    const double tail = tail_mass(rho_slow, d, k);
    std::vector<double> row{p_down,
                            mx,
                            mp,
                            me,
                            mx2,
                            mp2,
                            mx2 - mx * mx,
                            mp2 - mp * mp,
                            trace_error(rho_slow),
                            hermiticity_defect(rho_slow),
                            want_min_eig ? min_eigenvalue(rho_slow)
                                         : std::numeric_limits<double>::quiet_NaN(),
                            tail,
                            rho_slow.cwiseAbs2().sum()};
    for (const auto& o : extras) row.push_back(expectation(cm, o));
    series.append(t, row);

    if (tail > tail_budget) {
      std::ostringstream os;
      os << "tail population " << tail << " at t = " << t
         << " exceeds the truncation budget " << tail_budget << " (dim_fock = " << d
         << ")";
      throw TruncationError(os.str(), std::size_t(2 * d));
    }
    if (t == t_last) {
      final_state = VibronicDensityMatrix::unchecked(
          slow_to_motional_frame(rho_slow, d, k, omega, t), d);
    }
  }
};

}  // namespace

PartialIntegration integrate_collecting(const VibronicDensityMatrix& rho0,
                                        const TrapParams& params,
                                        const DynamicsMode& mode,
                                        const IntegratorConfig& config,
                                        const IntegrationOptions& options) {
  params.validate();
  config.validate();
  const int d = rho0.dim_fock();
  const int k = params.k_sideband;
  if (d < 2 || d <= k) {
    throw InvalidDimension("dim_fock must exceed k and be >= 2");
  }
  for (const auto& o : options.extra_observables) {
    if (o.matrix.rows() != d) {
      throw InvalidDimension("observable '" + o.name + "' does not match dim_fock");
    }
  }

  const bool jcm = std::holds_alternative<ReducedJCM>(mode);
  SidebandCoupling coupling =
      jcm ? SidebandCoupling::resonant(rabi_table(params, d - 1), d)
          : [&] {
              const auto& fc = std::get<FullCoupling>(mode);
              if (fc.sideband_cutoff >= d) {
                throw ValidationError("sideband_cutoff must be < dim_fock");
              }
              return SidebandCoupling::full(params, d, fc.sideband_cutoff);
            }();
  const SlowFrameGenerator gen(params, std::move(coupling));

  Sampler sampler{d,
                  k,
                  params.omega,
                  options.tail_budget,
                  options.compute_min_eigenvalue,
                  make_observable(ObservableKind::Position, d),
                  make_observable(ObservableKind::Momentum, d),
                  make_observable(ObservableKind::PositionSq, d),
                  make_observable(ObservableKind::MomentumSq, d),
                  make_observable(ObservableKind::Energy, d),
                  options.extra_observables,
                  TimeSeries(jcm ? Provenance::NumericJCM : Provenance::NumericFull),
                  std::nullopt,
                  config.sample_times.back()};
  sampler.declare();

  PartialIntegration out;
  try {
    out.stats = propagate(
        [&gen](double t, const CMatrix& y, CMatrix& dy) { gen(t, y, dy); },
        rho0.entries(), config,
        [&sampler](double t, const CMatrix& y) { sampler(t, y); });
  } catch (const Error&) {
    out.failure = std::current_exception();
  }
  out.series = std::move(sampler.series);
  out.final_state = std::move(sampler.final_state);
  return out;
}

IntegrationResult integrate(const VibronicDensityMatrix& rho0, const TrapParams& params,
                            const DynamicsMode& mode, const IntegratorConfig& config,
                            const IntegrationOptions& options) {
  PartialIntegration run = integrate_collecting(rho0, params, mode, config, options);
  if (run.failure) std::rethrow_exception(run.failure);
  return IntegrationResult{std::move(run.series), std::move(*run.final_state),
                           run.stats};
}

SanityReport sanity_report(const VibronicDensityMatrix& rho, int k_sideband,
                           const SanityThresholds& thresholds) {
  const CMatrix& m = rho.entries();
  SanityReport r;
  r.trace_error = trace_error(m);
  r.hermiticity_defect = hermiticity_defect(m);
  r.min_eigenvalue = min_eigenvalue(m);
  r.tail_mass = tail_mass(m, rho.dim_fock(), k_sideband);
  r.trace_ok = r.trace_error <= thresholds.trace;
  r.hermitian_ok = r.hermiticity_defect <= thresholds.hermiticity;
  r.positive_ok = r.min_eigenvalue >= thresholds.min_eigenvalue;
  r.tail_ok = r.tail_mass <= thresholds.tail;
  return r;
}

}  // namespace mion
