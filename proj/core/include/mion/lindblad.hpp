#pragma once

// Measured master equation
//
//   d rho/dt = -i [H0 + H_int(t), rho] - (kappa/2) [A, [A, rho]],   A = |down><down|
//
// for a laser on exact resonance with the k-th blue sideband.
//
// Frames. Removing the laser phase from the electronic coherences turns the
// Hamiltonian into omega * M + H_c with the excitation index
// M = a^dagger a - k |up><up| (M|S, n> = (n - k S)|S, n>). This "motional
// frame" keeps the trap oscillation of motional coherences, so expectation
// values of x and p in it are the laboratory ones. The integrators work one
// step further, in the interaction picture of omega * M ("slow frame"), where
// the resonant manifold couplings are static and every off-resonant sideband
// term carries an explicit exp(i q omega t). Both frames differ by the
// diagonal unitary exp(-i omega M t); populations, traces, spectra and P_down
// are identical in both.

#include <exception>
#include <optional>
#include <variant>
#include <vector>

#include "mion/hilbert.hpp"
#include "mion/integrator.hpp"
#include "mion/time_series.hpp"

namespace mion {

struct ReducedJCM {};

/// Keeps every sideband coupling |down, n> <-> |up, n + dn> with
/// |dn| <= sideband_cutoff.
struct FullCoupling {
  int sideband_cutoff = 5;
};

using DynamicsMode = std::variant<ReducedJCM, FullCoupling>;

/// Default cutoff k + 4.
FullCoupling default_full_coupling(int k_sideband);

/// Banded coupling Hamiltonian in the slow frame. Each entry is the element
/// <down, n| H |up, m> = amplitude * exp(i q omega t), q = n - m + k.
class SidebandCoupling {
 public:
  struct Entry {
    int down_n;
    int up_m;
    double amplitude;  ///< omega0/2 * <n|cos[...]|m>, rad/s
    int phase_multiple;
  };

  /// All bands |m - n| <= cutoff of the standing-wave coupling.
  static SidebandCoupling full(const TrapParams& params, int dim_fock, int cutoff);
  /// Only the resonant band m = n + k, from a Rabi table (JCM approximation).
  static SidebandCoupling resonant(const RabiTable& rabi, int dim_fock);

  int dim_fock() const { return dim_fock_; }
  int k_sideband() const { return k_; }
  const std::vector<Entry>& entries() const { return entries_; }
  int min_phase_multiple() const { return q_min_; }
  int max_phase_multiple() const { return q_max_; }

 private:
  SidebandCoupling(int dim_fock, int k, std::vector<Entry> entries);
  int dim_fock_;
  int k_;
  std::vector<Entry> entries_;
  int q_min_ = 0;
  int q_max_ = 0;
};

/// Time-independent JCM generator in the motional frame: populations and
/// motional coherences rotate at omega (n - m), electronic coherences are
/// additionally damped at kappa/2; only manifolds {|down,n>, |up,n+k>} are
/// coupled. Dark states |up, j < k> do not evolve under the coupling.
/// Throws RangeError when the table does not cover N_max - k.
CMatrix jcm_rhs(const VibronicDensityMatrix& rho, const TrapParams& params,
                const RabiTable& rabi);

/// Generator with all sideband terms, in the slow frame, at time t.
CMatrix full_rhs(const VibronicDensityMatrix& rho, const TrapParams& params,
                 double t, const SidebandCoupling& coupling);
/// Convenience overload that builds the coupling from `mode` first.
CMatrix full_rhs(const VibronicDensityMatrix& rho, const TrapParams& params,
                 double t, const FullCoupling& mode);

/// In-place evaluators used by the integrator (no validation, no allocation).
class SlowFrameGenerator {
 public:
  SlowFrameGenerator(const TrapParams& params, SidebandCoupling coupling);

  /// d rho/dt at time t (slow frame). Resonant-only couplings give a
  /// time-independent generator.
  void operator()(double t, const CMatrix& rho, CMatrix& drho) const;

  const SidebandCoupling& coupling() const { return coupling_; }

 private:
  double omega_;
  double kappa_;
  SidebandCoupling coupling_;
  bool static_;
};

/// rho_motional = exp(-i omega M t) rho_slow exp(+i omega M t).
CMatrix slow_to_motional_frame(const CMatrix& rho_slow, int dim_fock, int k_sideband,
                               double omega, double t);
CMatrix motional_to_slow_frame(const CMatrix& rho, int dim_fock, int k_sideband,
                               double omega, double t);

/// -i omega [M, rho]: the free part separating the two frames.
CMatrix free_motion_rhs(const CMatrix& rho, int dim_fock, int k_sideband,
                        double omega);

struct IntegrationOptions {
  double tail_budget = kDefaultTailBudget;
  bool compute_min_eigenvalue = true;
  /// Extra motional observables sampled as channels named after them.
  std::vector<MotionalObservable> extra_observables;
};

struct IntegrationResult {
  TimeSeries series;
  VibronicDensityMatrix final_state;  ///< motional frame, at the last sample
  StepStats stats;
};

/// Propagates rho0 (motional frame, t = 0) and samples the standard channels
/// at config.sample_times. Throws StiffnessError / TruncationError.
IntegrationResult integrate(const VibronicDensityMatrix& rho0,
                            const TrapParams& params, const DynamicsMode& mode,
                            const IntegratorConfig& config,
                            const IntegrationOptions& options = {});

/// Same as integrate(), but failures are captured: the samples produced before
/// the failure are returned together with the error.
struct PartialIntegration {
  TimeSeries series;
  std::optional<VibronicDensityMatrix> final_state;
  StepStats stats;
  std::exception_ptr failure;
};
PartialIntegration integrate_collecting(const VibronicDensityMatrix& rho0,
                                        const TrapParams& params,
                                        const DynamicsMode& mode,
                                        const IntegratorConfig& config,
                                        const IntegrationOptions& options = {});

struct SanityThresholds {
  double trace = 1e-8;
  double hermiticity = 1e-10;
  double min_eigenvalue = -1e-8;
  double tail = kDefaultTailBudget;
};

struct SanityReport {
  double trace_error = 0;
  double hermiticity_defect = 0;
  double min_eigenvalue = 0;
  double tail_mass = 0;
  bool trace_ok = true;
  bool hermitian_ok = true;
  bool positive_ok = true;
  bool tail_ok = true;

  bool ok() const { return trace_ok && hermitian_ok && positive_ok && tail_ok; }
};

SanityReport sanity_report(const VibronicDensityMatrix& rho, int k_sideband,
                           const SanityThresholds& thresholds = {});

}  // namespace mion
