#pragma once

// Closed-form solutions of the resonant (JCM) measured dynamics.
//
// Within a manifold pair (n, m) the equations reduce to damped oscillators
// with frequencies
//
//   w_nm = sqrt(((W_n + W_m)/2)^2 - kappa^2/16)
//   u_nm = sqrt(((W_n - W_m)/2)^2 - kappa^2/16),   W_n = Omega_{n,n+k},
//
// and every observable is a sum of damped envelopes
//
//   e^{-kappa t/4} [cos(v t) + (kappa / 4 v) sin(v t)]
//
// continued to cosh/sinh when the radicand is negative. All functions here
// are pure and thread-safe.

#include <span>
#include <vector>

#include "mion/hilbert.hpp"
#include "mion/time_series.hpp"

namespace mion {

enum class Branch { Oscillatory, Critical, Hyperbolic };

std::string_view to_string(Branch b);

struct BranchedFrequency {
  double value = 0.0;     ///< sqrt(|radicand|), rad/s
  Branch branch = Branch::Critical;
  double radicand = 0.0;  ///< x^2 - kappa^2/16
};

/// Classifies sqrt(x^2 - kappa^2/16). Critical when |radicand| <=
/// 1e-30 (kappa/4)^2 or when x and kappa both vanish.
BranchedFrequency branched_frequency(double x, double kappa);

/// Undamped envelope E(t): cos + (kappa/4v) sin, cosh + (kappa/4v) sinh, or
/// 1 + kappa t / 4 on the critical branch.
double envelope(const BranchedFrequency& f, double kappa, double t);

/// e^{-kappa t/4} E(t), evaluated without overflow for large t.
double damped_envelope(const BranchedFrequency& f, double kappa, double t);

struct FrequencyPair {
  BranchedFrequency w;
  BranchedFrequency u;
};

/// w_nm and u_nm. Throws RangeError outside the table.
FrequencyPair frequencies(int n, int m, const TrapParams& params,
                          const RabiTable& rabi);

/// 4 |Omega_{n,n+k}|.
double kappa_crit(int n, const RabiTable& rabi);

/// Lower-level population for an initial occupation distribution.
/// diag0 must sum to 1 within 1e-10 (ValidationError otherwise); entries
/// beyond the table must vanish (RangeError otherwise).
double p_down(double t, std::span<const double> diag0, const TrapParams& params,
              const RabiTable& rabi);

/// p_down for the Fock state |n_bar>.
double p_down_fock(double t, int n_bar, const TrapParams& params, const RabiTable& rabi);

/// Mean position in units of x0, from the initial first-superdiagonal
/// coherences rho^cm_{n,n+1}(0). The prefactor is 1 in x0 units; see
/// tests/closed_form_test.cpp for the integrator check that fixes it.
double mean_position(double t, std::span<const Complex> coherences0,
                     const TrapParams& params, const RabiTable& rabi);

/// Mean motional energy in units of hbar * omega.
double mean_energy(double t, std::span<const double> diag0, const TrapParams& params,
                   const RabiTable& rabi);

/// Long-time mean 1/2 sum_n (O_nn + O_{n+k,n+k}) rho_nn(0).
double asymptotic_mean(const MotionalObservable& obs, std::span<const double> diag0,
                       int k_sideband);

/// Both candidate long-time position variances (x0^2 units):
/// `from_asymptotic_mean` evaluates the long-time mean of (x - <x>)^2, i.e.
/// 2 (nbar + 1/2 + k/2); `printed_factor_four` is 4 (nbar + 1/2 + k/2).
struct VarianceAsymptote {
  double from_asymptotic_mean;
  double printed_factor_four;
};
VarianceAsymptote asymptotic_position_variance(std::span<const double> diag0,
                                               int k_sideband);

/// Long-time equality of <H>/2, <x^2>/4 and <p^2>/4 (all in hbar omega).
struct EquipartitionReport {
  std::size_t tail_samples = 0;
  double max_pairwise_deviation = 0;  ///< over the tail
  double tail_variation = 0;          ///< max (max - min) of the three over the tail
  double drift_from_initial = 0;      ///< max |q(t) - q(0)| over the whole run
  double half_energy = 0;             ///< tail means
  double scaled_position_sq = 0;
  double scaled_momentum_sq = 0;
  bool converged = false;             ///< tail_variation <= tolerance
  bool equipartition = false;         ///< converged && deviation <= tolerance
};
EquipartitionReport equipartition_check(const TimeSeries& series, double tail_fraction,
                                        double tolerance = 1e-4);

// -- helpers -----------------------------------------------------------------

std::vector<double> diagonal_of(const CMatrix& motional);
std::vector<Complex> superdiagonal_of(const CMatrix& motional);

/// Closed-form channels P_down, mean_energy and (when with_position)
/// mean_position on a time grid, tagged analytic.
TimeSeries analytic_series(const TrapParams& params, const RabiTable& rabi,
                           const CMatrix& motional0, const std::vector<double>& times,
                           bool with_position);

}  // namespace mion
