#pragma once

// Truncated vibronic Hilbert space of a single trapped two-level ion.
//
// Basis ordering is part of the public contract: the full space is
// {down, up} (x) {|0>, ..., |N_max>}, and the state |S, n> lives at index
// S * dim_fock + n with S = 0 for the lower level and S = 1 for the upper.
// Internal computation uses hbar = 1; position is measured in
// x0 = sqrt(hbar / 2 m omega), momentum in p0 = sqrt(hbar m omega / 2) and
// energy in hbar * omega.

#include <complex>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace mion {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;

enum class Level : int { Down = 0, Up = 1 };

/// Physical parameters of the driven, measured ion. All frequencies are
/// angular (rad/s); kappa is a rate (1/s).
struct TrapParams {
  double omega = 1.0;    ///< trap frequency
  double omega21 = 0.0;  ///< electronic transition frequency
  double omega0 = 0.0;   ///< fundamental Rabi frequency
  double eta = 0.0;      ///< Lamb-Dicke parameter
  double phi = 0.0;      ///< standing-wave phase [rad]
  int k_sideband = 1;    ///< blue sideband order
  double kappa = 0.0;    ///< measurement coupling strength

  /// Laser frequency tuned to the k-th blue sideband.
  double laser_frequency() const { return omega21 + k_sideband * omega; }

  /// Throws ValidationError on a hard invariant violation.
  void validate() const;

  /// Soft regime diagnostics (low excitation, ...). Empty when all hold.
  std::vector<std::string> regime_warnings() const;
};

struct Ladder {
  CMatrix annihilation;
  CMatrix creation;
};

/// Fock-basis ladder operators on {|0>, ..., |dim_fock - 1>}.
Ladder build_ladder(int dim_fock);

/// Dimensionless standing-wave coupling cos[eta (a + a^dagger) + phi],
/// truncated to dim x dim. Evaluated by diagonalizing eta (a + a^dagger) on a
/// larger space, doubling that space until the returned block changes by no
/// more than 1e-12 in any entry.
RMatrix standing_wave_coupling(const TrapParams& params, int dim);

/// Nonlinear k-quantum Rabi frequency omega0 <n| cos[...] |n + k> in rad/s.
double rabi_frequency(int n, const TrapParams& params);

/// Tabulated Rabi frequencies for n = 0 .. n_max - k.
class RabiTable {
 public:
  RabiTable(int k_sideband, std::vector<double> values);

  int k_sideband() const { return k_; }
  /// Largest Fock index whose manifold partner n + k is covered.
  int n_max() const { return static_cast<int>(values_.size()) - 1 + k_; }
  /// Number of tabulated manifolds.
  int size() const { return static_cast<int>(values_.size()); }
  bool covers(int n) const { return n >= 0 && n < size(); }

  /// Omega_{n, n+k}; throws RangeError outside the table.
  double at(int n) const;
  double operator[](int n) const { return values_[static_cast<std::size_t>(n)]; }
  const std::vector<double>& values() const { return values_; }

 private:
  int k_;
  std::vector<double> values_;
};

RabiTable rabi_table(const TrapParams& params, int n_max);

// -- motional states ---------------------------------------------------------

struct FockState {
  int n = 0;
};
struct CoherentState {
  Complex alpha{0.0, 0.0};
};
struct ThermalState {
  double nbar = 0.0;
};
struct ExplicitState {
  CMatrix matrix;
};

using MotionalStateSpec =
    std::variant<FockState, CoherentState, ThermalState, ExplicitState>;

std::string describe(const MotionalStateSpec& spec);

/// Mean and standard deviation of the phonon number for a spec.
std::pair<double, double> occupation_moments(const MotionalStateSpec& spec);

/// Default Fock dimension: N_max = max(32, nbar + 8 sigma + k + 8), dim =
/// N_max + 1.
int default_fock_dim(const MotionalStateSpec& spec, int k_sideband);

struct PreparedMotionalState {
  CMatrix matrix;        ///< dim_fock x dim_fock, unit trace
  double tail_mass;      ///< probability discarded by the truncation
  double renormalization;  ///< factor applied to restore unit trace
};

constexpr double kDefaultTailBudget = 1e-8;

/// Builds the motional density matrix for a spec on a dim_fock space.
/// Throws TruncationError when more than tail_budget of probability falls
/// outside the truncation.
PreparedMotionalState initial_state(const MotionalStateSpec& spec, int dim_fock,
                                    double tail_budget = kDefaultTailBudget);

// -- vibronic density matrix -------------------------------------------------

class VibronicDensityMatrix {
 public:
  /// Validates shape, Hermiticity (1e-12) and unit trace (1e-12).
  VibronicDensityMatrix(CMatrix entries, int dim_fock);

  /// No validation; for diagnostics on arbitrary (possibly broken) data.
  static VibronicDensityMatrix unchecked(CMatrix entries, int dim_fock);

  int dim_fock() const { return dim_fock_; }
  int dim() const { return 2 * dim_fock_; }
  const CMatrix& entries() const { return entries_; }

  static int index(Level s, int n, int dim_fock) {
    return static_cast<int>(s) * dim_fock + n;
  }
  Complex operator()(Level s, int n, Level s2, int m) const {
    return entries_(index(s, n, dim_fock_), index(s2, m, dim_fock_));
  }

 private:
  VibronicDensityMatrix() = default;
  CMatrix entries_;
  int dim_fock_ = 0;
};

/// rho(0) = |down><down| (x) motional.
VibronicDensityMatrix compose_initial(const CMatrix& motional, int dim_fock);

/// sigma_{SS'} = sum_n rho_{Sn,S'n}; element (0, 0) is P_down.
Eigen::Matrix2cd reduce_internal(const VibronicDensityMatrix& rho);

/// rho^cm_{nm} = sum_S rho_{Sn,Sm}.
CMatrix reduce_motional(const VibronicDensityMatrix& rho);

// -- observables -------------------------------------------------------------

enum class ObservableKind {
  Position,
  Momentum,
  PositionSq,
  MomentumSq,
  Energy,
  Number,
  Parity,
  Custom,
};

struct MotionalObservable {
  std::string name;
  ObservableKind kind = ObservableKind::Custom;
  CMatrix matrix;
  std::string unit;
};

/// Standard observables with exact Fock matrix elements (no truncation
/// artifacts from products of truncated ladder operators).
MotionalObservable make_observable(ObservableKind kind, int dim_fock);

/// Wraps a user matrix; throws ValidationError unless Hermitian to 1e-12.
MotionalObservable custom_observable(std::string name, CMatrix matrix,
                                     std::string unit);

/// Tr(reduced * obs). Throws InvalidDimension on a shape mismatch and
/// ValidationError if the imaginary residue exceeds 1e-10.
double expectation(const CMatrix& reduced, const MotionalObservable& obs);

// -- diagnostics helpers -----------------------------------------------------

double hermiticity_defect(const CMatrix& m);
double trace_error(const CMatrix& m);
double min_eigenvalue(const CMatrix& m);

/// Population of |S, n> with n >= N_max - k, both levels.
double tail_mass(const CMatrix& rho, int dim_fock, int k_sideband);

}  // namespace mion
