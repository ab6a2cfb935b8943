#pragma once

// Explicit Runge-Kutta propagation of matrix-valued ODEs dy/dt = f(t, y).

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "mion/hilbert.hpp"

namespace mion {

enum class Method {
  FixedRK4,       ///< classical 4th order, step = max_step
  DormandPrince,  ///< adaptive embedded 5(4) pair
};

struct IntegratorConfig {
  Method method = Method::DormandPrince;
  double abs_tol = 1e-12;
  double rel_tol = 1e-9;
  double max_step = std::numeric_limits<double>::infinity();  ///< seconds
  std::vector<double> sample_times;  ///< strictly increasing, from 0
  std::int64_t max_steps = 50'000'000;

  /// Throws ValidationError on bad tolerances or sample grid.
  void validate() const;
};

/// n uniform samples on [0, t_end], both ends included.
std::vector<double> uniform_times(double t_end, int n);

struct StepStats {
  std::int64_t accepted = 0;
  std::int64_t rejected = 0;
  std::int64_t rhs_evaluations = 0;
};

using MatrixRhs = std::function<void(double t, const CMatrix& y, CMatrix& dydt)>;
/// Called once per sample time, in order. Returning normally continues.
using SampleSink = std::function<void(double t, const CMatrix& y)>;

/// Propagates y0 from sample_times.front() through every sample time,
/// handing each interpolated state to `sink`. Dense output between accepted
/// steps is cubic Hermite interpolation. Throws StiffnessError when the
/// adaptive step underflows.
StepStats propagate(const MatrixRhs& rhs, const CMatrix& y0,
                    const IntegratorConfig& config, const SampleSink& sink);

}  // namespace mion
