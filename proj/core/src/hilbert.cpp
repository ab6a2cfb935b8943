#include "mion/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "mion/errors.hpp"

namespace mion {

namespace {

constexpr double kHermitianTol = 1e-12;
constexpr double kTraceTol = 1e-12;
constexpr double kPsdTol = 1e-10;
constexpr double kCouplingConvergence = 1e-12;
constexpr int kMaxEvaluationDim = 8192;

bool finite(double x) { return std::isfinite(x); }

// Top-left dim x dim block of cos(eta X + phi), X = a + a^dagger, evaluated on
// an eval_dim-dimensional Fock space.
RMatrix coupling_block(double eta, double phi, int dim, int eval_dim) {
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(eval_dim);
  Eigen::VectorXd sub(eval_dim - 1);
  for (int n = 1; n < eval_dim; ++n) sub(n - 1) = eta * std::sqrt(double(n));

  Eigen::SelfAdjointEigenSolver<RMatrix> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw Error("eigen-decomposition of the standing-wave argument failed");
  }
  const Eigen::VectorXd cosines =
      solver.eigenvalues().unaryExpr([phi](double x) { return std::cos(x + phi); });
  const RMatrix top = solver.eigenvectors().topRows(dim);
  return top * cosines.asDiagonal() * top.transpose();
}

}  // namespace

// -- TrapParams --------------------------------------------------------------

void TrapParams::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ValidationError(field + ": " + why);
  };
  if (!finite(omega) || omega <= 0) fail("omega", "must be > 0");
  if (!finite(omega21)) fail("omega21", "must be finite");
  if (!finite(omega0) || omega0 < 0) fail("omega0", "must be >= 0");
  if (!finite(eta) || eta < 0) fail("eta", "must be >= 0");
  if (!finite(phi)) fail("phi", "must be finite");
  if (k_sideband < 0) fail("k", "must be >= 0");
  if (!finite(kappa) || kappa < 0) fail("kappa", "must be >= 0");
}

std::vector<std::string> TrapParams::regime_warnings() const {
  std::vector<std::string> out;
  if (omega > 0 && omega0 / omega > 0.1) {
    std::ostringstream os;
    os << "low-excitation regime violated: omega0/omega = " << omega0 / omega
       << " > 0.1";
    out.push_back(os.str());
  }
  return out;
}

// -- operators ---------------------------------------------------------------

Ladder build_ladder(int dim_fock) {
  if (dim_fock < 2) {
    throw InvalidDimension("ladder operators need dim_fock >= 2, got " +
                           std::to_string(dim_fock));
  }
  CMatrix a = CMatrix::Zero(dim_fock, dim_fock);
  for (int n = 1; n < dim_fock; ++n) a(n - 1, n) = std::sqrt(double(n));
  return {a, a.adjoint()};
}

RMatrix standing_wave_coupling(const TrapParams& params, int dim) {
  if (dim < 1) throw InvalidDimension("coupling dimension must be >= 1");
  int eval_dim = std::max(64, 2 * dim);
  RMatrix current = coupling_block(params.eta, params.phi, dim, eval_dim);
  while (true) {
    const int next_dim = 2 * eval_dim;
    if (next_dim > kMaxEvaluationDim) {
      throw TruncationError("standing-wave coupling did not converge below " +
                                std::to_string(kMaxEvaluationDim) + " levels",
                            0);
    }
    RMatrix next = coupling_block(params.eta, params.phi, dim, next_dim);
    const double change = (next - current).cwiseAbs().maxCoeff();
    current = std::move(next);
    eval_dim = next_dim;
    if (change <= kCouplingConvergence) break;
  }
  return current;
}

double rabi_frequency(int n, const TrapParams& params) {
  if (n < 0) throw RangeError("rabi_frequency: n must be >= 0");
  const int k = params.k_sideband;
  if (k < 0) throw ValidationError("k: must be >= 0");
  const RMatrix c = standing_wave_coupling(params, n + k + 1);
  return params.omega0 * c(n, n + k);
}

RabiTable::RabiTable(int k_sideband, std::vector<double> values)
    : k_(k_sideband), values_(std::move(values)) {
  if (k_ < 0) throw ValidationError("RabiTable: k must be >= 0");
}

double RabiTable::at(int n) const {
  if (!covers(n)) {
    std::ostringstream os;
    os << "Rabi table covers n = 0.." << size() - 1 << " (k = " << k_
       << "), requested n = " << n;
    throw RangeError(os.str());
  }
  return values_[static_cast<std::size_t>(n)];
}

RabiTable rabi_table(const TrapParams& params, int n_max) {
  const int k = params.k_sideband;
  if (n_max < k) {
    throw RangeError("rabi_table: n_max (" + std::to_string(n_max) +
                     ") < k (" + std::to_string(k) + ")");
  }
  const RMatrix c = standing_wave_coupling(params, n_max + 1);
  std::vector<double> values(static_cast<std::size_t>(n_max - k + 1));
  for (int n = 0; n + k <= n_max; ++n) {
    values[static_cast<std::size_t>(n)] = params.omega0 * c(n, n + k);
  }
  return RabiTable(k, std::move(values));
}

// -- motional states ---------------------------------------------------------

std::string describe(const MotionalStateSpec& spec) {
  std::ostringstream os;
  os.precision(17);
  std::visit(
      [&os](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, FockState>) {
          os << "Fock(" << s.n << ")";
        } else if constexpr (std::is_same_v<T, CoherentState>) {
          os << "Coherent(" << s.alpha.real() << "," << s.alpha.imag() << ")";
        } else if constexpr (std::is_same_v<T, ThermalState>) {
          os << "Thermal(" << s.nbar << ")";
        } else {
          os << "Explicit(" << s.matrix.rows() << "x" << s.matrix.cols() << ")";
        }
      },
      spec);
  return os.str();
}

std::pair<double, double> occupation_moments(const MotionalStateSpec& spec) {
  return std::visit(
      [](const auto& s) -> std::pair<double, double> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, FockState>) {
          return {double(s.n), 0.0};
        } else if constexpr (std::is_same_v<T, CoherentState>) {
          return {std::norm(s.alpha), std::abs(s.alpha)};
        } else if constexpr (std::is_same_v<T, ThermalState>) {
          return {s.nbar, std::sqrt(s.nbar * (s.nbar + 1.0))};
        } else {
          double mean = 0.0, second = 0.0;
          for (Eigen::Index n = 0; n < s.matrix.rows(); ++n) {
            const double p = s.matrix(n, n).real();
            mean += n * p;
            second += double(n) * n * p;
          }
          return {mean, std::sqrt(std::max(0.0, second - mean * mean))};
        }
      },
      spec);
}

int default_fock_dim(const MotionalStateSpec& spec, int k_sideband) {
  const auto [mean, sigma] = occupation_moments(spec);
  int n_max = std::max(
      32, static_cast<int>(std::ceil(mean + 8.0 * sigma)) + k_sideband + 8);
  if (const auto* ex = std::get_if<ExplicitState>(&spec)) {
    n_max = std::max(n_max, static_cast<int>(ex->matrix.rows()) - 1);
  }
  return n_max + 1;
}

namespace {

void check_motional_matrix(const CMatrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw InvalidDimension(std::string(what) + ": matrix must be square");
  }
  if (hermiticity_defect(m) > kHermitianTol) {
    throw ValidationError(std::string(what) + ": matrix is not Hermitian");
  }
  if (trace_error(m) > kTraceTol) {
    throw ValidationError(std::string(what) + ": trace differs from 1");
  }
  if (min_eigenvalue(m) < -kPsdTol) {
    throw ValidationError(std::string(what) +
                          ": matrix is not positive semidefinite");
  }
}

PreparedMotionalState finish(CMatrix m, double tail, const char* what) {
  const double kept = m.trace().real();
  const double factor = 1.0 / kept;
  m *= factor;
  m = (0.5 * (m + m.adjoint())).eval();
  PreparedMotionalState out{std::move(m), tail, factor};
  check_motional_matrix(out.matrix, what);
  return out;
}

[[noreturn]] void truncation_failure(const std::string& spec, double tail,
                                     int dim, std::size_t required) {
  std::ostringstream os;
  os << spec << ": " << tail << " of the probability lies beyond dim_fock = "
     << dim << "; need dim_fock >= " << required;
  throw TruncationError(os.str(), required);
}

}  // namespace

PreparedMotionalState initial_state(const MotionalStateSpec& spec, int dim_fock,
                                    double tail_budget) {
  if (dim_fock < 2) throw InvalidDimension("dim_fock must be >= 2");
  const std::string label = describe(spec);

  if (const auto* s = std::get_if<FockState>(&spec)) {
    if (s->n < 0) throw ValidationError("Fock: n must be >= 0");
    if (s->n >= dim_fock) {
      truncation_failure(label, 1.0, dim_fock, std::size_t(s->n) + 1);
    }
    CMatrix m = CMatrix::Zero(dim_fock, dim_fock);
    m(s->n, s->n) = 1.0;
    return {std::move(m), 0.0, 1.0};
  }

  if (const auto* s = std::get_if<CoherentState>(&spec)) {
    const double mean = std::norm(s->alpha);
    // c_n = e^{-|a|^2/2} a^n / sqrt(n!), by recursion.
    Eigen::VectorXcd c(dim_fock);
    c(0) = std::exp(-0.5 * mean);
    for (int n = 1; n < dim_fock; ++n) c(n) = c(n - 1) * s->alpha / std::sqrt(double(n));
    // Tail: continue the recursion past dim_fock until the terms vanish.
    std::vector<double> tail_terms;
    double p = std::norm(c(dim_fock - 1));
    for (int n = dim_fock;; ++n) {
      p *= mean / n;
      if (p < 1e-300 || (n > mean && p < 1e-30)) break;
      tail_terms.push_back(p);
    }
    double tail = 0.0;
    for (auto it = tail_terms.rbegin(); it != tail_terms.rend(); ++it) tail += *it;
    if (tail > tail_budget) {
      double remaining = tail;
      int required = dim_fock;
      for (double term : tail_terms) {
        if (remaining <= tail_budget) break;
        remaining -= term;
        ++required;
      }
      truncation_failure(label, tail, dim_fock, std::size_t(required));
    }
    return finish(c * c.adjoint(), tail, "Coherent");
  }

  if (const auto* s = std::get_if<ThermalState>(&spec)) {
    if (!(s->nbar >= 0) || !std::isfinite(s->nbar)) {
      throw ValidationError("Thermal: nbar must be >= 0");
    }
    const double q = s->nbar / (1.0 + s->nbar);
    const double tail = std::pow(q, dim_fock);
    if (tail > tail_budget) {
      const auto required = static_cast<std::size_t>(
          std::ceil(std::log(tail_budget) / std::log(q)));
      truncation_failure(label, tail, dim_fock, required);
    }
    CMatrix m = CMatrix::Zero(dim_fock, dim_fock);
    double pn = 1.0 / (1.0 + s->nbar);
    for (int n = 0; n < dim_fock; ++n) {
      m(n, n) = pn;
      pn *= q;
    }
    return finish(std::move(m), tail, "Thermal");
  }

  const auto& ex = std::get<ExplicitState>(spec);
  check_motional_matrix(ex.matrix, "Explicit");
  const int given = static_cast<int>(ex.matrix.rows());
  if (given <= dim_fock) {
    CMatrix m = CMatrix::Zero(dim_fock, dim_fock);
    m.topLeftCorner(given, given) = ex.matrix;
    return {std::move(m), 0.0, 1.0};
  }
  double tail = 0.0;
  for (int n = dim_fock; n < given; ++n) tail += ex.matrix(n, n).real();
  if (tail > tail_budget) {
    std::size_t required = std::size_t(given);
    double remaining = tail;
    for (int n = dim_fock; n < given; ++n) {
      remaining -= ex.matrix(n, n).real();
      if (remaining <= tail_budget) {
        required = std::size_t(n) + 1;
        break;
      }
    }
    truncation_failure(label, tail, dim_fock, required);
  }
  return finish(ex.matrix.topLeftCorner(dim_fock, dim_fock), tail, "Explicit");
}

// -- vibronic density matrix -------------------------------------------------

VibronicDensityMatrix::VibronicDensityMatrix(CMatrix entries, int dim_fock)
    : entries_(std::move(entries)), dim_fock_(dim_fock) {
  if (dim_fock_ < 1 || entries_.rows() != 2 * dim_fock_ ||
      entries_.cols() != 2 * dim_fock_) {
    throw InvalidDimension("vibronic density matrix must be (2 dim_fock)^2");
  }
  if (hermiticity_defect(entries_) > kHermitianTol) {
    throw ValidationError("vibronic density matrix is not Hermitian");
  }
  if (trace_error(entries_) > kTraceTol) {
    throw ValidationError("vibronic density matrix trace differs from 1");
  }
}

VibronicDensityMatrix VibronicDensityMatrix::unchecked(CMatrix entries,
                                                       int dim_fock) {
  VibronicDensityMatrix rho;
  rho.entries_ = std::move(entries);
  rho.dim_fock_ = dim_fock;
  return rho;
}

VibronicDensityMatrix compose_initial(const CMatrix& motional, int dim_fock) {
  if (motional.rows() != dim_fock || motional.cols() != dim_fock) {
    throw InvalidDimension("motional matrix does not match dim_fock");
  }
  CMatrix full = CMatrix::Zero(2 * dim_fock, 2 * dim_fock);
  full.topLeftCorner(dim_fock, dim_fock) = motional;
  return VibronicDensityMatrix(std::move(full), dim_fock);
}

Eigen::Matrix2cd reduce_internal(const VibronicDensityMatrix& rho) {
  const int d = rho.dim_fock();
  const CMatrix& m = rho.entries();
  Eigen::Matrix2cd sigma;
  for (int s = 0; s < 2; ++s) {
    for (int s2 = 0; s2 < 2; ++s2) {
      sigma(s, s2) = m.block(s * d, s2 * d, d, d).diagonal().sum();
    }
  }
  return sigma;
}

CMatrix reduce_motional(const VibronicDensityMatrix& rho) {
  const int d = rho.dim_fock();
  const CMatrix& m = rho.entries();
  return m.topLeftCorner(d, d) + m.bottomRightCorner(d, d);
}

// -- observables -------------------------------------------------------------

MotionalObservable make_observable(ObservableKind kind, int dim_fock) {
  if (dim_fock < 2) throw InvalidDimension("observable needs dim_fock >= 2");
  const int d = dim_fock;
  CMatrix m = CMatrix::Zero(d, d);
  auto sq = [](int n) { return std::sqrt(double(n)); };
  const Complex i(0.0, 1.0);
  switch (kind) {
    case ObservableKind::Position:
      for (int n = 0; n + 1 < d; ++n) m(n, n + 1) = m(n + 1, n) = sq(n + 1);
      return {"position", kind, m, "x0"};
    case ObservableKind::Momentum:
      // p = i (a^dagger - a)
      for (int n = 0; n + 1 < d; ++n) {
        m(n + 1, n) = i * sq(n + 1);
        m(n, n + 1) = -i * sq(n + 1);
      }
      return {"momentum", kind, m, "p0"};
    case ObservableKind::PositionSq:
    case ObservableKind::MomentumSq: {
      const double sign = kind == ObservableKind::PositionSq ? 1.0 : -1.0;
      for (int n = 0; n < d; ++n) m(n, n) = 2.0 * n + 1.0;
      for (int n = 0; n + 2 < d; ++n) {
        m(n, n + 2) = m(n + 2, n) = sign * sq(n + 1) * sq(n + 2);
      }
      if (kind == ObservableKind::PositionSq) return {"position_sq", kind, m, "x0^2"};
      return {"momentum_sq", kind, m, "p0^2"};
    }
    case ObservableKind::Energy:
      for (int n = 0; n < d; ++n) m(n, n) = n + 0.5;
      return {"energy", kind, m, "hbar*omega"};
    case ObservableKind::Number:
      for (int n = 0; n < d; ++n) m(n, n) = n;
      return {"number", kind, m, "1"};
    case ObservableKind::Parity:
      for (int n = 0; n < d; ++n) m(n, n) = (n % 2 == 0) ? 1.0 : -1.0;
      return {"parity", kind, m, "1"};
    case ObservableKind::Custom:
      break;
  }
  throw ValidationError("make_observable: use custom_observable for custom matrices");
}

MotionalObservable custom_observable(std::string name, CMatrix matrix,
                                     std::string unit) {
  if (matrix.rows() != matrix.cols()) {
    throw InvalidDimension("custom observable must be square");
  }
  if (hermiticity_defect(matrix) > kHermitianTol) {
    throw ValidationError("custom observable '" + name + "' is not Hermitian");
  }
  return {std::move(name), ObservableKind::Custom, std::move(matrix),
          std::move(unit)};
}

double expectation(const CMatrix& reduced, const MotionalObservable& obs) {
  if (reduced.rows() != obs.matrix.rows() || reduced.cols() != obs.matrix.cols()) {
    throw InvalidDimension("expectation: state is " +
                           std::to_string(reduced.rows()) + "-dimensional, '" +
                           obs.name + "' is " + std::to_string(obs.matrix.rows()));
  }
  // Tr(A B) = sum_ij A_ij B_ji
  const Complex value = (reduced.array() * obs.matrix.transpose().array()).sum();
  const double scale = std::max(1.0, std::abs(value.real()));
  if (std::abs(value.imag()) > 1e-10 * scale) {
    throw ValidationError("expectation of '" + obs.name +
                          "' has imaginary residue " + std::to_string(value.imag()));
  }
  return value.real();
}

// -- diagnostics -------------------------------------------------------------

double hermiticity_defect(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

double trace_error(const CMatrix& m) { return std::abs(m.trace() - 1.0); }

double min_eigenvalue(const CMatrix& m) {
  const CMatrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

double tail_mass(const CMatrix& rho, int dim_fock, int k_sideband) {
  const int n_max = dim_fock - 1;
  const int first = std::max(0, n_max - k_sideband);
  double tail = 0.0;
  for (int s = 0; s < 2; ++s) {
    for (int n = first; n <= n_max; ++n) {
      tail += rho(s * dim_fock + n, s * dim_fock + n).real();
    }
  }
  return tail;
}

}  // namespace mion
