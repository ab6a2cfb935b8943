#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "mion/errors.hpp"
#include "mion/hilbert.hpp"
#include "test_support.hpp"

using namespace mion;
using std::numbers::pi;

namespace {

TrapParams trap(double eta, double phi, int k, double omega0 = 1.0) {
  TrapParams p;
  p.omega = 100.0;
  p.omega0 = omega0;
  p.eta = eta;
  p.phi = phi;
  p.k_sideband = k;
  return p;
}

// Brute-force matrix cosine on a dense truncated space (Schur-Parlett inside
// Eigen's MatrixFunctions), independent of the tridiagonal eigen path.
RMatrix matrix_cosine(double eta, double phi, int dim = 160) {
  RMatrix x = RMatrix::Zero(dim, dim);
  for (int j = 1; j < dim; ++j) x(j - 1, j) = x(j, j - 1) = std::sqrt(double(j));
  const RMatrix arg = eta * x + phi * RMatrix::Identity(dim, dim);
  return arg.cos();
}

double matrix_cosine_element(int n, int m, double eta, double phi) {
  return matrix_cosine(eta, phi)(n, m);
}

CMatrix random_density(int dim, std::mt19937& rng) {
  std::normal_distribution<double> g;
  CMatrix a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = Complex(g(rng), g(rng));
  CMatrix rho = a * a.adjoint();
  rho /= rho.trace();
  return 0.5 * (rho + rho.adjoint());
}

}  // namespace

// -- ladder ------------------------------------------------------------------

TEST(Ladder, TwoLevelAnnihilator) {
  const auto l = build_ladder(2);
  EXPECT_EQ(l.annihilation(0, 1), Complex(1.0, 0.0));
  EXPECT_EQ(l.annihilation(0, 0), Complex(0.0));
  EXPECT_EQ(l.annihilation(1, 0), Complex(0.0));
  EXPECT_EQ(l.annihilation(1, 1), Complex(0.0));
}

TEST(Ladder, MatrixElementsAndNumberOperator) {
  const auto l = build_ladder(3);
  EXPECT_NEAR(l.annihilation(1, 2).real(), 1.41421356, 1e-8);
  const auto big = build_ladder(7);
  const CMatrix number = big.creation * big.annihilation;
  for (int n = 0; n < 7; ++n) EXPECT_NEAR(number(n, n).real(), n, 1e-15);
  EXPECT_TRUE(big.creation.isApprox(big.annihilation.adjoint()));
}

TEST(Ladder, CommutatorTruncationArtifact) {
  const int d = 6;
  const auto l = build_ladder(d);
  const CMatrix comm = l.annihilation * l.creation - l.creation * l.annihilation;
  for (int n = 0; n + 1 < d; ++n) EXPECT_NEAR(comm(n, n).real(), 1.0, 1e-14);
  EXPECT_NEAR(comm(d - 1, d - 1).real(), -(d - 1), 1e-14);
}

TEST(Ladder, RejectsTinyDimension) {
  EXPECT_THROW(build_ladder(1), InvalidDimension);
  EXPECT_THROW(build_ladder(0), InvalidDimension);
}

// -- Rabi frequencies --------------------------------------------------------

TEST(RabiFrequency, IdentityCouplingWithoutLambDicke) {
  const auto p = trap(0.0, 0.0, 0, 2.5);
  for (int n = 0; n < 6; ++n) EXPECT_NEAR(rabi_frequency(n, p), 2.5, 1e-14);
}

TEST(RabiFrequency, LambDickeLinearLimit) {
  const auto p = trap(1e-4, -pi / 2, 1, 3.0);
  EXPECT_NEAR(rabi_frequency(0, p) / (3.0 * 1e-4), 1.0, 1e-4);
}

TEST(RabiFrequency, EtaPointTwoNodeValue) {
  const auto p = trap(0.2, -pi / 2, 1);
  const double value = rabi_frequency(0, p);
  // frozen from the dense matrix-cosine oracle and the Laguerre form
  EXPECT_NEAR(value, 0.1960397, 5e-8);
  EXPECT_NEAR(value, matrix_cosine_element(0, 1, 0.2, -pi / 2), 1e-12);
  EXPECT_NEAR(value, oracle::laguerre_coupling(0, 1, 0.2, -pi / 2), 1e-12);
}

TEST(RabiFrequency, PhaseSignConvention) {
  const double minus = rabi_frequency(0, trap(0.2, -pi / 2, 1));
  const double plus = rabi_frequency(0, trap(0.2, +pi / 2, 1));
  EXPECT_NEAR(plus, -minus, 1e-13);
  EXPECT_NEAR(plus, matrix_cosine_element(0, 1, 0.2, pi / 2), 1e-12);
}

TEST(RabiTable, RejectsRangeBelowSideband) {
  EXPECT_THROW(rabi_table(trap(0.2, -pi / 2, 2), 1), RangeError);
  const auto t = rabi_table(trap(0.2, -pi / 2, 2), 5);
  EXPECT_EQ(t.size(), 4);
  EXPECT_EQ(t.n_max(), 5);
  EXPECT_THROW(t.at(4), RangeError);
  EXPECT_THROW(t.at(-1), RangeError);
}

TEST(RabiTable, ConstantWithoutCoupling) {
  const auto t = rabi_table(trap(0.0, 0.0, 0, 1.7), 5);
  ASSERT_EQ(t.size(), 6);
  for (double v : t.values()) EXPECT_NEAR(v, 1.7, 1e-14);
}

TEST(RabiTable, LambDickeSquareRootScaling) {
  const auto t = rabi_table(trap(1e-4, -pi / 2, 1), 20);
  for (int n = 0; n < t.size(); ++n) {
    EXPECT_NEAR(t[n] / (t[0] * std::sqrt(n + 1.0)), 1.0, 1e-3) << "n = " << n;
  }
}

TEST(RabiTable, MatchesMatrixCosineOracle) {
  const double eta = 0.35;
  const auto t = rabi_table(trap(eta, -pi / 2, 1), 30);
  const RMatrix cosine = matrix_cosine(eta, -pi / 2);
  for (int n = 0; n < t.size(); ++n) {
    const double oracle = cosine(n, n + 1);
    EXPECT_NEAR(t[n], oracle, 1e-10 * std::max(1.0, std::abs(oracle))) << "n = " << n;
    EXPECT_NEAR(t[n], oracle::laguerre_coupling(n, 1, eta, -pi / 2), 1e-10) << "n = " << n;
  }
}

TEST(RabiTable, HigherSidebandsMatchLaguerre) {
  for (int k : {0, 2, 3}) {
    for (double phi : {0.0, -pi / 2, 0.3}) {
      const auto t = rabi_table(trap(0.25, phi, k), 25);
      for (int n = 0; n < t.size(); ++n) {
        EXPECT_NEAR(t[n], oracle::laguerre_coupling(n, k, 0.25, phi), 1e-11)
            << "k = " << k << " phi = " << phi << " n = " << n;
      }
    }
  }
}

// -- Rabi invariants (property style) ----------------------------------------

TEST(RabiProperties, BoundedByFundamentalRabiFrequency) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> eta(0.0, 1.0), phi(-pi, pi);
  std::uniform_int_distribution<int> k(0, 3);
  for (int trial = 0; trial < 40; ++trial) {
    const auto t = rabi_table(trap(eta(rng), phi(rng), k(rng), 2.0), 24);
    for (double v : t.values()) EXPECT_LE(std::abs(v), 2.0 * (1 + 1e-12));
  }
}

TEST(RabiProperties, LambDickeAsymptoticsConvergeQuadratically) {
  for (double eta : {1e-3, 5e-4, 1e-4}) {
    const auto t = rabi_table(trap(eta, -pi / 2, 1), 11);
    for (int n = 0; n <= 10; ++n) {
      EXPECT_LE(std::abs(t[n] / (eta * std::sqrt(n + 1.0)) - 1.0), 10 * eta * eta)
          << "eta = " << eta << " n = " << n;
    }
  }
}

TEST(RabiProperties, CouplingMatrixIsRealSymmetric) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> eta(0.0, 0.8), phi(-pi, pi);
  for (int trial = 0; trial < 20; ++trial) {
    const RMatrix c = standing_wave_coupling(trap(eta(rng), phi(rng), 1), 20);
    EXPECT_LE((c - c.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(RabiProperties, TruncationStability) {
  const auto p = trap(0.4, -pi / 2, 1);
  const RMatrix a = standing_wave_coupling(p, 30);
  const RMatrix b = standing_wave_coupling(p, 60).topLeftCorner(30, 30);
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12);
}

// -- initial states ----------------------------------------------------------

TEST(InitialState, FockProjector) {
  const auto s = initial_state(FockState{2}, 8);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      EXPECT_EQ(s.matrix(i, j), Complex(i == 2 && j == 2 ? 1.0 : 0.0));
  EXPECT_EQ(s.renormalization, 1.0);
}

TEST(InitialState, CoherentPoissonAndCoherences) {
  const auto s = initial_state(CoherentState{{1.0, 0.0}}, 33);
  EXPECT_NEAR(s.matrix(0, 0).real(), 0.3678794, 5e-8);
  const Complex alpha(0.6, -0.8);
  const auto c = initial_state(CoherentState{alpha}, 33);
  // rho_nm = e^{-|a|^2} a^n conj(a)^m / sqrt(n! m!)
  const double e = std::exp(-std::norm(alpha));
  EXPECT_NEAR(std::abs(c.matrix(2, 3) - e * std::pow(alpha, 2) * std::pow(std::conj(alpha), 3) /
                                           std::sqrt(2.0 * 6.0)),
              0.0, 1e-14);
  EXPECT_NEAR(c.matrix.trace().real(), 1.0, 1e-14);
}

TEST(InitialState, ThermalGeometric) {
  const auto s = initial_state(ThermalState{0.5}, 40);
  EXPECT_NEAR(s.matrix(0, 0).real(), 1.0 / 1.5, 1e-12);
  EXPECT_NEAR(s.matrix(1, 1).real(), 0.5 / 2.25, 1e-12);
  EXPECT_GT(s.renormalization, 1.0);
  EXPECT_LT(s.renormalization - 1.0, 1e-15 + s.tail_mass * 1.01);
}

TEST(InitialState, TruncationErrorNamesRequiredDimension) {
  try {
    initial_state(CoherentState{{3.0, 0.0}}, 12);
    FAIL() << "expected TruncationError";
  } catch (const TruncationError& e) {
    EXPECT_GT(e.required_dim(), 12u);
    // the suggested dimension must itself satisfy the budget
    EXPECT_NO_THROW(initial_state(CoherentState{{3.0, 0.0}}, int(e.required_dim())));
    EXPECT_THROW(initial_state(CoherentState{{3.0, 0.0}}, int(e.required_dim()) - 1),
                 TruncationError);
  }
  try {
    initial_state(ThermalState{2.0}, 10);
    FAIL() << "expected TruncationError";
  } catch (const TruncationError& e) {
    EXPECT_NO_THROW(initial_state(ThermalState{2.0}, int(e.required_dim())));
  }
  EXPECT_THROW(initial_state(FockState{8}, 8), TruncationError);
}

TEST(InitialState, ExplicitMatrix) {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = 0.5;
  m(1, 1) = 0.5;
  m(0, 1) = Complex(0.0, 0.5);
  m(1, 0) = Complex(0.0, -0.5);
  const auto s = initial_state(ExplicitState{m}, 5);
  EXPECT_EQ(s.matrix.rows(), 5);
  EXPECT_EQ(s.matrix(0, 1), Complex(0.0, 0.5));

  CMatrix bad = m;
  bad(0, 1) = 0.3;  // no longer Hermitian
  EXPECT_THROW(initial_state(ExplicitState{bad}, 5), ValidationError);
  CMatrix negative = CMatrix::Zero(2, 2);
  negative(0, 0) = 1.5;
  negative(1, 1) = -0.5;
  EXPECT_THROW(initial_state(ExplicitState{negative}, 5), ValidationError);
}

TEST(InitialState, DefaultDimension) {
  EXPECT_EQ(default_fock_dim(FockState{0}, 1), 33);
  EXPECT_EQ(default_fock_dim(FockState{30}, 2), 30 + 2 + 8 + 1);
  // nbar = 9, sigma = 3: 9 + 24 + 1 + 8 = 42
  EXPECT_EQ(default_fock_dim(CoherentState{{3.0, 0.0}}, 1), 43);
}

// -- composition and partial traces -------------------------------------------

TEST(Compose, GroundStateAndBlocks) {
  const int d = 6;
  const auto rho = compose_initial(initial_state(FockState{0}, d).matrix, d);
  EXPECT_EQ(rho(Level::Down, 0, Level::Down, 0), Complex(1.0));
  const auto coh = compose_initial(initial_state(CoherentState{{0.7, 0.0}}, 33).matrix, 33);
  EXPECT_NEAR(coh.entries().trace().real(), 1.0, 1e-14);
  EXPECT_EQ(coh.entries().bottomRightCorner(33, 33).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(coh.entries().topRightCorner(33, 33).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_NEAR(coh(Level::Down, 0, Level::Down, 1).real(), std::exp(-0.49) * 0.7, 1e-14);
}

TEST(Compose, ValidatesInputs) {
  EXPECT_THROW(compose_initial(CMatrix::Identity(3, 3) / 3.0, 4), InvalidDimension);
  CMatrix twice = CMatrix::Zero(4, 4);
  twice(0, 0) = 2.0;
  EXPECT_THROW(VibronicDensityMatrix(twice, 2), ValidationError);
}

TEST(PartialTrace, InternalAfterComposition) {
  const int d = 33;
  for (const MotionalStateSpec& spec :
       {MotionalStateSpec{FockState{3}}, MotionalStateSpec{CoherentState{{1.0, 0.5}}},
        MotionalStateSpec{ThermalState{0.5}}}) {
    const auto rho = compose_initial(initial_state(spec, d).matrix, d);
    const auto sigma = reduce_internal(rho);
    EXPECT_NEAR(sigma(0, 0).real(), 1.0, 1e-14);
    EXPECT_NEAR(std::abs(sigma(1, 1)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(sigma(0, 1)), 0.0, 1e-15);
  }
}

TEST(PartialTrace, MaximallyMixed) {
  const int d = 5;
  const auto rho = VibronicDensityMatrix(CMatrix::Identity(2 * d, 2 * d) / double(2 * d), d);
  const auto sigma = reduce_internal(rho);
  EXPECT_NEAR(sigma(0, 0).real(), 0.5, 1e-15);
  EXPECT_NEAR(sigma(1, 1).real(), 0.5, 1e-15);
}

TEST(PartialTrace, MotionalFockProjector) {
  const int d = 10;
  const auto rho = compose_initial(initial_state(FockState{4}, d).matrix, d);
  const CMatrix cm = reduce_motional(rho);
  CMatrix expected = CMatrix::Zero(d, d);
  expected(4, 4) = 1.0;
  EXPECT_EQ((cm - expected).cwiseAbs().maxCoeff(), 0.0);
}

TEST(PartialTrace, TracesAgreeOnRandomStates) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 2 + trial % 7;
    const auto rho = VibronicDensityMatrix(random_density(2 * d, rng), d);
    const auto sigma = reduce_internal(rho);
    const CMatrix cm = reduce_motional(rho);
    EXPECT_NEAR(sigma.trace().real(), 1.0, 1e-12);
    EXPECT_NEAR(cm.trace().real(), 1.0, 1e-12);
    EXPECT_LE(hermiticity_defect(cm), 1e-12);
    EXPECT_LE((sigma - sigma.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

// -- observables -------------------------------------------------------------

TEST(Expectation, FockEnergyAndParityZeroPosition) {
  const int d = 12;
  for (int n : {0, 1, 5}) {
    const CMatrix cm = initial_state(FockState{n}, d).matrix;
    EXPECT_NEAR(expectation(cm, make_observable(ObservableKind::Energy, d)), n + 0.5, 1e-15);
    EXPECT_NEAR(expectation(cm, make_observable(ObservableKind::Position, d)), 0.0, 1e-15);
    EXPECT_NEAR(expectation(cm, make_observable(ObservableKind::PositionSq, d)), 2 * n + 1,
                1e-14);
  }
}

TEST(Expectation, CoherentPosition) {
  const int d = 33;
  const CMatrix cm = initial_state(CoherentState{{1.0, 0.0}}, d).matrix;
  EXPECT_NEAR(expectation(cm, make_observable(ObservableKind::Position, d)), 2.0, 1e-12);
  const CMatrix ci = initial_state(CoherentState{{0.0, 0.8}}, d).matrix;
  EXPECT_NEAR(expectation(ci, make_observable(ObservableKind::Momentum, d)), 1.6, 1e-12);
}

TEST(Expectation, SquaredObservablesMatchLadderAlgebraAwayFromEdge) {
  const int d = 16;
  const auto l = build_ladder(d);
  const CMatrix x = l.annihilation + l.creation;
  const CMatrix p = Complex(0, 1) * (l.creation - l.annihilation);
  const CMatrix x2 = make_observable(ObservableKind::PositionSq, d).matrix;
  const CMatrix p2 = make_observable(ObservableKind::MomentumSq, d).matrix;
  // truncated products differ only in the last row/column
  EXPECT_LE(((x * x) - x2).topLeftCorner(d - 1, d - 1).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LE(((p * p) - p2).topLeftCorner(d - 1, d - 1).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_TRUE(make_observable(ObservableKind::Position, d).matrix.isApprox(x));
  EXPECT_TRUE(make_observable(ObservableKind::Momentum, d).matrix.isApprox(p));
}

TEST(Expectation, ErrorPaths) {
  const CMatrix cm = initial_state(FockState{0}, 4).matrix;
  EXPECT_THROW(expectation(cm, make_observable(ObservableKind::Energy, 5)), InvalidDimension);
  CMatrix notHermitian = CMatrix::Zero(4, 4);
  notHermitian(0, 1) = 1.0;
  EXPECT_THROW(custom_observable("bad", notHermitian, "1"), ValidationError);
  const auto ok = custom_observable("proj0", CMatrix::Identity(4, 4), "1");
  EXPECT_NEAR(expectation(cm, ok), 1.0, 1e-15);
}

TEST(TrapParamsTest, ValidationAndWarnings) {
  TrapParams p = trap(0.2, 0.0, 1);
  EXPECT_NO_THROW(p.validate());
  EXPECT_TRUE(p.regime_warnings().empty());
  p.omega0 = 20.0;
  EXPECT_EQ(p.regime_warnings().size(), 1u);
  p.kappa = -1.0;
  EXPECT_THROW(p.validate(), ValidationError);
  p = trap(0.2, 0.0, 1);
  p.omega = 0.0;
  EXPECT_THROW(p.validate(), ValidationError);
  p = trap(-0.1, 0.0, 1);
  EXPECT_THROW(p.validate(), ValidationError);
}
