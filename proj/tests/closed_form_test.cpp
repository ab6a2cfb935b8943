#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "mion/closed_form.hpp"
#include "mion/errors.hpp"
#include "mion/fit.hpp"
#include "mion/lindblad.hpp"
#include "test_support.hpp"

using namespace mion;
using std::numbers::pi;

namespace {

TrapParams trap(int k = 1, double kappa = 0.0) {
  TrapParams p;
  p.omega = 100.0;
  p.omega0 = 1.0;
  p.eta = 0.2;
  p.phi = -pi / 2;
  p.k_sideband = k;
  p.kappa = kappa;
  return p;
}

std::vector<double> point_mass(int n) {
  std::vector<double> d(std::size_t(n) + 1, 0.0);
  d.back() = 1.0;
  return d;
}

struct Run {
  TimeSeries series;
  CMatrix motional0;
};

Run integrate_spec(const MotionalStateSpec& spec, const TrapParams& p, double t_end,
                   int samples) {
  const int d = default_fock_dim(spec, p.k_sideband);
  const CMatrix cm = initial_state(spec, d).matrix;
  IntegratorConfig cfg;
  cfg.sample_times = uniform_times(t_end, samples);
  IntegrationOptions opts;
  opts.compute_min_eigenvalue = false;
  auto r = integrate(compose_initial(cm, d), p, ReducedJCM{}, cfg, opts);
  return {std::move(r.series), cm};
}

}  // namespace

// -- frequencies and branches ------------------------------------------------

TEST(Frequencies, UndampedSumIsOscillatory) {
  const auto p = trap();
  const auto rabi = rabi_table(p, 10);
  const auto [w, u] = frequencies(1, 3, p, rabi);
  EXPECT_EQ(w.branch, Branch::Oscillatory);
  EXPECT_NEAR(w.value, 0.5 * (rabi[1] + rabi[3]), 1e-15);
  EXPECT_EQ(u.branch, Branch::Oscillatory);
  EXPECT_NEAR(u.value, 0.5 * std::abs(rabi[1] - rabi[3]), 1e-15);
}

TEST(Frequencies, CriticalAtFourRabi) {
  auto p = trap();
  const auto rabi = rabi_table(p, 10);
  p.kappa = 4.0 * rabi[2];
  EXPECT_EQ(frequencies(2, 2, p, rabi).w.branch, Branch::Critical);
  p.kappa = 0.0;
  const auto u = frequencies(2, 2, p, rabi).u;
  EXPECT_EQ(u.branch, Branch::Critical);
  EXPECT_EQ(u.value, 0.0);
  EXPECT_THROW(frequencies(0, 10, p, rabi), RangeError);
}

TEST(Frequencies, BranchClassification) {
  EXPECT_EQ(branched_frequency(1.0, 3.9).branch, Branch::Oscillatory);
  EXPECT_EQ(branched_frequency(1.0, 4.1).branch, Branch::Hyperbolic);
  EXPECT_NEAR(branched_frequency(1.0, 5.0).value, std::sqrt(25.0 / 16 - 1), 1e-15);
  EXPECT_EQ(branched_frequency(0.0, 0.0).branch, Branch::Critical);
  EXPECT_EQ(branched_frequency(0.0, 1.0).branch, Branch::Hyperbolic);
  EXPECT_EQ(to_string(Branch::Hyperbolic), "hyperbolic");
}

TEST(KappaCrit, FourTimesRabi) {
  const auto p = trap();
  const auto rabi = rabi_table(p, 20);
  for (int n = 0; n < rabi.size(); ++n) EXPECT_DOUBLE_EQ(kappa_crit(n, rabi) / rabi[n], 4.0);
  EXPECT_THROW(kappa_crit(rabi.size(), rabi), RangeError);
  // ratio identity behind the headline numbers
  const RabiTable headline(1, {5.83e5});
  EXPECT_NEAR(kappa_crit(0, headline), 2.332e6, 1e3);
  EXPECT_NEAR(4.9e4 / kappa_crit(0, headline), 2.1e-2, 1e-4);
}

TEST(KappaCrit, LambDickeScaling) {
  auto p = trap();
  p.eta = 1e-5;
  const auto rabi = rabi_table(p, 12);
  for (int n = 0; n < rabi.size(); ++n) {
    EXPECT_NEAR(kappa_crit(n, rabi) / kappa_crit(0, rabi), std::sqrt(n + 1.0), 1e-8);
  }
}

// -- envelopes ---------------------------------------------------------------

TEST(Envelope, MatchesComplexRootOracleOnAllBranches) {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> x(0.01, 2.0), ratio(0.0, 10.0), tt(0.0, 30.0);
  for (int i = 0; i < 2000; ++i) {
    const double rabi = x(rng);
    const double kappa = ratio(rng) * 4 * rabi;
    const double t = tt(rng);
    const auto f = branched_frequency(rabi, kappa);
    EXPECT_NEAR(damped_envelope(f, kappa, t), oracle::manifold_inversion(rabi, kappa, t), 1e-10)
        << "rabi " << rabi << " kappa " << kappa << " t " << t;
  }
}

TEST(Envelope, ContinuousAcrossCriticalPoint) {
  const double rabi = 0.37;
  const double kc = 4 * rabi;
  for (double t = 0.0; t <= 10.0 / kc; t += 0.05 / kc) {
    const double below = damped_envelope(branched_frequency(rabi, kc * (1 - 1e-8)), kc, t);
    const double above = damped_envelope(branched_frequency(rabi, kc * (1 + 1e-8)), kc, t);
    const double at = damped_envelope(branched_frequency(rabi, kc), kc, t);
    EXPECT_LE(std::abs(below - above), 1e-6);
    EXPECT_LE(std::abs(below - at), 1e-6);
  }
}

TEST(Envelope, HyperbolicBranchDoesNotOverflow) {
  const auto f = branched_frequency(1.0, 1000.0);
  const double v = damped_envelope(f, 1000.0, 1e5);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_GT(v, 0.0);
  EXPECT_LT(v, 1.0);
}

TEST(Envelope, UndampedFormsAtCriticalAndSmallArgument) {
  const auto crit = branched_frequency(0.25, 1.0);
  EXPECT_EQ(crit.branch, Branch::Critical);
  EXPECT_DOUBLE_EQ(envelope(crit, 1.0, 2.0), 1.5);
  const auto tiny = branched_frequency(1.0, 0.0);
  EXPECT_NEAR(envelope(tiny, 0.0, 1e-9), 1.0, 1e-15);
}

// -- P_down ------------------------------------------------------------------

TEST(PDown, InitialValueAndLongTimeLimit) {
  auto p = trap(1, 0.05);
  const auto rabi = rabi_table(p, 40);
  const std::vector<double> thermal{0.5, 0.3, 0.2};
  EXPECT_DOUBLE_EQ(p_down(0.0, thermal, p, rabi), 1.0);
  EXPECT_LT(std::abs(p_down(200 / p.kappa, thermal, p, rabi) - 0.5), 1e-6);
}

TEST(PDown, UndampedFockIsCosine) {
  const auto p = trap();
  const auto rabi = rabi_table(p, 10);
  for (int n : {0, 3}) {
    for (double t : {0.0, 1.3, 17.0, 55.5}) {
      EXPECT_NEAR(p_down_fock(t, n, p, rabi), 0.5 * (1 + std::cos(rabi[n] * t)), 1e-14);
    }
  }
}

TEST(PDown, FockIsPointDistribution) {
  const auto p = trap(1, 0.3);
  const auto rabi = rabi_table(p, 10);
  for (double t : {0.0, 0.7, 9.0}) {
    EXPECT_EQ(p_down_fock(t, 4, p, rabi), p_down(t, point_mass(4), p, rabi));
  }
}

TEST(PDown, CriticalBranchForm) {
  auto p = trap();
  const auto rabi = rabi_table(p, 10);
  p.kappa = kappa_crit(1, rabi);
  for (double t : {0.0, 2.0, 10.0, 50.0}) {
    const double g = p.kappa * t / 4;
    EXPECT_NEAR(p_down_fock(t, 1, p, rabi), 0.5 * (1 + std::exp(-g) * (1 + g)), 1e-14);
  }
}

TEST(PDown, RejectsBadInput) {
  const auto p = trap();
  const auto rabi = rabi_table(p, 5);
  EXPECT_THROW(p_down(0.0, std::vector<double>{0.5, 0.4}, p, rabi), ValidationError);
  EXPECT_THROW(p_down(-1.0, point_mass(0), p, rabi), ValidationError);
  EXPECT_THROW(p_down(1.0, point_mass(7), p, rabi), RangeError);
  EXPECT_THROW(p_down_fock(1.0, -1, p, rabi), RangeError);
}

TEST(PDown, BoundedForRandomDraws) {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto base = trap();
  for (int table = 0; table < 20; ++table) {
    auto p = base;
    p.eta = 0.05 + 0.5 * u(rng);
    p.phi = -pi + 2 * pi * u(rng);
    const auto rabi = rabi_table(p, 12);
    const double kc = kappa_crit(0, rabi);
    for (int draw = 0; draw < 5000; ++draw) {
      p.kappa = 10 * std::abs(kc) * u(rng);
      std::vector<double> diag(std::size_t(1 + draw % rabi.size()));
      double sum = 0;
      for (double& x : diag) sum += (x = u(rng));
      for (double& x : diag) x /= sum;
      const double t = 100 * u(rng);
      const double v = p_down(t, diag, p, rabi);
      ASSERT_GE(v, -1e-12);
      ASSERT_LE(v, 1.0 + 1e-12);
    }
  }
}

TEST(PDown, EnvelopeRateIndependentOfFockNumber) {
  for (int n = 0; n <= 3; ++n) {
    auto p = trap();
    const auto rabi = rabi_table(p, 10);
    p.kappa = 0.05 * kappa_crit(n, rabi);
    const double period = 2 * pi / rabi[n];
    std::vector<double> t, v;
    for (int i = 0; i <= 20 * 200; ++i) {
      t.push_back(i * period / 200);
      v.push_back(p_down_fock(t.back(), n, p, rabi));
    }
    const auto fit = fit_extrema_decay(t, v, 0.5);
    ASSERT_TRUE(fit.valid());
    EXPECT_NEAR(fit.rate / (p.kappa / 4), 1.0, 0.01) << "n = " << n;
  }
}

TEST(PDown, CoherentStateMatchesIntegrator) {
  const auto p = trap(1, 0.05);
  const MotionalStateSpec spec = CoherentState{{std::sqrt(3.0), 0.0}};
  const auto run = integrate_spec(spec, p, 40.0, 401);
  const auto rabi = rabi_table(p, int(run.motional0.rows()) - 1 + p.k_sideband);
  const auto diag = diagonal_of(run.motional0);
  const auto& t = run.series.times();
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_NEAR(run.series.values(channels::kPDown)[i], p_down(t[i], diag, p, rabi), 1e-6);
  }
}

TEST(PDown, OverdampedMatchesIntegrator) {
  auto p = trap();
  p.kappa = 2 * kappa_crit(2, rabi_table(p, 10));
  const auto run = integrate_spec(FockState{2}, p, 100 / p.kappa, 201);
  const auto rabi = rabi_table(p, int(run.motional0.rows()) - 1 + p.k_sideband);
  const auto& t = run.series.times();
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_NEAR(run.series.values(channels::kPDown)[i], p_down_fock(t[i], 2, p, rabi), 1e-6);
  }
}

// -- position ----------------------------------------------------------------

TEST(MeanPosition, FockStateHasNoPosition) {
  const auto p = trap(1, 0.2);
  const auto rabi = rabi_table(p, 10);
  const std::vector<Complex> zeros(8, Complex(0.0));
  for (double t : {0.0, 1.0, 10.0}) EXPECT_EQ(mean_position(t, zeros, p, rabi), 0.0);
}

TEST(MeanPosition, InitialValueIsTwiceReAlpha) {
  auto p = trap();
  p.eta = 1e-6;
  for (int k : {1, 2}) {
    p.k_sideband = k;
    const double alpha = 0.8;
    const CMatrix cm = initial_state(CoherentState{{alpha, 0.0}}, 40).matrix;
    const auto rabi = rabi_table(p, 40 + k);
    EXPECT_NEAR(mean_position(0.0, superdiagonal_of(cm), p, rabi), 2 * alpha, 1e-6);
  }
}

TEST(MeanPosition, MatchesIntegratorForFirstAndSecondSideband) {
  for (int k : {1, 2}) {
    const auto p = trap(k, 0.1);
    const MotionalStateSpec spec = CoherentState{{1.0, 0.4}};
    const auto run = integrate_spec(spec, p, 20.0, 2001);
    const auto rabi = rabi_table(p, int(run.motional0.rows()) - 1 + p.k_sideband);
    const auto coh = superdiagonal_of(run.motional0);
    const auto& t = run.series.times();
    double worst = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      worst = std::max(worst, std::abs(run.series.values(channels::kMeanPosition)[i] -
                                       mean_position(t[i], coh, p, rabi)));
    }
    EXPECT_LE(worst, 1e-5) << "k = " << k;
  }
}

// -- energy and asymptotics ---------------------------------------------------

TEST(MeanEnergy, InitialValueAndAsymptote) {
  auto p = trap(1, 0.2);
  const auto rabi = rabi_table(p, 20);
  const std::vector<double> diag{0.2, 0.5, 0.3};
  const double nbar = 0.5 + 0.6;
  EXPECT_DOUBLE_EQ(mean_energy(0.0, diag, p, rabi), nbar + 0.5);
  EXPECT_NEAR(mean_energy(400 / p.kappa, diag, p, rabi), nbar + 1.0, 1e-12);
  EXPECT_NEAR(mean_energy(1e3, point_mass(0), p, rabi), 1.0, 1e-12);
}

TEST(MeanEnergy, ConservedWithoutSidebandExchange) {
  auto p = trap(0, 1e6);
  const auto rabi = rabi_table(p, 10);
  for (double t : {0.0, 1e-7, 0.1, 3.0}) {
    EXPECT_DOUBLE_EQ(mean_energy(t, point_mass(3), p, rabi), 3.5);
  }
}

TEST(MeanEnergy, MatchesIntegrator) {
  const auto p = trap(1, 0.3);
  const auto run = integrate_spec(ThermalState{0.5}, p, 60.0, 301);
  const auto rabi = rabi_table(p, int(run.motional0.rows()) - 1 + p.k_sideband);
  const auto diag = diagonal_of(run.motional0);
  const auto& t = run.series.times();
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_NEAR(run.series.values(channels::kMeanEnergy)[i], mean_energy(t[i], diag, p, rabi),
                1e-6);
  }
}

TEST(AsymptoticMean, Examples) {
  const int d = 12;
  EXPECT_EQ(asymptotic_mean(make_observable(ObservableKind::Position, d), point_mass(2), 1), 0.0);
  EXPECT_DOUBLE_EQ(
      asymptotic_mean(make_observable(ObservableKind::Energy, d), point_mass(2), 1), 3.0);
  EXPECT_DOUBLE_EQ(
      asymptotic_mean(make_observable(ObservableKind::PositionSq, d), point_mass(0), 1), 2.0);
  EXPECT_THROW(asymptotic_mean(make_observable(ObservableKind::Energy, 3), point_mass(2), 1),
               RangeError);
}

TEST(AsymptoticVariance, BothCandidatesReported) {
  const auto v = asymptotic_position_variance(point_mass(0), 1);
  EXPECT_DOUBLE_EQ(v.from_asymptotic_mean, 2.0);
  EXPECT_DOUBLE_EQ(v.printed_factor_four, 4.0);
  const auto t = asymptotic_position_variance(std::vector<double>{0.25, 0.75}, 2);
  EXPECT_DOUBLE_EQ(t.from_asymptotic_mean, 2 * (0.75 + 0.5 + 1.0));
  // equipartition: x^2/4 equals <H>/2 asymptotically on the factor-2 route
  EXPECT_DOUBLE_EQ(v.from_asymptotic_mean / 4, 0.5 * (0.0 + 0.5 + 0.5));
}

// -- equipartition -----------------------------------------------------------

TEST(Equipartition, LongRunReachesEquipartition) {
  const auto p = trap(1, 0.2);
  const auto run = integrate_spec(FockState{0}, p, 80 / p.kappa, 801);
  const auto r = equipartition_check(run.series, 0.1);
  EXPECT_TRUE(r.converged);
  EXPECT_TRUE(r.equipartition);
  EXPECT_LT(r.max_pairwise_deviation, 1e-4);
  EXPECT_NEAR(r.half_energy, 0.5, 1e-4);
}

TEST(Equipartition, UndampedRunDoesNotConverge) {
  const auto p = trap(1, 0.0);
  const auto run = integrate_spec(FockState{0}, p, 100.0, 401);
  const auto r = equipartition_check(run.series, 0.5);
  EXPECT_FALSE(r.converged);
  EXPECT_FALSE(r.equipartition);
}

TEST(Equipartition, NoSidebandExchangeKeepsAllConstant) {
  const auto p = trap(0, 0.5);
  const auto run = integrate_spec(FockState{2}, p, 50.0, 101);
  const auto r = equipartition_check(run.series, 0.2);
  EXPECT_LT(r.drift_from_initial, 1e-8);
  EXPECT_TRUE(r.equipartition);
}

TEST(Equipartition, MissingChannelIsAnError) {
  TimeSeries s(Provenance::Analytic);
  s.add_channel(channels::kMeanEnergy, "hbar*omega");
  s.append(0.0, {0.5});
  EXPECT_THROW(equipartition_check(s, 0.5), ValidationError);
  EXPECT_THROW(equipartition_check(s, 0.0), ValidationError);
}

// -- analytic series ---------------------------------------------------------

TEST(AnalyticSeries, ChannelsAndProvenance) {
  const auto p = trap(1, 0.1);
  const CMatrix cm = initial_state(CoherentState{{0.5, 0.0}}, 33).matrix;
  const auto s = analytic_series(p, rabi_table(p, 33), cm, uniform_times(5.0, 11), true);
  EXPECT_EQ(s.provenance(), Provenance::Analytic);
  EXPECT_EQ(s.size(), 11u);
  EXPECT_DOUBLE_EQ(s.values(channels::kPDown).front(), 1.0);
  EXPECT_NEAR(s.values(channels::kMeanPosition).front(), 1.0, 1e-12);
  EXPECT_NEAR(s.values(channels::kMeanEnergy).front(), 0.75, 1e-12);
}
