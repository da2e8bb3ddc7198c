#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "biaslens/error.hpp"
#include "biaslens/metrics.hpp"
#include "biaslens/rng.hpp"
#include "biaslens/synth.hpp"
#include "biaslens/theory.hpp"
#include "oracle.hpp"

using namespace biaslens;

namespace {

const JointDist kIndependent = JointDist::from_rows({{0.25, 0.25}, {0.25, 0.25}});

JointDist binary(double p_t, double p_s, double tau) {
  return theory::BinaryBiasWorld{p_t, p_s, tau}.joint();
}

oracle::Table as_table(const JointDist& joint) {
  oracle::Table t(joint.n_target(), std::vector<long double>(joint.n_spurious()));
  for (std::size_t y = 0; y < joint.n_target(); ++y) {
    for (std::size_t s = 0; s < joint.n_spurious(); ++s) t[y][s] = joint.at(y, s);
  }
  return t;
}

}  // namespace

TEST(BiasMagnitude, IndependentIsZero) {
  const auto joint = build_joint(preset(Preset::Unbiased));
  for (std::size_t s = 0; s < 10; ++s) EXPECT_NEAR(bias_magnitude(joint, s), 0.0, 1e-15);
  EXPECT_EQ(bias_magnitude(kIndependent, 1), 0.0);
}

TEST(BiasMagnitude, MatchedBinaryEqualsClosedForm) {
  const auto world = theory::BinaryBiasWorld::matched(0.5, 0.96);
  EXPECT_NEAR(world.tau, 0.98, 1e-15);
  EXPECT_NEAR(bias_magnitude(world.joint(), 0), theory::t_of_p(0.5, 0.96), 1e-12);
}

TEST(BiasMagnitude, SparseFeatureApproachesLimit) {
  const auto world = theory::BinaryBiasWorld::matched(0.001, 0.5);
  const double m = bias_magnitude(world.joint(), 0);
  EXPECT_NEAR(m, 0.686238, 1e-6);
  EXPECT_LT(std::log(2.0) - m, 0.01);
}

TEST(BiasMagnitude, MatchesOracleOnPresets) {
  for (Preset p : {Preset::LMLP, Preset::LMLPPrime, Preset::HMLP, Preset::HMHP, Preset::Unbiased}) {
    const auto joint = build_joint(preset(p));
    const auto table = as_table(joint);
    for (std::size_t s = 0; s < 10; ++s) {
      EXPECT_NEAR(bias_magnitude(joint, s), static_cast<double>(oracle::magnitude(table, s)), 1e-12)
          << preset_name(p) << " s=" << s;
    }
  }
}

TEST(BiasMagnitude, ZeroMassColumnThrows) {
  const auto joint = JointDist::from_rows({{0.5, 0.0}, {0.5, 0.0}});
  EXPECT_THROW(bias_magnitude(joint, 1), Error);
}

TEST(SimplifiedMagnitude, Examples) {
  EXPECT_NEAR(simplified_magnitude(binary(0.1, 0.1, 0.98), 0), 0.88, 1e-12);
  EXPECT_NEAR(simplified_magnitude(kIndependent, 0), 0.0, 1e-15);
  EXPECT_NEAR(simplified_magnitude(binary(0.5, 0.5, 0.5), 0), 0.0, 1e-15);
}

TEST(SimplifiedMagnitude, RejectsLargerTables) {
  try {
    simplified_magnitude(build_joint(preset(Preset::HMHP)), 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotBinary);
  }
}

TEST(PhiRatio, Examples) {
  EXPECT_NEAR(phi_ratio(binary(0.5, 0.5, 1.0), 0), 1.0, 1e-12);
  EXPECT_NEAR(phi_ratio(binary(0.5, 0.5, 0.98), 0), 0.96, 1e-12);
  EXPECT_NEAR(phi_ratio(kIndependent, 0), 0.0, 1e-15);
}

TEST(PhiRatio, AgreesWithBinaryWorld) {
  Rng rng(3);
  int checked = 0;
  while (checked < 300) {
    theory::BinaryBiasWorld w{0.05 + 0.9 * rng.uniform(), 0.05 + 0.9 * rng.uniform(), rng.uniform()};
    if (!w.feasible() || !w.positively_correlated()) continue;
    const auto joint = w.joint();
    EXPECT_NEAR(phi_ratio(joint, 0), w.phi_plus(), 1e-9);
    EXPECT_NEAR(phi_ratio(joint, 1), w.phi_minus(), 1e-9);
    ++checked;
  }
}

TEST(BiasedFeatureSet, Independent) {
  EXPECT_TRUE(biased_feature_set(kIndependent, 0.1).empty());
}

TEST(BiasedFeatureSet, HmhpHasAllTen) {
  EXPECT_EQ(biased_feature_set(build_joint(preset(Preset::HMHP)), 0.1).size(), 10u);
}

// Under the residual construction the nine non-biased HMLP columns carry
// magnitude 0.2878, so they clear 0.1 too; only a higher threshold isolates
// the configured feature.
TEST(BiasedFeatureSet, HmlpNonBiasedColumnsExceedDefaultThreshold) {
  const auto joint = build_joint(preset(Preset::HMLP));
  const auto table = as_table(joint);
  EXPECT_NEAR(bias_magnitude(joint, 1), 0.2878, 1e-4);
  EXPECT_NEAR(bias_magnitude(joint, 1), static_cast<double>(oracle::magnitude(table, 1)), 1e-12);
  EXPECT_EQ(biased_feature_set(joint, 0.1).size(), 10u);
  EXPECT_EQ(biased_feature_set(joint, 0.5), (std::vector<std::size_t>{0}));
}

TEST(BiasedFeatureSet, SupportMismatchCountsAsBiased) {
  const auto joint = JointDist::from_rows({{0.5, 0.0}, {0.25, 0.25}});
  EXPECT_EQ(biased_feature_set(joint, 0.1), (std::vector<std::size_t>{1}));
  EXPECT_EQ(biased_feature_set(joint, 0.05), (std::vector<std::size_t>{0, 1}));
}

TEST(BiasPrevalence, Presets) {
  EXPECT_NEAR(bias_prevalence(build_joint(preset(Preset::HMHP)), 0.1), 1.0, 1e-12);
  EXPECT_NEAR(bias_prevalence(build_joint(preset(Preset::HMLP)), 0.5), 0.1, 1e-12);
  EXPECT_EQ(bias_prevalence(kIndependent, 0.01), 0.0);
}

TEST(BiasPrevalence, MatchesOracle) {
  for (std::size_t k = 0; k <= 10; ++k) {
    for (double corr : {0.1, 0.3, 0.5, 0.7, 0.98}) {
      const auto table = oracle::uniform_biased(10, k, corr);
      const auto joint = build_joint(uniform_config(k, corr));
      for (double theta : {0.05, 0.1, 0.3, 1.0}) {
        EXPECT_NEAR(bias_prevalence(joint, theta), static_cast<double>(oracle::prevalence(table, theta)), 1e-12)
            << "k=" << k << " corr=" << corr << " theta=" << theta;
      }
    }
  }
}

TEST(CorrMeasures, IndependentUniform) {
  EXPECT_NEAR(corr_tcp(kIndependent, 0, 1), 0.5, 1e-15);
  EXPECT_NEAR(corr_scp(kIndependent, 1, 0), 0.5, 1e-15);
  EXPECT_NEAR(corr_sce(kIndependent), std::log(2.0), 1e-15);
}

TEST(CorrMeasures, HmhpDiagonal) {
  const auto joint = build_joint(preset(Preset::HMHP));
  for (std::size_t s = 0; s < 10; ++s) EXPECT_NEAR(corr_scp(joint, s, s), 0.98, 1e-12);
  EXPECT_EQ(corr_sce(JointDist::from_rows({{0.5, 0.0}, {0.0, 0.5}})), 0.0);
}

TEST(CorrMeasures, DirectionsDiffer) {
  const auto joint = JointDist::from_rows({{0.4, 0.1}, {0.2, 0.3}});
  EXPECT_NEAR(corr_scp(joint, 0, 0), 0.4 / 0.6, 1e-12);
  EXPECT_NEAR(corr_tcp(joint, 0, 0), 0.4 / 0.5, 1e-12);
}

TEST(CorrelatedClassMap, Examples) {
  const auto hmhp = correlated_class_map(build_joint(preset(Preset::HMHP)));
  for (std::size_t s = 0; s < 10; ++s) EXPECT_EQ(hmhp[s], s);
  const auto tie = correlated_class_map(kIndependent);
  EXPECT_EQ(tie[0], 0u);
  EXPECT_EQ(tie[1], 0u);
  const auto g = correlated_class_map(JointDist::from_rows({{0.1, 0.4}, {0.3, 0.2}}));
  EXPECT_EQ(g[0], 1u);
  EXPECT_EQ(g[1], 0u);
}

TEST(Analyze, Presets) {
  const auto hmhp = analyze(build_joint(preset(Preset::HMHP)), 0.1);
  EXPECT_NEAR(hmhp.prevalence, 1.0, 1e-12);
  EXPECT_EQ(hmhp.biased_set.size(), 10u);
  const auto unbiased = analyze(build_joint(preset(Preset::Unbiased)), 0.1);
  EXPECT_EQ(unbiased.prevalence, 0.0);
  EXPECT_TRUE(unbiased.biased_set.empty());
  const auto hmlp = analyze(build_joint(preset(Preset::HMLP)), 0.5);
  EXPECT_NEAR(hmlp.prevalence, 0.1, 1e-12);
  EXPECT_EQ(hmlp.biased_set.size(), 1u);
}

TEST(Analyze, ReportInvariants) {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t nt = 2 + rng.uniform_index(4);
    const std::size_t ns = 2 + rng.uniform_index(4);
    std::vector<double> cells(nt * ns);
    double sum = 0.0;
    for (double& c : cells) {
      c = rng.uniform() + 1e-3;
      sum += c;
    }
    for (double& c : cells) c /= sum;
    const double theta = 0.2 * rng.uniform();
    const auto report = analyze(JointDist(nt, ns, cells), theta);
    EXPECT_TRUE(report_is_consistent(report));
    double expected = 0.0;
    for (std::size_t s = 0; s < ns; ++s) {
      ASSERT_TRUE(report.features[s].magnitude.has_value());
      EXPECT_GE(*report.features[s].magnitude, 0.0);
      if (*report.features[s].magnitude > theta) expected += report.spurious_marginal[s];
    }
    EXPECT_NEAR(report.prevalence, expected, 1e-12);
    EXPECT_EQ(report.phi.has_value(), nt == 2 && ns == 2);
  }
}
