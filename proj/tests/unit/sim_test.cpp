#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "biaslens/error.hpp"
#include "biaslens/rng.hpp"
#include "biaslens/sim/destroy.hpp"
#include "biaslens/sim/loss.hpp"
#include "biaslens/sim/model.hpp"
#include "biaslens/sim/sweep.hpp"
#include "biaslens/sim/train.hpp"
#include "biaslens/synth.hpp"

using namespace biaslens;
using namespace biaslens::sim;

namespace {

const LossSpec kCe{};
const LossSpec kGce{LossKind::GeneralizedCrossEntropy, 0.7};

std::vector<double> random_input(Rng& rng, std::size_t d) {
  std::vector<double> x(d);
  for (double& v : x) v = rng.normal();
  return x;
}

void randomize(Model& m, Rng& rng, double scale) {
  for (double& p : m.params()) p = scale * rng.normal();
}

// Linear model whose logit for class c is `scale` times feature c.
Model target_reader(std::size_t d, std::size_t classes, double scale) {
  auto m = Model::linear(d, classes);
  for (std::size_t c = 0; c < classes; ++c) m.params()[c * d + c] = scale;
  return m;
}

bool same_metrics(const RunMetrics& a, const RunMetrics& b) {
  if (a.per_epoch.size() != b.per_epoch.size()) return false;
  for (std::size_t i = 0; i < a.per_epoch.size(); ++i) {
    const auto& x = a.per_epoch[i].weights;
    const auto& y = b.per_epoch[i].weights;
    if (x.ba != y.ba || x.bc != y.bc || x.bn != y.bn) return false;
  }
  return a.final.bc_acc == b.final.bc_acc && a.final.avg_acc == b.final.avg_acc &&
         a.final.worst_acc == b.final.worst_acc;
}

}  // namespace

TEST(Loss, Values) {
  const std::vector<double> certain{0.0, 1.0};
  EXPECT_EQ(ce_loss(certain, 1), 0.0);
  EXPECT_EQ(gce_loss(certain, 1, 0.7), 0.0);
  const std::vector<double> half{0.5, 0.5};
  EXPECT_NEAR(ce_loss(half, 0), std::log(2.0), 1e-15);
  const std::vector<double> p{0.2, 0.3, 0.5};
  EXPECT_NEAR(gce_loss(p, 1, 1.0), 0.7, 1e-15);
  EXPECT_NEAR(gce_loss(p, 2, 0.7), (1.0 - std::pow(0.5, 0.7)) / 0.7, 1e-15);
  const std::vector<double> zero{1.0, 0.0};
  EXPECT_NEAR(ce_loss(zero, 1), -std::log(kProbabilityFloor), 1e-9);
}

TEST(WeightFn, Examples) {
  EXPECT_NEAR(weight_fn(2.0, 1.0), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(weight_fn(1.3, 1.3), 0.5);
  EXPECT_EQ(weight_fn(0.0, 0.4), 0.0);
  EXPECT_EQ(weight_fn(0.0, 0.0), 0.5);
}

TEST(WeightFn, AlwaysInUnitInterval) {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double w = weight_fn(10.0 * rng.uniform(), 10.0 * rng.uniform());
    ASSERT_GE(w, 0.0);
    ASSERT_LE(w, 1.0);
  }
}

TEST(Model, ZeroWeightsGiveUniformOutput) {
  const auto m = Model::linear(6, 4);
  const std::vector<double> x{1, 2, 3, 4, 5, 6};
  for (double p : m.forward(x)) EXPECT_NEAR(p, 0.25, 1e-15);
}

TEST(Model, AlignedInputPicksClass) {
  const auto m = target_reader(5, 5, 3.0);
  const std::vector<double> x{0.1, 0.0, 2.0, 0.2, 0.0};
  const auto probs = m.forward(x);
  EXPECT_EQ(std::max_element(probs.begin(), probs.end()) - probs.begin(), 2);
  EXPECT_NEAR(std::accumulate(probs.begin(), probs.end(), 0.0), 1.0, 1e-12);
}

TEST(Model, DimensionMismatch) {
  const auto m = Model::linear(3, 2);
  const std::vector<double> x{1.0, 2.0};
  try {
    m.forward(x);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(GradCheck, AllModelLossPairs) {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    auto linear = Model::linear(8, 5);
    randomize(linear, rng, 0.5);
    auto mlp = Model::mlp(8, 16, 5, rng);
    const auto x = random_input(rng, 8);
    const std::size_t label = rng.uniform_index(5);
    EXPECT_LT(grad_check(linear, x, label, kCe), 1e-4);
    EXPECT_LT(grad_check(linear, x, label, kGce), 1e-4);
    EXPECT_LT(grad_check(mlp, x, label, kCe), 1e-4);
    EXPECT_LT(grad_check(mlp, x, label, kGce), 1e-4);
  }
}

TEST(GradCheck, RejectsStepOutsideRange) {
  const auto m = Model::linear(2, 2);
  const std::vector<double> x{1.0, 1.0};
  EXPECT_THROW(grad_check(m, x, 0, kCe, 1e-2), Error);
  EXPECT_THROW(grad_check(m, x, 0, kCe, 1e-9), Error);
}

TEST(Destroy, BlockPermuteKeepsColumnMultisets) {
  Rng data(2);
  FeatureBatch batch{16, 6, {}};
  for (int i = 0; i < 96; ++i) batch.values.push_back(data.normal());
  const auto before = batch.values;
  Rng rng(3);
  block_permute(batch, 0, 3, rng);
  for (std::size_t c = 0; c < 6; ++c) {
    std::vector<double> a;
    std::vector<double> b;
    for (std::size_t r = 0; r < 16; ++r) {
      a.push_back(before[r * 6 + c]);
      b.push_back(batch.values[r * 6 + c]);
    }
    if (c >= 3) {
      EXPECT_EQ(a, b);
    } else {
      EXPECT_NE(a, b);
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      EXPECT_EQ(a, b);
    }
  }
  EXPECT_THROW(block_permute(batch, 2, 7, rng), Error);
}

TEST(Destroy, PatchShuffle) {
  Image img{4, 4, 1, {}};
  for (int i = 0; i < 16; ++i) img.pixels.push_back(i);
  Image same = img;
  Rng rng(5);
  patch_shuffle(same, 4, rng);
  EXPECT_EQ(same.pixels, img.pixels);
  Image shuffled = img;
  patch_shuffle(shuffled, 2, rng);
  auto sorted = shuffled.pixels;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, img.pixels);
  EXPECT_THROW(patch_shuffle(shuffled, 3, rng), Error);
}

TEST(Destroy, PixelShuffleAndOcclusion) {
  Image img{6, 6, 3, {}};
  for (int i = 0; i < 108; ++i) img.pixels.push_back(i + 1);
  Image shuffled = img;
  Rng rng(6);
  pixel_shuffle(shuffled, rng);
  auto sorted = shuffled.pixels;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, img.pixels);

  Image occluded = img;
  center_occlusion(occluded, 2);
  for (std::size_t y = 0; y < 6; ++y) {
    for (std::size_t x = 0; x < 6; ++x) {
      const bool inside = y >= 2 && y < 4 && x >= 2 && x < 4;
      EXPECT_EQ(occluded.at(y, x, 1) == 0.0, inside);
    }
  }
  EXPECT_THROW(center_occlusion(occluded, 7), Error);
}

TEST(Destroy, WordShufflePreservesTokens) {
  std::vector<std::string> tokens{"the", "cat", "sat", "on", "the", "mat"};
  auto shuffled = tokens;
  Rng rng(7);
  word_shuffle(shuffled, rng);
  std::sort(tokens.begin(), tokens.end());
  std::sort(shuffled.begin(), shuffled.end());
  EXPECT_EQ(tokens, shuffled);
}

TEST(Destroy, Names) {
  for (auto k : {DestroyKind::BlockPermute, DestroyKind::PatchShuffle, DestroyKind::PixelShuffle,
                 DestroyKind::CenterOcclusion, DestroyKind::WordShuffle}) {
    EXPECT_EQ(parse_destroy(destroy_name(k)), k);
  }
}

TEST(Evaluate, PerfectAndConstantClassifiers) {
  FeatureLayout layout;
  layout.noise_target = 0.0;
  layout.noise_spurious = 0.0;
  layout.allow_hard_spurious = true;
  const auto config = preset(Preset::HMLP);
  const auto test = balanced_test_split(config, layout, 5000, 1);
  const auto perfect = evaluate(target_reader(20, 10, 10.0), test, config);
  EXPECT_EQ(perfect.avg_acc, 1.0);
  EXPECT_EQ(perfect.worst_acc, 1.0);
  EXPECT_EQ(perfect.bc_acc, 1.0);

  auto constant = Model::linear(20, 10);
  constant.params()[200] = 1.0;
  const auto c = evaluate(constant, test, config);
  EXPECT_NEAR(c.avg_acc, 0.1, 1e-12);
  EXPECT_EQ(c.worst_acc, 0.0);
  EXPECT_LE(c.worst_acc, c.avg_acc);
}

TEST(Evaluate, BcAccuracyAbsentWithoutBiasedFeatures) {
  const auto config = preset(Preset::Unbiased);
  const auto test = balanced_test_split(config, FeatureLayout{}, 500, 2);
  EXPECT_FALSE(evaluate(Model::linear(20, 10), test, config).bc_acc.has_value());
}

TEST(Train, Reproducible) {
  const auto ds = synthesize(preset(Preset::HMLP), 2000, FeatureLayout{}, 4);
  TrainConfig cfg;
  cfg.method = Method::DbamDid;
  cfg.epochs = 3;
  cfg.test_size = 1000;
  cfg.seed = 9;
  EXPECT_TRUE(same_metrics(train(ds, cfg).metrics, train(ds, cfg).metrics));
  cfg.model = ModelKind::Mlp;
  cfg.biased_loss = kGce;
  EXPECT_TRUE(same_metrics(train(ds, cfg).metrics, train(ds, cfg).metrics));
}

TEST(Train, WeightsStayInUnitInterval) {
  const auto ds = synthesize(preset(Preset::LMLPPrime), 3000, FeatureLayout{}, 5);
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.test_size = 1000;
  const auto r = train(ds, cfg);
  ASSERT_EQ(r.metrics.per_epoch.size(), 4u);
  ASSERT_TRUE(r.biased.has_value());
  for (const auto& e : r.metrics.per_epoch) {
    for (const auto& w : {e.weights.ba, e.weights.bc, e.weights.bn}) {
      ASSERT_TRUE(w.has_value());
      EXPECT_GE(*w, 0.0);
      EXPECT_LE(*w, 1.0);
    }
  }
  const auto& f = r.metrics.final;
  EXPECT_GE(f.avg_acc, 0.0);
  EXPECT_LE(f.avg_acc, 1.0);
  EXPECT_LE(f.worst_acc, f.avg_acc);
}

TEST(Train, ErmHasNoBiasedModelOrWeights) {
  const auto ds = synthesize(preset(Preset::HMHP), 1000, FeatureLayout{}, 6);
  TrainConfig cfg;
  cfg.method = Method::Erm;
  cfg.epochs = 2;
  cfg.test_size = 500;
  const auto r = train(ds, cfg);
  EXPECT_FALSE(r.biased.has_value());
  for (const auto& e : r.metrics.per_epoch) EXPECT_FALSE(e.weights.ba.has_value());
}

TEST(Train, DivergenceIsReported) {
  auto ds = synthesize(preset(Preset::HMHP), 500, FeatureLayout{}, 6);
  ds.features[3] = std::nan("");
  TrainConfig cfg;
  cfg.method = Method::Erm;
  cfg.batch_size = 500;
  cfg.test_size = 100;
  try {
    train(ds, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteLoss);
  }
}

TEST(Train, ConfigValidation) {
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = TrainConfig{};
  cfg.biased_loss.kind = LossKind::GeneralizedCrossEntropy;
  cfg.biased_loss.q = 1.5;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = TrainConfig{};
  cfg.method = Method::DbamDid;
  cfg.destruction = DestroyKind::PatchShuffle;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Sweep, PrevalenceAxisConfigs) {
  SweepBase base;
  const auto zero = sweep_config(SweepAxis::Prevalence, 0, base);
  EXPECT_TRUE(zero.biased.empty());
  const auto three = sweep_config(SweepAxis::Prevalence, 3, base);
  EXPECT_EQ(three.biased.size(), 3u);
  EXPECT_EQ(three.biased[0].corr, 0.98);
  EXPECT_THROW(sweep_config(SweepAxis::Prevalence, 2.5, base), Error);
  const auto mag = sweep_config(SweepAxis::Magnitude, 0.3, base);
  EXPECT_EQ(mag.biased.size(), 10u);
  EXPECT_EQ(mag.biased[4].corr, 0.3);
}

TEST(Sweep, RowsOrderedAndThreadIndependent) {
  SweepBase base;
  base.n_train = 600;
  base.train.epochs = 2;
  base.train.test_size = 400;
  const std::vector<double> values{4, 1};
  const std::vector<std::uint64_t> seeds{3, 0};
  const auto serial = sweep(SweepAxis::Prevalence, values, base, seeds, 1);
  const auto parallel = sweep(SweepAxis::Prevalence, values, base, seeds, 3);
  ASSERT_EQ(serial.size(), 4u);
  EXPECT_EQ(serial[0].value, 4);
  EXPECT_EQ(serial[0].seed, 3u);
  EXPECT_EQ(serial[1].seed, 0u);
  EXPECT_EQ(serial[2].value, 1);
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_TRUE(same_metrics(serial[i].metrics, parallel[i].metrics));
  }
  EXPECT_THROW(sweep(SweepAxis::Prevalence, values, base, std::vector<std::uint64_t>{}, 1), Error);
}

TEST(Sweep, InfeasiblePointPropagates) {
  SweepBase base;
  const std::vector<double> values{11};
  const std::vector<std::uint64_t> seeds{0};
  EXPECT_THROW(sweep(SweepAxis::Prevalence, values, base, seeds, 1), Error);
}
