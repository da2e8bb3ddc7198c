#pragma once

// Desk-scale debiasing with a biased auxiliary model: a biased model M_b and a
// debiased model M_d are updated on every mini-batch; M_d's per-sample cross
// entropy is scaled by W = CE_b / (CE_b + CE_d). The destruction variant feeds
// M_b inputs whose target block has been permuted across the batch.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "biaslens/sim/destroy.hpp"
#include "biaslens/sim/loss.hpp"
#include "biaslens/sim/model.hpp"
#include "biaslens/synth.hpp"

namespace biaslens::sim {

enum class Method { Erm, Dbam, DbamDid };

std::string_view method_name(Method method);
std::optional<Method> parse_method(std::string_view name);

struct TrainConfig {
  Method method = Method::Dbam;
  ModelKind model = ModelKind::Linear;
  std::size_t hidden_dim = 32;
  std::size_t epochs = 20;
  std::size_t batch_size = 64;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
  LossSpec biased_loss{};
  DestroyKind destruction = DestroyKind::BlockPermute;
  std::size_t test_size = 10000;

  void validate() const;
};

// Mean value per sample category; nullopt for categories with no samples.
struct GroupMeans {
  std::optional<double> ba;
  std::optional<double> bc;
  std::optional<double> bn;
};

struct EpochWeights {
  std::size_t epoch = 0;
  GroupMeans weights;
};

struct FinalMetrics {
  std::optional<double> bc_acc;  // nullopt when the split has no BC samples
  double avg_acc = 0.0;          // mean accuracy over nonempty (target, spurious) cells
  double worst_acc = 0.0;        // min accuracy over the same cells
  std::size_t empty_groups_skipped = 0;
};

struct RunMetrics {
  std::vector<EpochWeights> per_epoch;  // empty weights under ERM
  FinalMetrics final;
};

struct TrainResult {
  std::optional<Model> biased;
  Model debiased;
  RunMetrics metrics;
};

// Samples drawn from the product of the configured marginals, tagged with the
// configuration's B and g.
LabeledDataset balanced_test_split(const BiasConfig& config, const FeatureLayout& layout,
                                   std::size_t n, std::uint64_t seed);

FinalMetrics evaluate(const Model& model, const LabeledDataset& dataset, const BiasConfig& bias);

GroupMeans group_mean_loss(const Model& model, const LabeledDataset& dataset, const LossSpec& loss);

// Trains on `dataset` and evaluates M_d on a balanced split of cfg.test_size
// samples drawn with a seed held out from cfg.seed. Throws NonFiniteLoss.
TrainResult train(const LabeledDataset& dataset, const TrainConfig& cfg);

// synthesize(config, n_train, layout, cfg.seed) followed by train.
TrainResult simulate(const BiasConfig& config, std::size_t n_train, const FeatureLayout& layout,
                     const TrainConfig& cfg);

}  // namespace biaslens::sim
