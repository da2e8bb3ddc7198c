#include "biaslens/sim/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "biaslens/error.hpp"
#include "biaslens/rng.hpp"

namespace biaslens::sim {

namespace {

constexpr std::uint64_t kInitStream = 11;
constexpr std::uint64_t kShuffleStream = 12;
constexpr std::uint64_t kTestStream = 13;

struct GroupAccumulator {
  double sum[3] = {0.0, 0.0, 0.0};
  std::size_t count[3] = {0, 0, 0};

  void add(Tag tag, double value) {
    const auto i = static_cast<std::size_t>(tag);
    sum[i] += value;
    ++count[i];
  }

  GroupMeans means() const {
    auto mean = [&](Tag tag) -> std::optional<double> {
      const auto i = static_cast<std::size_t>(tag);
      if (count[i] == 0) return std::nullopt;
      return sum[i] / static_cast<double>(count[i]);
    };
    return {mean(Tag::BA), mean(Tag::BC), mean(Tag::BN)};
  }
};

Model make_model(const TrainConfig& cfg, std::size_t input_dim, std::size_t n_classes, Rng& rng) {
  if (cfg.model == ModelKind::Linear) return Model::linear(input_dim, n_classes);
  return Model::mlp(input_dim, cfg.hidden_dim, n_classes, rng);
}

void sgd_step(Model& model, std::span<const double> grad, double lr) {
  auto params = model.params();
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grad[i];
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

std::string_view method_name(Method method) {
  switch (method) {
    case Method::Erm: return "erm";
    case Method::Dbam: return "dbam";
    case Method::DbamDid: return "dbam-did";
  }
  return "?";
}

std::optional<Method> parse_method(std::string_view name) {
  if (name == "erm") return Method::Erm;
  if (name == "dbam") return Method::Dbam;
  if (name == "dbam-did" || name == "dbam_did") return Method::DbamDid;
  return std::nullopt;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidParams, "learning_rate must be > 0");
  if (epochs == 0 || batch_size == 0) {
    throw Error(ErrorCode::InvalidParams, "epochs and batch_size must be positive");
  }
  if (biased_loss.kind == LossKind::GeneralizedCrossEntropy &&
      !(biased_loss.q > 0.0 && biased_loss.q <= 1.0)) {
    throw Error(ErrorCode::InvalidParams, "GCE q must lie in (0, 1]");
  }
  if (model == ModelKind::Mlp && hidden_dim == 0) {
    throw Error(ErrorCode::InvalidParams, "hidden_dim must be positive");
  }
  if (method == Method::DbamDid && destruction != DestroyKind::BlockPermute) {
    throw Error(ErrorCode::InvalidParams,
                "vector features support only the block-permute destruction");
  }
  if (test_size == 0) throw Error(ErrorCode::InvalidParams, "test_size must be positive");
}

LabeledDataset balanced_test_split(const BiasConfig& config, const FeatureLayout& layout,
                                   std::size_t n, std::uint64_t seed) {
  const auto labels = sample_labels(independent_joint(config), n, mix_seed(seed, 0));
  auto ds = generate_features(labels, config, layout, mix_seed(seed, 1));
  ds.seed = seed;
  return ds;
}

FinalMetrics evaluate(const Model& model, const LabeledDataset& dataset, const BiasConfig& bias) {
  const std::size_t nt = bias.n_target;
  const std::size_t ns = bias.n_spurious;
  std::vector<std::size_t> cell_total(nt * ns, 0);
  std::vector<std::size_t> cell_correct(nt * ns, 0);
  std::size_t bc_total = 0;
  std::size_t bc_correct = 0;

  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Record& r = dataset.records[i];
    const bool correct = argmax(model.forward(dataset.row(i))) == r.target;
    const std::size_t cell = r.target * ns + r.spurious;
    ++cell_total[cell];
    if (correct) ++cell_correct[cell];
    if (categorize(r.target, r.spurious, bias) == Tag::BC) {
      ++bc_total;
      if (correct) ++bc_correct;
    }
  }

  FinalMetrics m;
  if (bc_total > 0) m.bc_acc = static_cast<double>(bc_correct) / static_cast<double>(bc_total);
  double acc_sum = 0.0;
  std::size_t groups = 0;
  m.worst_acc = 1.0;
  for (std::size_t c = 0; c < cell_total.size(); ++c) {
    if (cell_total[c] == 0) {
      ++m.empty_groups_skipped;
      continue;
    }
    const double acc = static_cast<double>(cell_correct[c]) / static_cast<double>(cell_total[c]);
    acc_sum += acc;
    ++groups;
    m.worst_acc = std::min(m.worst_acc, acc);
  }
  if (groups == 0) throw Error(ErrorCode::InvalidParams, "evaluation split is empty");
  m.avg_acc = acc_sum / static_cast<double>(groups);
  return m;
}

GroupMeans group_mean_loss(const Model& model, const LabeledDataset& dataset, const LossSpec& loss) {
  GroupAccumulator acc;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Record& r = dataset.records[i];
    acc.add(r.tag, loss_value(loss, model.forward(dataset.row(i)), r.target));
  }
  return acc.means();
}

TrainResult train(const LabeledDataset& dataset, const TrainConfig& cfg) {
  cfg.validate();
  if (dataset.size() == 0) throw Error(ErrorCode::InvalidParams, "training set is empty");

  const std::size_t dim = dataset.feature_dim();
  const std::size_t n_classes = dataset.config.n_target;
  const std::size_t target_dim = dataset.layout.target_dim;
  const bool auxiliary = cfg.method != Method::Erm;
  const bool destroy = cfg.method == Method::DbamDid;
  const LossSpec ce{};

  Rng init_rng(mix_seed(cfg.seed, kInitStream));
  Model debiased = make_model(cfg, dim, n_classes, init_rng);
  std::optional<Model> biased;
  if (auxiliary) biased = make_model(cfg, dim, n_classes, init_rng);

  Rng rng(mix_seed(cfg.seed, kShuffleStream));
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<double> grad_d(debiased.params().size());
  std::vector<double> grad_b(biased ? biased->params().size() : 0);
  FeatureBatch raw;
  FeatureBatch destroyed;
  RunMetrics metrics;
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    GroupAccumulator weights;

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++step) {
      const std::size_t rows = std::min(cfg.batch_size, order.size() - start);
      const double scale = 1.0 / static_cast<double>(rows);
      raw.rows = rows;
      raw.cols = dim;
      raw.values.resize(rows * dim);
      for (std::size_t r = 0; r < rows; ++r) {
        const auto x = dataset.row(order[start + r]);
        std::copy(x.begin(), x.end(), raw.values.begin() + static_cast<std::ptrdiff_t>(r * dim));
      }
      const FeatureBatch* biased_input = &raw;
      if (destroy) {
        destroyed = raw;
        block_permute(destroyed, 0, target_dim, rng);
        biased_input = &destroyed;
      }

      std::fill(grad_d.begin(), grad_d.end(), 0.0);
      std::fill(grad_b.begin(), grad_b.end(), 0.0);
      for (std::size_t r = 0; r < rows; ++r) {
        const Record& rec = dataset.records[order[start + r]];
        const std::span<const double> x(raw.values.data() + r * dim, dim);
        double w = 1.0;
        if (auxiliary) {
          const std::span<const double> xb(biased_input->values.data() + r * dim, dim);
          const double loss_b = ce_loss(biased->forward(xb), rec.target);
          const double loss_d = ce_loss(debiased.forward(x), rec.target);
          if (!std::isfinite(loss_b) || !std::isfinite(loss_d)) {
            throw Error(ErrorCode::NonFiniteLoss, "at step " + std::to_string(step));
          }
          w = weight_fn(loss_b, loss_d);
          weights.add(rec.tag, w);
          biased->accumulate_gradient(xb, rec.target, cfg.biased_loss, scale, grad_b);
        }
        const double loss = debiased.accumulate_gradient(x, rec.target, ce, w * scale, grad_d);
        if (!std::isfinite(loss)) {
          throw Error(ErrorCode::NonFiniteLoss, "at step " + std::to_string(step));
        }
      }
      sgd_step(debiased, grad_d, cfg.learning_rate);
      if (biased) sgd_step(*biased, grad_b, cfg.learning_rate);
      if (!debiased.all_finite() || (biased && !biased->all_finite())) {
        throw Error(ErrorCode::NonFiniteLoss, "parameters diverged at step " + std::to_string(step));
      }
    }
    metrics.per_epoch.push_back({epoch, auxiliary ? weights.means() : GroupMeans{}});
  }

  const auto test = balanced_test_split(dataset.config, dataset.layout, cfg.test_size,
                                        mix_seed(cfg.seed, kTestStream));
  metrics.final = evaluate(debiased, test, dataset.config);
  return {std::move(biased), std::move(debiased), std::move(metrics)};
}

TrainResult simulate(const BiasConfig& config, std::size_t n_train, const FeatureLayout& layout,
                     const TrainConfig& cfg) {
  return train(synthesize(config, n_train, layout, cfg.seed), cfg);
}

}  // namespace biaslens::sim
