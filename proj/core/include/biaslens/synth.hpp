#pragma once

// Biased joint construction, preset configurations, label sampling and
// synthetic feature realization.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "biaslens/dist.hpp"

namespace biaslens {

// One element of the biased feature set B together with its correlated class
// g(spurious) and corr = P(y^t = g(s) | y^s = s).
struct BiasedFeature {
  std::size_t spurious = 0;
  std::size_t target = 0;
  double corr = 0.0;
};

struct BiasConfig {
  std::size_t n_target = 10;
  std::size_t n_spurious = 10;
  std::vector<double> target_marginal;    // empty: uniform
  std::vector<double> spurious_marginal;  // empty: uniform
  std::vector<BiasedFeature> biased;

  CategoricalDist target_dist() const;
  CategoricalDist spurious_dist() const;
  bool is_biased(std::size_t spurious) const;
  // g(spurious) for members of B.
  std::optional<std::size_t> correlated_class(std::size_t spurious) const;
  // Throws InfeasibleConfig / InvalidParams on structural problems (range,
  // injectivity of g, corr outside [0,1]).
  void validate() const;
};

enum class Preset { LMLP, LMLPPrime, HMLP, HMHP, Unbiased };

// Accepts "LMLP", "LMLP'", "HMLP", "HMHP", "Unbiased" case-insensitively;
// "lmlp-prime" / "lmlp_prime" also name LMLP'. Throws UnknownPreset.
Preset parse_preset(std::string_view name);
std::string_view preset_name(Preset preset);

// Ten target classes, uniform marginals, g = identity on the first |B|
// spurious values.
BiasConfig preset(Preset preset);
BiasConfig preset(std::string_view name);

// Uniform ten-class configuration with the first `n_biased` spurious values
// biased at `corr`; the sweep axes interpolate through this family.
BiasConfig uniform_config(std::size_t n_biased, double corr, std::size_t n_classes = 10);

// Biased columns: P(s) corr on g(s) and P(s)(1-corr)/(|y^t|-1) elsewhere.
// Non-biased columns share the residual target mass in proportion to their
// spurious marginal (with a uniform marginal this is the residual divided by
// |y^s| - |B|). Throws InfeasibleConfig naming the first negative cell.
JointDist build_joint(const BiasConfig& config);

// Product of the configured marginals.
JointDist independent_joint(const BiasConfig& config);

struct LabelPair {
  std::size_t target = 0;
  std::size_t spurious = 0;
  friend bool operator==(const LabelPair&, const LabelPair&) = default;
};

std::vector<LabelPair> sample_labels(const JointDist& joint, std::size_t n, std::uint64_t seed);

// Counts / n.
JointDist empirical_joint(std::span<const LabelPair> labels, std::size_t n_target,
                          std::size_t n_spurious);

enum class Tag { BA, BC, BN };
std::string_view tag_name(Tag tag);
std::optional<Tag> parse_tag(std::string_view name);

Tag categorize(std::size_t target, std::size_t spurious, const BiasConfig& config);

struct FeatureLayout {
  std::size_t target_dim = 10;
  std::size_t spurious_dim = 10;
  double noise_target = 1.0;
  double noise_spurious = 0.2;
  // The spurious block must be easier (less noisy) than the target block
  // unless this is set.
  bool allow_hard_spurious = false;

  std::size_t feature_dim() const { return target_dim + spurious_dim; }
};

struct Record {
  std::size_t target = 0;
  std::size_t spurious = 0;
  Tag tag = Tag::BN;
};

struct LabeledDataset {
  BiasConfig config;
  FeatureLayout layout;
  std::uint64_t seed = 0;
  std::vector<Record> records;
  std::vector<double> features;  // row-major, records.size() x feature_dim

  std::size_t size() const { return records.size(); }
  std::size_t feature_dim() const { return layout.feature_dim(); }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(features).subspan(i * feature_dim(), feature_dim());
  }
};

// features = [onehot(target) + noise_target * N(0, I) | onehot(spurious) +
// noise_spurious * N(0, I)]. Throws InvalidLayout.
LabeledDataset generate_features(std::span<const LabelPair> labels, const BiasConfig& config,
                                 const FeatureLayout& layout, std::uint64_t seed);

// Labels from build_joint(config) followed by generate_features, each on its
// own stream derived from `seed`.
LabeledDataset synthesize(const BiasConfig& config, std::size_t n, const FeatureLayout& layout,
                          std::uint64_t seed);

}  // namespace biaslens
