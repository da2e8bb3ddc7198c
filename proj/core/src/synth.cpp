#include "biaslens/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <string>

#include "biaslens/error.hpp"
#include "biaslens/rng.hpp"

namespace biaslens {

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string cell_name(std::size_t t, std::size_t s) {
  return "(target " + std::to_string(t) + ", spurious " + std::to_string(s) + ")";
}

}  // namespace

CategoricalDist BiasConfig::target_dist() const {
  if (target_marginal.empty()) return CategoricalDist::uniform(n_target);
  if (target_marginal.size() != n_target) {
    throw Error(ErrorCode::InvalidParams, "target_marginal length != n_target");
  }
  return CategoricalDist(target_marginal, 1e-9);
}

CategoricalDist BiasConfig::spurious_dist() const {
  if (spurious_marginal.empty()) return CategoricalDist::uniform(n_spurious);
  if (spurious_marginal.size() != n_spurious) {
    throw Error(ErrorCode::InvalidParams, "spurious_marginal length != n_spurious");
  }
  return CategoricalDist(spurious_marginal, 1e-9);
}

bool BiasConfig::is_biased(std::size_t spurious) const {
  return correlated_class(spurious).has_value();
}

std::optional<std::size_t> BiasConfig::correlated_class(std::size_t spurious) const {
  for (const auto& f : biased) {
    if (f.spurious == spurious) return f.target;
  }
  return std::nullopt;
}

void BiasConfig::validate() const {
  if (n_target < 2 || n_spurious < 2) {
    throw Error(ErrorCode::InvalidParams, "need at least 2 target and 2 spurious values");
  }
  if (biased.size() > n_spurious || biased.size() > n_target) {
    throw Error(ErrorCode::InfeasibleConfig, "|B| exceeds an attribute cardinality");
  }
  std::set<std::size_t> seen_spurious;
  std::set<std::size_t> seen_target;
  for (const auto& f : biased) {
    if (f.spurious >= n_spurious || f.target >= n_target) {
      throw Error(ErrorCode::InvalidParams, "biased feature index out of range");
    }
    if (!seen_spurious.insert(f.spurious).second) {
      throw Error(ErrorCode::InvalidParams,
                  "spurious value " + std::to_string(f.spurious) + " listed twice in B");
    }
    if (!seen_target.insert(f.target).second) {
      throw Error(ErrorCode::InfeasibleConfig,
                  "g is not injective: target " + std::to_string(f.target) + " used twice");
    }
    if (!(f.corr >= 0.0 && f.corr <= 1.0)) {
      throw Error(ErrorCode::InvalidParams, "corr must lie in [0, 1]");
    }
  }
  (void)target_dist();
  (void)spurious_dist();
}

Preset parse_preset(std::string_view name) {
  const std::string key = lowercase(name);
  if (key == "lmlp") return Preset::LMLP;
  if (key == "lmlp'" || key == "lmlp-prime" || key == "lmlp_prime" || key == "lmlpp") {
    return Preset::LMLPPrime;
  }
  if (key == "hmlp") return Preset::HMLP;
  if (key == "hmhp") return Preset::HMHP;
  if (key == "unbiased") return Preset::Unbiased;
  throw Error(ErrorCode::UnknownPreset, std::string(name));
}

std::string_view preset_name(Preset preset) {
  switch (preset) {
    case Preset::LMLP: return "LMLP";
    case Preset::LMLPPrime: return "LMLP'";
    case Preset::HMLP: return "HMLP";
    case Preset::HMHP: return "HMHP";
    case Preset::Unbiased: return "Unbiased";
  }
  return "?";
}

BiasConfig uniform_config(std::size_t n_biased, double corr, std::size_t n_classes) {
  BiasConfig config;
  config.n_target = n_classes;
  config.n_spurious = n_classes;
  for (std::size_t i = 0; i < n_biased; ++i) config.biased.push_back({i, i, corr});
  config.validate();
  return config;
}

BiasConfig preset(Preset p) {
  switch (p) {
    case Preset::LMLP: return uniform_config(10, 0.5);
    case Preset::LMLPPrime: return uniform_config(5, 0.5);
    case Preset::HMLP: return uniform_config(1, 0.98);
    case Preset::HMHP: return uniform_config(10, 0.98);
    case Preset::Unbiased: return uniform_config(0, 0.1);
  }
  throw Error(ErrorCode::UnknownPreset, "unhandled preset");
}

BiasConfig preset(std::string_view name) { return preset(parse_preset(name)); }

JointDist build_joint(const BiasConfig& config) {
  config.validate();
  const std::size_t nt = config.n_target;
  const std::size_t ns = config.n_spurious;
  const auto pt = config.target_dist();
  const auto ps = config.spurious_dist();
  std::vector<double> table(nt * ns, 0.0);

  for (const auto& f : config.biased) {
    for (std::size_t t = 0; t < nt; ++t) {
      table[t * ns + f.spurious] = t == f.target
                                       ? ps[f.spurious] * f.corr
                                       : ps[f.spurious] * (1.0 - f.corr) / static_cast<double>(nt - 1);
    }
  }

  std::vector<std::size_t> neutral;
  double neutral_mass = 0.0;
  for (std::size_t s = 0; s < ns; ++s) {
    if (config.is_biased(s)) continue;
    neutral.push_back(s);
    neutral_mass += ps[s];
  }

  for (std::size_t t = 0; t < nt; ++t) {
    double residual = pt[t];
    for (const auto& f : config.biased) residual -= table[t * ns + f.spurious];
    if (residual < -1e-12) {
      const std::size_t s = neutral.empty() ? config.biased.front().spurious : neutral.front();
      throw Error(ErrorCode::InfeasibleConfig,
                  "negative residual mass " + std::to_string(residual) + " at " + cell_name(t, s));
    }
    residual = std::max(residual, 0.0);
    if (neutral.empty() || neutral_mass <= 0.0) {
      // Biased columns alone must reproduce the target marginal.
      if (residual > 1e-9) {
        throw Error(ErrorCode::InfeasibleConfig,
                    "biased columns leave mass " + std::to_string(residual) + " for target " +
                        std::to_string(t) + " but no neutral spurious mass to hold it");
      }
      continue;
    }
    for (std::size_t s : neutral) table[t * ns + s] = residual * ps[s] / neutral_mass;
  }
  return JointDist(nt, ns, std::move(table), 1e-9);
}

JointDist independent_joint(const BiasConfig& config) {
  const auto pt = config.target_dist();
  const auto ps = config.spurious_dist();
  std::vector<double> table(config.n_target * config.n_spurious);
  for (std::size_t t = 0; t < config.n_target; ++t) {
    for (std::size_t s = 0; s < config.n_spurious; ++s) {
      table[t * config.n_spurious + s] = pt[t] * ps[s];
    }
  }
  return JointDist(config.n_target, config.n_spurious, std::move(table), 1e-9);
}

std::vector<LabelPair> sample_labels(const JointDist& joint, std::size_t n, std::uint64_t seed) {
  const auto table = joint.table();
  std::vector<double> cdf(table.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < table.size(); ++k) {
    acc += table[k];
    cdf[k] = acc;
  }
  Rng rng(seed);
  std::vector<LabelPair> labels(n);
  const std::size_t ns = joint.n_spurious();
  for (auto& label : labels) {
    const double x = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), x);
    std::size_t k = static_cast<std::size_t>(it - cdf.begin());
    if (k >= cdf.size()) k = cdf.size() - 1;
    while (table[k] == 0.0 && k > 0) --k;
    label = {k / ns, k % ns};
  }
  return labels;
}

JointDist empirical_joint(std::span<const LabelPair> labels, std::size_t n_target,
                          std::size_t n_spurious) {
  if (labels.empty()) throw Error(ErrorCode::InvalidParams, "no labels");
  std::vector<double> counts(n_target * n_spurious, 0.0);
  for (const auto& l : labels) {
    if (l.target >= n_target || l.spurious >= n_spurious) {
      throw Error(ErrorCode::InvalidParams, "label out of range");
    }
    counts[l.target * n_spurious + l.spurious] += 1.0;
  }
  const double n = static_cast<double>(labels.size());
  for (double& c : counts) c /= n;
  return JointDist(n_target, n_spurious, std::move(counts), 1e-9);
}

std::string_view tag_name(Tag tag) {
  switch (tag) {
    case Tag::BA: return "BA";
    case Tag::BC: return "BC";
    case Tag::BN: return "BN";
  }
  return "?";
}

std::optional<Tag> parse_tag(std::string_view name) {
  if (name == "BA") return Tag::BA;
  if (name == "BC") return Tag::BC;
  if (name == "BN") return Tag::BN;
  return std::nullopt;
}

Tag categorize(std::size_t target, std::size_t spurious, const BiasConfig& config) {
  const auto g = config.correlated_class(spurious);
  if (!g) return Tag::BN;
  return *g == target ? Tag::BA : Tag::BC;
}

LabeledDataset generate_features(std::span<const LabelPair> labels, const BiasConfig& config,
                                 const FeatureLayout& layout, std::uint64_t seed) {
  if (layout.target_dim < config.n_target || layout.spurious_dim < config.n_spurious) {
    throw Error(ErrorCode::InvalidLayout, "feature blocks are narrower than the one-hot codes");
  }
  if (layout.noise_target < 0.0 || layout.noise_spurious < 0.0) {
    throw Error(ErrorCode::InvalidLayout, "noise scales must be nonnegative");
  }
  if (!layout.allow_hard_spurious && !(layout.noise_spurious < layout.noise_target)) {
    throw Error(ErrorCode::InvalidLayout,
                "noise_spurious must be below noise_target (spurious attribute easier)");
  }

  LabeledDataset ds;
  ds.config = config;
  ds.layout = layout;
  ds.seed = seed;
  ds.records.reserve(labels.size());
  const std::size_t dim = layout.feature_dim();
  ds.features.assign(labels.size() * dim, 0.0);

  Rng rng(seed);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& l = labels[i];
    ds.records.push_back({l.target, l.spurious, categorize(l.target, l.spurious, config)});
    double* row = ds.features.data() + i * dim;
    for (std::size_t j = 0; j < layout.target_dim; ++j) {
      row[j] = (j == l.target ? 1.0 : 0.0) + layout.noise_target * rng.normal();
    }
    double* spur = row + layout.target_dim;
    for (std::size_t j = 0; j < layout.spurious_dim; ++j) {
      spur[j] = (j == l.spurious ? 1.0 : 0.0) + layout.noise_spurious * rng.normal();
    }
  }
  return ds;
}

LabeledDataset synthesize(const BiasConfig& config, std::size_t n, const FeatureLayout& layout,
                          std::uint64_t seed) {
  const auto labels = sample_labels(build_joint(config), n, mix_seed(seed, 0));
  auto ds = generate_features(labels, config, layout, mix_seed(seed, 1));
  ds.seed = seed;
  return ds;
}

}  // namespace biaslens
