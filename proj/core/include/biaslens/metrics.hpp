#pragma once

// Feature-level bias magnitude, dataset-level bias prevalence, the binary
// normalized ratio phi, and the prior-work correlation measures.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "biaslens/dist.hpp"

namespace biaslens {

inline constexpr double kDefaultThreshold = 0.1;

// KL(P(y^t) || P(y^t | y^s = s)), in nats.
double bias_magnitude(const JointDist& joint, std::size_t s);

// 2x2 only. tau_s - p^t_s: conditional minus marginal probability of the
// target class paired with s (index s; the diagonal pairing of the binary
// setting). Negative when anti-correlated.
double simplified_magnitude(const JointDist& joint, std::size_t s);

// 2x2 only. simplified_magnitude / (1 - p^t_s).
double phi_ratio(const JointDist& joint, std::size_t s);

// Spurious values whose magnitude exceeds theta. Zero-mass columns are
// excluded; a column whose conditional misses part of the target support has
// infinite magnitude and is always included.
std::vector<std::size_t> biased_feature_set(const JointDist& joint, double theta = kDefaultThreshold);

double bias_prevalence(const JointDist& joint, double theta = kDefaultThreshold);

// P(y^s = s | y^t = t)
double corr_tcp(const JointDist& joint, std::size_t s, std::size_t t);
// P(y^t = t | y^s = s)
double corr_scp(const JointDist& joint, std::size_t s, std::size_t t);
// H(y^t | y^s)
double corr_sce(const JointDist& joint);

// g(s) = argmax_t P(y^t = t | y^s = s), lowest index on ties; nullopt for
// zero-mass columns.
std::vector<std::optional<std::size_t>> correlated_class_map(const JointDist& joint);

struct FeatureMeasures {
  // nullopt: zero-mass column. +inf: conditional misses target support.
  std::optional<double> magnitude;
  std::vector<std::optional<double>> corr_tcp;  // indexed by target value
  std::vector<std::optional<double>> corr_scp;  // indexed by target value
};

struct BiasReport {
  double theta = kDefaultThreshold;
  std::vector<std::string> target_labels;
  std::vector<std::string> spurious_labels;
  std::vector<double> target_marginal;
  std::vector<double> spurious_marginal;
  std::vector<FeatureMeasures> features;  // indexed by spurious value
  std::vector<std::size_t> biased_set;
  double prevalence = 0.0;
  std::vector<std::optional<std::size_t>> correlated_class;
  // Present only for 2x2 joints.
  std::optional<std::vector<std::optional<double>>> phi;
  double corr_sce = 0.0;
};

BiasReport analyze(const JointDist& joint, double theta = kDefaultThreshold);

// Recomputes B and Prv from the stored magnitudes and marginal; used to check
// reports read back from disk.
bool report_is_consistent(const BiasReport& report);

}  // namespace biaslens
