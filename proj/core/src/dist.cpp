#include "biaslens/dist.hpp"

#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "biaslens/error.hpp"

namespace biaslens {

namespace {

// Validates entries and renormalizes in place.
void normalize_probabilities(std::vector<double>& probs, double tolerance) {
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs[i];
    if (!std::isfinite(p) || p < -tolerance) {
      throw Error(ErrorCode::InvalidDistribution,
                  "entry " + std::to_string(i) + " is " + std::to_string(p));
    }
    if (p < 0.0) probs[i] = 0.0;
    sum += probs[i];
  }
  if (std::abs(sum - 1.0) > tolerance) {
    throw Error(ErrorCode::InvalidDistribution,
                "probabilities sum to " + std::to_string(sum) + ", not 1");
  }
  for (double& p : probs) p /= sum;
}

std::vector<std::string> index_labels(std::size_t n) {
  std::vector<std::string> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = std::to_string(i);
  return labels;
}

void require_same_length(const CategoricalDist& p, const CategoricalDist& q) {
  if (p.size() != q.size()) {
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(p.size()) + " vs " + std::to_string(q.size()));
  }
}

}  // namespace

CategoricalDist::CategoricalDist(std::vector<double> probs, double tolerance)
    : probs_(std::move(probs)) {
  if (probs_.size() < 2) {
    throw Error(ErrorCode::InvalidDistribution, "need at least 2 categories");
  }
  normalize_probabilities(probs_, tolerance);
}

CategoricalDist CategoricalDist::uniform(std::size_t n) {
  return CategoricalDist(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

JointDist::JointDist(std::size_t n_target, std::size_t n_spurious, std::vector<double> table,
                     double tolerance)
    : JointDist(n_target, n_spurious, std::move(table), index_labels(n_target),
                index_labels(n_spurious), tolerance) {}

JointDist::JointDist(std::size_t n_target, std::size_t n_spurious, std::vector<double> table,
                     std::vector<std::string> target_labels,
                     std::vector<std::string> spurious_labels, double tolerance)
    : n_target_(n_target),
      n_spurious_(n_spurious),
      table_(std::move(table)),
      target_labels_(std::move(target_labels)),
      spurious_labels_(std::move(spurious_labels)) {
  if (n_target_ < 2 || n_spurious_ < 2) {
    throw Error(ErrorCode::InvalidDistribution, "joint needs at least 2 rows and 2 columns");
  }
  if (table_.size() != n_target_ * n_spurious_) {
    throw Error(ErrorCode::LengthMismatch, "table has " + std::to_string(table_.size()) +
                                               " cells, expected " +
                                               std::to_string(n_target_ * n_spurious_));
  }
  if (target_labels_.size() != n_target_ || spurious_labels_.size() != n_spurious_) {
    throw Error(ErrorCode::LengthMismatch, "label count does not match table shape");
  }
  normalize_probabilities(table_, tolerance);
}

JointDist JointDist::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t n_target = rows.size();
  const std::size_t n_spurious = rows.empty() ? 0 : rows.front().size();
  std::vector<double> table;
  table.reserve(n_target * n_spurious);
  for (const auto& row : rows) {
    if (row.size() != n_spurious) throw Error(ErrorCode::LengthMismatch, "ragged rows");
    table.insert(table.end(), row.begin(), row.end());
  }
  return JointDist(n_target, n_spurious, std::move(table));
}

double JointDist::column_mass(std::size_t s) const {
  double mass = 0.0;
  for (std::size_t t = 0; t < n_target_; ++t) mass += at(t, s);
  return mass;
}

double JointDist::row_mass(std::size_t t) const {
  double mass = 0.0;
  for (std::size_t s = 0; s < n_spurious_; ++s) mass += at(t, s);
  return mass;
}

CategoricalDist marginal_target(const JointDist& joint) {
  std::vector<double> m(joint.n_target());
  for (std::size_t t = 0; t < joint.n_target(); ++t) m[t] = joint.row_mass(t);
  return CategoricalDist(std::move(m));
}

CategoricalDist marginal_spurious(const JointDist& joint) {
  std::vector<double> m(joint.n_spurious());
  for (std::size_t s = 0; s < joint.n_spurious(); ++s) m[s] = joint.column_mass(s);
  return CategoricalDist(std::move(m));
}

CategoricalDist conditional_target_given_spurious(const JointDist& joint, std::size_t s) {
  const double mass = joint.column_mass(s);
  if (mass <= 0.0) {
    throw Error(ErrorCode::ZeroMassColumn, "spurious value " + joint.spurious_labels().at(s));
  }
  std::vector<double> c(joint.n_target());
  for (std::size_t t = 0; t < joint.n_target(); ++t) c[t] = joint.at(t, s) / mass;
  return CategoricalDist(std::move(c), 1e-9);
}

CategoricalDist conditional_spurious_given_target(const JointDist& joint, std::size_t t) {
  const double mass = joint.row_mass(t);
  if (mass <= 0.0) {
    throw Error(ErrorCode::ZeroMassRow, "target value " + joint.target_labels().at(t));
  }
  std::vector<double> c(joint.n_spurious());
  for (std::size_t s = 0; s < joint.n_spurious(); ++s) c[s] = joint.at(t, s) / mass;
  return CategoricalDist(std::move(c), 1e-9);
}

double kl_divergence(const CategoricalDist& p, const CategoricalDist& q) {
  require_same_length(p, q);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) {
      throw Error(ErrorCode::SupportMismatch,
                  "p[" + std::to_string(i) + "] > 0 where q[" + std::to_string(i) + "] = 0");
    }
    sum += p[i] * std::log(p[i] / q[i]);
  }
  // Rounding can leave a tiny negative value when p == q.
  return sum < 0.0 ? 0.0 : sum;
}

double total_variation(const CategoricalDist& p, const CategoricalDist& q) {
  require_same_length(p, q);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += std::abs(p[i] - q[i]);
  return 0.5 * sum;
}

double entropy(const CategoricalDist& p) {
  double h = 0.0;
  for (double v : p.probs()) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

double conditional_entropy(const JointDist& joint) {
  double h = 0.0;
  for (std::size_t s = 0; s < joint.n_spurious(); ++s) {
    const double mass = joint.column_mass(s);
    if (mass <= 0.0) continue;
    h += mass * entropy(conditional_target_given_spurious(joint, s));
  }
  return h;
}

}  // namespace biaslens
