#pragma once

// Exact arithmetic over categorical distributions and pairwise joint tables
// (target attribute x spurious attribute). All logarithms are natural.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace biaslens {

inline constexpr double kProbabilityTolerance = 1e-12;

class CategoricalDist {
 public:
  // Renormalizes when the sum is within `tolerance` of 1; throws
  // InvalidDistribution otherwise, or on negative / non-finite entries.
  explicit CategoricalDist(std::vector<double> probs, double tolerance = kProbabilityTolerance);

  static CategoricalDist uniform(std::size_t n);

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const noexcept { return probs_; }

 private:
  std::vector<double> probs_;
};

// Row-major table, rows = target values, cols = spurious values.
class JointDist {
 public:
  JointDist(std::size_t n_target, std::size_t n_spurious, std::vector<double> table,
            double tolerance = kProbabilityTolerance);
  JointDist(std::size_t n_target, std::size_t n_spurious, std::vector<double> table,
            std::vector<std::string> target_labels, std::vector<std::string> spurious_labels,
            double tolerance = kProbabilityTolerance);

  static JointDist from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t n_target() const noexcept { return n_target_; }
  std::size_t n_spurious() const noexcept { return n_spurious_; }
  double at(std::size_t t, std::size_t s) const { return table_[t * n_spurious_ + s]; }
  std::span<const double> table() const noexcept { return table_; }

  const std::vector<std::string>& target_labels() const noexcept { return target_labels_; }
  const std::vector<std::string>& spurious_labels() const noexcept { return spurious_labels_; }

  double column_mass(std::size_t s) const;
  double row_mass(std::size_t t) const;

 private:
  std::size_t n_target_;
  std::size_t n_spurious_;
  std::vector<double> table_;
  std::vector<std::string> target_labels_;
  std::vector<std::string> spurious_labels_;
};

CategoricalDist marginal_target(const JointDist& joint);
CategoricalDist marginal_spurious(const JointDist& joint);

// P(y^t | y^s = s). Throws ZeroMassColumn if the column is empty.
CategoricalDist conditional_target_given_spurious(const JointDist& joint, std::size_t s);

// P(y^s | y^t = t). Throws ZeroMassRow if the row is empty.
CategoricalDist conditional_spurious_given_target(const JointDist& joint, std::size_t t);

// sum_i p_i ln(p_i / q_i), with 0 ln 0 = 0. Throws SupportMismatch when p_i > 0
// and q_i = 0, LengthMismatch on differing sizes.
double kl_divergence(const CategoricalDist& p, const CategoricalDist& q);

double total_variation(const CategoricalDist& p, const CategoricalDist& q);

double entropy(const CategoricalDist& p);

// H(y^t | y^s); zero-mass columns contribute nothing.
double conditional_entropy(const JointDist& joint);

}  // namespace biaslens
