#pragma once

// Small softmax classifiers with hand-derived gradients. Parameters live in
// one flat buffer so optimizers and finite-difference checks can treat them
// uniformly.
//
// Layouts (row-major):
//   linear: W [classes x input], b [classes]
//   mlp:    W1 [hidden x input], b1 [hidden], W2 [classes x hidden], b2 [classes]

#include <cstddef>
#include <span>
#include <vector>

#include "biaslens/rng.hpp"
#include "biaslens/sim/loss.hpp"

namespace biaslens::sim {

enum class ModelKind { Linear, Mlp };

class Model {
 public:
  static Model linear(std::size_t input_dim, std::size_t n_classes);
  // He-initialized hidden layer, zero biases, small random output layer.
  static Model mlp(std::size_t input_dim, std::size_t hidden_dim, std::size_t n_classes, Rng& rng);

  ModelKind kind() const noexcept { return kind_; }
  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t hidden_dim() const noexcept { return hidden_dim_; }
  std::size_t n_classes() const noexcept { return n_classes_; }

  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }

  // Class probabilities. Throws DimensionMismatch.
  std::vector<double> forward(std::span<const double> x) const;

  // Adds weight * d loss / d params into `grad` and returns the unweighted loss.
  double accumulate_gradient(std::span<const double> x, std::size_t label, const LossSpec& loss,
                             double weight, std::span<double> grad) const;

  bool all_finite() const;

 private:
  Model(ModelKind kind, std::size_t input_dim, std::size_t hidden_dim, std::size_t n_classes);

  void check_input(std::span<const double> x) const;

  ModelKind kind_;
  std::size_t input_dim_;
  std::size_t hidden_dim_;
  std::size_t n_classes_;
  std::vector<double> params_;
};

void softmax_in_place(std::span<double> logits);

// Central finite differences against accumulate_gradient over every
// parameter; returns max |a - n| / max(|a| + |n|, 1e-6).
double grad_check(const Model& model, std::span<const double> x, std::size_t label,
                  const LossSpec& loss, double eps = 1e-5);

}  // namespace biaslens::sim
