#pragma once

#include <cstddef>
#include <span>

namespace biaslens::sim {

enum class LossKind { CrossEntropy, GeneralizedCrossEntropy };

struct LossSpec {
  LossKind kind = LossKind::CrossEntropy;
  double q = 0.7;  // GCE only, in (0, 1]
};

inline constexpr double kProbabilityFloor = 1e-12;

// -ln p_y, with p_y floored at 1e-12.
double ce_loss(std::span<const double> probs, std::size_t label);

// (1 - p_y^q) / q.
double gce_loss(std::span<const double> probs, std::size_t label, double q);

double loss_value(const LossSpec& spec, std::span<const double> probs, std::size_t label);

// d loss / d logits for a softmax output; written into `out` (same length as
// probs). CE: p - e_y. GCE: p_y^q (p - e_y).
void loss_logit_gradient(const LossSpec& spec, std::span<const double> probs, std::size_t label,
                         std::span<double> out);

// Per-sample reweighting loss_b / (loss_b + loss_d); 0.5 when both are zero.
double weight_fn(double loss_b, double loss_d);

}  // namespace biaslens::sim
