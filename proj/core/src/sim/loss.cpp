#include "biaslens/sim/loss.hpp"

#include <algorithm>
#include <cmath>

#include "biaslens/error.hpp"

namespace biaslens::sim {

double ce_loss(std::span<const double> probs, std::size_t label) {
  return -std::log(std::max(probs[label], kProbabilityFloor));
}

double gce_loss(std::span<const double> probs, std::size_t label, double q) {
  return (1.0 - std::pow(probs[label], q)) / q;
}

double loss_value(const LossSpec& spec, std::span<const double> probs, std::size_t label) {
  if (label >= probs.size()) throw Error(ErrorCode::InvalidParams, "label out of range");
  if (spec.kind == LossKind::CrossEntropy) return ce_loss(probs, label);
  return gce_loss(probs, label, spec.q);
}

void loss_logit_gradient(const LossSpec& spec, std::span<const double> probs, std::size_t label,
                         std::span<double> out) {
  const double scale =
      spec.kind == LossKind::CrossEntropy ? 1.0 : std::pow(probs[label], spec.q);
  for (std::size_t k = 0; k < probs.size(); ++k) {
    out[k] = scale * (probs[k] - (k == label ? 1.0 : 0.0));
  }
}

double weight_fn(double loss_b, double loss_d) {
  const double total = loss_b + loss_d;
  if (total <= 0.0) return 0.5;
  return loss_b / total;
}

}  // namespace biaslens::sim
