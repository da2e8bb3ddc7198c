#include "biaslens/sim/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "biaslens/error.hpp"

namespace biaslens::sim {

Model::Model(ModelKind kind, std::size_t input_dim, std::size_t hidden_dim, std::size_t n_classes)
    : kind_(kind), input_dim_(input_dim), hidden_dim_(hidden_dim), n_classes_(n_classes) {
  if (input_dim == 0 || n_classes < 2 || (kind == ModelKind::Mlp && hidden_dim == 0)) {
    throw Error(ErrorCode::InvalidParams, "model dimensions must be positive with >= 2 classes");
  }
  const std::size_t count = kind == ModelKind::Linear
                                ? n_classes * (input_dim + 1)
                                : hidden_dim * (input_dim + 1) + n_classes * (hidden_dim + 1);
  params_.assign(count, 0.0);
}

Model Model::linear(std::size_t input_dim, std::size_t n_classes) {
  return Model(ModelKind::Linear, input_dim, 0, n_classes);
}

Model Model::mlp(std::size_t input_dim, std::size_t hidden_dim, std::size_t n_classes, Rng& rng) {
  Model m(ModelKind::Mlp, input_dim, hidden_dim, n_classes);
  const double w1_scale = std::sqrt(2.0 / static_cast<double>(input_dim));
  const double w2_scale = std::sqrt(1.0 / static_cast<double>(hidden_dim));
  double* p = m.params_.data();
  for (std::size_t i = 0; i < hidden_dim * input_dim; ++i) *p++ = w1_scale * rng.normal();
  p += hidden_dim;
  for (std::size_t i = 0; i < n_classes * hidden_dim; ++i) *p++ = w2_scale * rng.normal();
  return m;
}

void softmax_in_place(std::span<double> logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& z : logits) {
    z = std::exp(z - top);
    sum += z;
  }
  for (double& z : logits) z /= sum;
}

void Model::check_input(std::span<const double> x) const {
  if (x.size() != input_dim_) {
    throw Error(ErrorCode::DimensionMismatch, "input has " + std::to_string(x.size()) +
                                                  " features, model expects " +
                                                  std::to_string(input_dim_));
  }
}

namespace {

// out = W x + b for W [rows x cols] stored row-major.
void affine(const double* w, const double* b, std::span<const double> x, std::size_t rows,
            std::span<double> out) {
  const std::size_t cols = x.size();
  for (std::size_t r = 0; r < rows; ++r) {
    double z = b[r];
    const double* wr = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) z += wr[c] * x[c];
    out[r] = z;
  }
}

}  // namespace

std::vector<double> Model::forward(std::span<const double> x) const {
  check_input(x);
  std::vector<double> out(n_classes_);
  const double* p = params_.data();
  if (kind_ == ModelKind::Linear) {
    affine(p, p + n_classes_ * input_dim_, x, n_classes_, out);
  } else {
    std::vector<double> hidden(hidden_dim_);
    affine(p, p + hidden_dim_ * input_dim_, x, hidden_dim_, hidden);
    for (double& h : hidden) h = std::max(h, 0.0);
    const double* w2 = p + hidden_dim_ * (input_dim_ + 1);
    affine(w2, w2 + n_classes_ * hidden_dim_, hidden, n_classes_, out);
  }
  softmax_in_place(out);
  return out;
}

double Model::accumulate_gradient(std::span<const double> x, std::size_t label,
                                  const LossSpec& loss, double weight,
                                  std::span<double> grad) const {
  check_input(x);
  if (grad.size() != params_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "gradient buffer size mismatch");
  }
  if (label >= n_classes_) throw Error(ErrorCode::InvalidParams, "label out of range");

  const double* p = params_.data();
  std::vector<double> probs(n_classes_);
  std::vector<double> dlogits(n_classes_);

  if (kind_ == ModelKind::Linear) {
    affine(p, p + n_classes_ * input_dim_, x, n_classes_, probs);
    softmax_in_place(probs);
    loss_logit_gradient(loss, probs, label, dlogits);
    double* gw = grad.data();
    double* gb = gw + n_classes_ * input_dim_;
    for (std::size_t k = 0; k < n_classes_; ++k) {
      const double d = weight * dlogits[k];
      if (d == 0.0) continue;
      double* row = gw + k * input_dim_;
      for (std::size_t c = 0; c < input_dim_; ++c) row[c] += d * x[c];
      gb[k] += d;
    }
    return loss_value(loss, probs, label);
  }

  std::vector<double> hidden(hidden_dim_);
  affine(p, p + hidden_dim_ * input_dim_, x, hidden_dim_, hidden);
  for (double& h : hidden) h = std::max(h, 0.0);
  const double* w2 = p + hidden_dim_ * (input_dim_ + 1);
  affine(w2, w2 + n_classes_ * hidden_dim_, hidden, n_classes_, probs);
  softmax_in_place(probs);
  loss_logit_gradient(loss, probs, label, dlogits);

  double* gw1 = grad.data();
  double* gb1 = gw1 + hidden_dim_ * input_dim_;
  double* gw2 = gb1 + hidden_dim_;
  double* gb2 = gw2 + n_classes_ * hidden_dim_;

  std::vector<double> dhidden(hidden_dim_, 0.0);
  for (std::size_t k = 0; k < n_classes_; ++k) {
    const double d = weight * dlogits[k];
    const double* w2row = w2 + k * hidden_dim_;
    double* g2row = gw2 + k * hidden_dim_;
    for (std::size_t h = 0; h < hidden_dim_; ++h) {
      g2row[h] += d * hidden[h];
      dhidden[h] += d * w2row[h];
    }
    gb2[k] += d;
  }
  for (std::size_t h = 0; h < hidden_dim_; ++h) {
    if (hidden[h] <= 0.0) continue;
    const double d = dhidden[h];
    double* row = gw1 + h * input_dim_;
    for (std::size_t c = 0; c < input_dim_; ++c) row[c] += d * x[c];
    gb1[h] += d;
  }
  return loss_value(loss, probs, label);
}

bool Model::all_finite() const {
  return std::all_of(params_.begin(), params_.end(), [](double v) { return std::isfinite(v); });
}

double grad_check(const Model& model, std::span<const double> x, std::size_t label,
                  const LossSpec& loss, double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) throw Error(ErrorCode::InvalidParams, "eps outside [1e-7, 1e-3]");
  std::vector<double> analytic(model.params().size(), 0.0);
  model.accumulate_gradient(x, label, loss, 1.0, analytic);

  Model probe = model;
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double original = probe.params()[i];
    probe.params()[i] = original + eps;
    const double up = loss_value(loss, probe.forward(x), label);
    probe.params()[i] = original - eps;
    const double down = loss_value(loss, probe.forward(x), label);
    probe.params()[i] = original;
    const double numeric = (up - down) / (2.0 * eps);
    const double denom = std::max(std::abs(analytic[i]) + std::abs(numeric), 1e-6);
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace biaslens::sim
