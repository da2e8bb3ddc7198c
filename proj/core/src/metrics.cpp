#include "biaslens/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "biaslens/error.hpp"

namespace biaslens {

namespace {

void require_binary(const JointDist& joint) {
  if (joint.n_target() != 2 || joint.n_spurious() != 2) {
    throw Error(ErrorCode::NotBinary, "joint is " + std::to_string(joint.n_target()) + "x" +
                                          std::to_string(joint.n_spurious()));
  }
}

// Magnitude with the report conventions: nullopt for empty columns, +inf for
// support mismatch.
std::optional<double> magnitude_or_marker(const JointDist& joint, std::size_t s) {
  if (joint.column_mass(s) <= 0.0) return std::nullopt;
  try {
    return bias_magnitude(joint, s);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SupportMismatch) throw;
    return std::numeric_limits<double>::infinity();
  }
}

std::vector<std::size_t> select_biased(const std::vector<std::optional<double>>& magnitudes,
                                       double theta) {
  std::vector<std::size_t> biased;
  for (std::size_t s = 0; s < magnitudes.size(); ++s) {
    if (magnitudes[s] && *magnitudes[s] > theta) biased.push_back(s);
  }
  return biased;
}

double sum_mass(const std::vector<std::size_t>& biased, const std::vector<double>& marginal) {
  double prevalence = 0.0;
  for (std::size_t s : biased) prevalence += marginal[s];
  return prevalence;
}

}  // namespace

double bias_magnitude(const JointDist& joint, std::size_t s) {
  return kl_divergence(marginal_target(joint), conditional_target_given_spurious(joint, s));
}

double simplified_magnitude(const JointDist& joint, std::size_t s) {
  require_binary(joint);
  const double tau = conditional_target_given_spurious(joint, s)[s];
  return tau - joint.row_mass(s);
}

double phi_ratio(const JointDist& joint, std::size_t s) {
  require_binary(joint);
  const double max_magnitude = 1.0 - joint.row_mass(s);
  if (max_magnitude <= 0.0) {
    throw Error(ErrorCode::DegenerateMarginal,
                "target class " + joint.target_labels()[s] + " has marginal 1");
  }
  return simplified_magnitude(joint, s) / max_magnitude;
}

std::vector<std::size_t> biased_feature_set(const JointDist& joint, double theta) {
  std::vector<std::optional<double>> magnitudes(joint.n_spurious());
  for (std::size_t s = 0; s < joint.n_spurious(); ++s) magnitudes[s] = magnitude_or_marker(joint, s);
  return select_biased(magnitudes, theta);
}

double bias_prevalence(const JointDist& joint, double theta) {
  const auto marginal = marginal_spurious(joint);
  const std::vector<double> mass(marginal.probs().begin(), marginal.probs().end());
  return sum_mass(biased_feature_set(joint, theta), mass);
}

double corr_tcp(const JointDist& joint, std::size_t s, std::size_t t) {
  return conditional_spurious_given_target(joint, t)[s];
}

double corr_scp(const JointDist& joint, std::size_t s, std::size_t t) {
  return conditional_target_given_spurious(joint, s)[t];
}

double corr_sce(const JointDist& joint) { return conditional_entropy(joint); }

std::vector<std::optional<std::size_t>> correlated_class_map(const JointDist& joint) {
  std::vector<std::optional<std::size_t>> g(joint.n_spurious());
  for (std::size_t s = 0; s < joint.n_spurious(); ++s) {
    if (joint.column_mass(s) <= 0.0) continue;
    std::size_t best = 0;
    for (std::size_t t = 1; t < joint.n_target(); ++t) {
      if (joint.at(t, s) > joint.at(best, s)) best = t;
    }
    g[s] = best;
  }
  return g;
}

BiasReport analyze(const JointDist& joint, double theta) {
  BiasReport report;
  report.theta = theta;
  report.target_labels = joint.target_labels();
  report.spurious_labels = joint.spurious_labels();
  const auto pt = marginal_target(joint);
  const auto ps = marginal_spurious(joint);
  report.target_marginal.assign(pt.probs().begin(), pt.probs().end());
  report.spurious_marginal.assign(ps.probs().begin(), ps.probs().end());

  const std::size_t nt = joint.n_target();
  const std::size_t ns = joint.n_spurious();
  std::vector<std::optional<double>> magnitudes(ns);
  report.features.resize(ns);
  for (std::size_t s = 0; s < ns; ++s) {
    FeatureMeasures& f = report.features[s];
    f.magnitude = magnitude_or_marker(joint, s);
    magnitudes[s] = f.magnitude;
    f.corr_tcp.resize(nt);
    f.corr_scp.resize(nt);
    const double col = joint.column_mass(s);
    for (std::size_t t = 0; t < nt; ++t) {
      const double row = joint.row_mass(t);
      if (row > 0.0) f.corr_tcp[t] = joint.at(t, s) / row;
      if (col > 0.0) f.corr_scp[t] = joint.at(t, s) / col;
    }
  }
  report.biased_set = select_biased(magnitudes, theta);
  report.prevalence = sum_mass(report.biased_set, report.spurious_marginal);
  report.correlated_class = correlated_class_map(joint);
  report.corr_sce = corr_sce(joint);

  if (nt == 2 && ns == 2) {
    std::vector<std::optional<double>> phi(2);
    for (std::size_t s = 0; s < 2; ++s) {
      if (joint.column_mass(s) <= 0.0 || joint.row_mass(s) >= 1.0) continue;
      phi[s] = phi_ratio(joint, s);
    }
    report.phi = std::move(phi);
  }
  return report;
}

bool report_is_consistent(const BiasReport& report) {
  const std::size_t ns = report.spurious_labels.size();
  if (report.features.size() != ns || report.spurious_marginal.size() != ns) return false;
  std::vector<std::optional<double>> magnitudes(ns);
  for (std::size_t s = 0; s < ns; ++s) {
    magnitudes[s] = report.features[s].magnitude;
    if (magnitudes[s] && !(*magnitudes[s] >= 0.0)) return false;
  }
  if (select_biased(magnitudes, report.theta) != report.biased_set) return false;
  const double prevalence = sum_mass(report.biased_set, report.spurious_marginal);
  return std::abs(prevalence - report.prevalence) <= 1e-9 && report.prevalence >= 0.0 &&
         report.prevalence <= 1.0 + 1e-12;
}

}  // namespace biaslens
