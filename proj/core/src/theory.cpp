#include "biaslens/theory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "biaslens/error.hpp"
#include "biaslens/metrics.hpp"

namespace biaslens::theory {

std::vector<double> BinaryBiasWorld::cells() const {
  return {p_s * tau, p_t - p_s * tau, p_s * (1.0 - tau), 1.0 - p_t - p_s * (1.0 - tau)};
}

bool BinaryBiasWorld::feasible(double tolerance) const {
  if (!(p_t > 0.0 && p_t < 1.0 && p_s > 0.0 && p_s < 1.0 && tau >= 0.0 && tau <= 1.0)) {
    return false;
  }
  for (double c : cells()) {
    if (c < -tolerance || c > 1.0 + tolerance) return false;
  }
  return true;
}

JointDist BinaryBiasWorld::joint() const {
  auto table = cells();
  for (double& c : table) c = std::max(c, 0.0);
  return JointDist(2, 2, std::move(table), 1e-9);
}

double BinaryBiasWorld::rho_plus() const { return tau - p_t; }

double BinaryBiasWorld::rho_minus() const {
  const double tau_minus = (1.0 - p_t - p_s * (1.0 - tau)) / (1.0 - p_s);
  return tau_minus - (1.0 - p_t);
}

double BinaryBiasWorld::phi_plus() const { return rho_plus() / (1.0 - p_t); }

double BinaryBiasWorld::phi_minus() const { return rho_minus() / p_t; }

BinaryBiasWorld BinaryBiasWorld::matched(double p, double phi) {
  return {p, p, p + phi * (1.0 - p)};
}

Bounds prop1_bounds(double theta, double p_t) {
  return {theta * p_t, p_t / (theta * (1.0 - p_t) + p_t)};
}

double t_of_p(double p, double phi) {
  return p * std::log(p * (1.0 - phi) / (p + phi * (1.0 - p))) + std::log(1.0 / (1.0 - phi));
}

namespace {

double interior_point(std::size_t i, std::size_t n) {
  return static_cast<double>(i + 1) / static_cast<double>(n + 1);
}

void record_failure(PropositionReport& report, double amount, const std::string& check) {
  ++report.violations;
  report.max_violation = std::max(report.max_violation, amount);
  if (report.failed_checks.size() < 16) report.failed_checks.push_back(check);
}

}  // namespace

PropositionReport verify_prop1(double theta, std::size_t resolution) {
  if (!(theta > 0.0 && theta <= 1.0)) {
    throw Error(ErrorCode::InvalidParams, "theta must lie in (0, 1]");
  }
  if (resolution < 100) throw Error(ErrorCode::InvalidParams, "grid resolution must be >= 100");

  PropositionReport report;
  report.proposition = "prop1";
  report.parameters = {{"theta", theta}};
  report.grid = {resolution, 0.0, 1.0};
  constexpr double kTolerance = 1e-9;

  for (std::size_t i = 0; i < resolution; ++i) {
    const double p_t = interior_point(i, resolution);
    const Bounds b = prop1_bounds(theta, p_t);
    for (std::size_t j = 0; j < resolution; ++j) {
      const double p_s = interior_point(j, resolution);
      for (std::size_t k = 0; k < resolution; ++k) {
        const BinaryBiasWorld w{p_t, p_s, static_cast<double>(k + 1) / static_cast<double>(resolution)};
        if (!w.positively_correlated() || !w.feasible()) continue;
        if (!(w.phi_plus() > theta && w.phi_minus() > theta)) continue;
        ++report.checked;
        const double excess = std::max(b.lower - p_s, p_s - b.upper);
        if (excess > kTolerance) {
          if (report.violations == 0) {
            report.witness = {{"p_t", p_t}, {"p_s", p_s}, {"tau", w.tau}};
          }
          record_failure(report, excess, "p_s outside [LB, UB]");
        }
      }
    }
  }
  report.passed = report.violations == 0;
  return report;
}

PropositionReport verify_prop2(double phi, std::size_t resolution) {
  if (!(phi > 0.0 && phi < 1.0)) throw Error(ErrorCode::InvalidParams, "phi must lie in (0, 1)");
  if (resolution < 2) throw Error(ErrorCode::InvalidParams, "grid resolution must be >= 2");

  constexpr double eps = kInteriorMargin;
  constexpr double kLimitTolerance = 0.01;
  constexpr double kConsistencyTolerance = 1e-9;

  PropositionReport report;
  report.proposition = "prop2";
  report.parameters = {{"phi", phi}};
  report.grid = {resolution, eps, 0.5 - eps};

  const double step = (0.5 - 2.0 * eps) / static_cast<double>(resolution - 1);
  double prev_sparse = 0.0;
  double prev_dense = 0.0;
  for (std::size_t i = 0; i < resolution; ++i) {
    const double p = eps + step * static_cast<double>(i);
    const double sparse = t_of_p(p, phi);
    const double dense = t_of_p(1.0 - p, phi);
    ++report.checked;

    if (i > 0) {
      if (!(sparse < prev_sparse)) {
        if (report.witness.empty()) report.witness = {{"p", p}, {"phi", phi}};
        record_failure(report, sparse - prev_sparse, "t(p) not strictly decreasing");
      }
      if (!(dense > prev_dense)) {
        if (report.witness.empty()) report.witness = {{"p", p}, {"phi", phi}};
        record_failure(report, prev_dense - dense, "t(1-p) not strictly increasing");
      }
    }
    prev_sparse = sparse;
    prev_dense = dense;

    const JointDist joint = BinaryBiasWorld::matched(p, phi).joint();
    const double gap = std::max(std::abs(bias_magnitude(joint, 0) - sparse),
                                std::abs(bias_magnitude(joint, 1) - dense));
    if (gap > kConsistencyTolerance) {
      if (report.witness.empty()) report.witness = {{"p", p}, {"phi", phi}};
      record_failure(report, gap, "closed form disagrees with KL magnitude");
    }
  }

  const double sparse_limit_gap = std::abs(t_of_p(eps, phi) + std::log(1.0 - phi));
  if (!(sparse_limit_gap < kLimitTolerance)) {
    record_failure(report, sparse_limit_gap,
                   "|t(eps) - (-ln(1 - phi))| = " + std::to_string(sparse_limit_gap) + " >= 0.01");
  }
  const double dense_limit_gap = std::abs(t_of_p(1.0 - eps, phi));
  if (!(dense_limit_gap < kLimitTolerance)) {
    record_failure(report, dense_limit_gap,
                   "|t(1 - eps)| = " + std::to_string(dense_limit_gap) + " >= 0.01");
  }
  report.parameters.push_back({"sparse_limit_gap", sparse_limit_gap});
  report.parameters.push_back({"dense_limit_gap", dense_limit_gap});

  report.passed = report.violations == 0;
  return report;
}

}  // namespace biaslens::theory
