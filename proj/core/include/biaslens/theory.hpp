#pragma once

// Numeric checks of the binary-world results: bounds on P(y^s=+1) implied by
// both spurious values being biased, and the closed-form magnitude t(p) of
// the sparse feature under matched marginals.
//
// Binary convention: index 0 is the "+1" value, index 1 is "-1".

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "biaslens/dist.hpp"

namespace biaslens::theory {

struct BinaryBiasWorld {
  double p_t = 0.5;  // P(y^t = +1)
  double p_s = 0.5;  // P(y^s = +1)
  double tau = 0.5;  // P(y^t = +1 | y^s = +1)

  // Cells in table order: (+,+), (+,-), (-,+), (-,-) as (target, spurious).
  std::vector<double> cells() const;
  bool feasible(double tolerance = 0.0) const;
  bool positively_correlated() const { return tau > p_t; }
  JointDist joint() const;

  // Simplified magnitudes rho_+ = tau_+ - p^t_+ and rho_- = tau_- - p^t_-.
  double rho_plus() const;
  double rho_minus() const;
  // phi_+ = rho_+ / (1 - p^t_+); phi_- = rho_- / p^t_+.
  double phi_plus() const;
  double phi_minus() const;

  // Matched marginals p^t_+ = p^s_+ = p with tau_+ = p + phi (1 - p).
  static BinaryBiasWorld matched(double p, double phi);
};

struct Bounds {
  double lower = 0.0;
  double upper = 0.0;
};

// LB = theta p_t, UB = p_t / (theta (1 - p_t) + p_t).
Bounds prop1_bounds(double theta, double p_t);

// Closed form KL(P(y^t) || P(y^t | y^s = +1)) under matched marginals:
// p ln(p (1 - phi) / (p + phi (1 - p))) + ln(1 / (1 - phi)).
double t_of_p(double p, double phi);

struct GridSpec {
  std::size_t resolution = 200;
  double lower = 0.0;
  double upper = 1.0;
};

struct PropositionReport {
  std::string proposition;
  std::vector<std::pair<std::string, double>> parameters;
  GridSpec grid;
  std::size_t checked = 0;  // grid points where the premise held
  std::size_t violations = 0;
  double max_violation = 0.0;
  std::vector<std::pair<std::string, double>> witness;  // first violating point
  std::vector<std::string> failed_checks;
  bool passed = true;
};

// Enumerates (p_t, p_s, tau) on a resolution^3 grid strictly inside the unit
// cube (tau may reach 1). Infeasible or non-positively-correlated tuples are
// skipped. Wherever phi_+ > theta and phi_- > theta, asserts
// LB <= p_s <= UB within 1e-9.
PropositionReport verify_prop1(double theta, std::size_t resolution = 200);

inline constexpr double kInteriorMargin = 1e-3;

// Over p in [eps, 0.5 - eps] (eps = 1e-3): t(p) strictly decreasing, t(1 - p)
// strictly increasing, |t(eps) + ln(1 - phi)| < 0.01, |t(1 - eps)| < 0.01, and
// t(p), t(1 - p) match the KL magnitudes of the induced 2x2 joint within 1e-9.
PropositionReport verify_prop2(double phi, std::size_t resolution = 1000);

}  // namespace biaslens::theory
