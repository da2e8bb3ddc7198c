#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "biaslens/sim/train.hpp"

namespace biaslens::sim {

// Magnitude: every biased feature's corr takes the swept value (|B| fixed).
// Prevalence: |B| takes the swept value (corr fixed).
enum class SweepAxis { Magnitude, Prevalence };

std::string_view axis_name(SweepAxis axis);
std::optional<SweepAxis> parse_axis(std::string_view name);

struct SweepBase {
  std::size_t n_classes = 10;
  std::size_t n_biased = 10;  // magnitude axis
  double corr = 0.98;         // prevalence axis
  std::size_t n_train = 10000;
  FeatureLayout layout{};
  TrainConfig train{};
};

struct SweepPoint {
  double value = 0.0;
  std::uint64_t seed = 0;
  RunMetrics metrics;
};

BiasConfig sweep_config(SweepAxis axis, double value, const SweepBase& base);

// One run per (value, seed); rows ordered by value then seed regardless of
// completion order. threads = 0 uses the hardware concurrency.
std::vector<SweepPoint> sweep(SweepAxis axis, std::span<const double> values,
                              const SweepBase& base, std::span<const std::uint64_t> seeds,
                              std::size_t threads = 0);

}  // namespace biaslens::sim
