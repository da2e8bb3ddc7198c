#include "biaslens/sim/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "biaslens/error.hpp"

namespace biaslens::sim {

std::string_view axis_name(SweepAxis axis) {
  return axis == SweepAxis::Magnitude ? "magnitude" : "prevalence";
}

std::optional<SweepAxis> parse_axis(std::string_view name) {
  if (name == "magnitude") return SweepAxis::Magnitude;
  if (name == "prevalence") return SweepAxis::Prevalence;
  return std::nullopt;
}

BiasConfig sweep_config(SweepAxis axis, double value, const SweepBase& base) {
  if (axis == SweepAxis::Magnitude) return uniform_config(base.n_biased, value, base.n_classes);
  const double rounded = std::round(value);
  if (std::abs(rounded - value) > 1e-9 || rounded < 0.0 ||
      rounded > static_cast<double>(base.n_classes)) {
    throw Error(ErrorCode::InvalidParams,
                "prevalence sweep values are feature counts in [0, " +
                    std::to_string(base.n_classes) + "]");
  }
  return uniform_config(static_cast<std::size_t>(rounded), base.corr, base.n_classes);
}

std::vector<SweepPoint> sweep(SweepAxis axis, std::span<const double> values,
                              const SweepBase& base, std::span<const std::uint64_t> seeds,
                              std::size_t threads) {
  if (seeds.empty()) throw Error(ErrorCode::InvalidParams, "sweep needs at least one seed");
  std::vector<BiasConfig> configs;
  configs.reserve(values.size());
  for (double v : values) configs.push_back(sweep_config(axis, v, base));

  std::vector<SweepPoint> rows(values.size() * seeds.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (std::size_t j = 0; j < seeds.size(); ++j) {
      rows[i * seeds.size() + j].value = values[i];
      rows[i * seeds.size() + j].seed = seeds[j];
    }
  }

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(rows.size(), 1));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < rows.size(); k = next++) {
      try {
        TrainConfig cfg = base.train;
        cfg.seed = rows[k].seed;
        rows[k].metrics = simulate(configs[k / seeds.size()], base.n_train, base.layout, cfg).metrics;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return rows;
}

}  // namespace biaslens::sim
