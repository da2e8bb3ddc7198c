#pragma once

// File formats: tabular ingestion into empirical joints, bias reports (JSON),
// synthesized datasets (CSV), joint heatmaps (CSV), synthesis configs (JSON),
// plus JSON encodings of proposition reports and simulation metrics.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "biaslens/dist.hpp"
#include "biaslens/metrics.hpp"
#include "biaslens/sim/sweep.hpp"
#include "biaslens/sim/train.hpp"
#include "biaslens/synth.hpp"
#include "biaslens/theory.hpp"

namespace biaslens::io {

inline constexpr int kSignificantDigits = 12;

struct TabularSource {
  std::filesystem::path path;
  std::string target_column;
  std::string spurious_column;
  char delimiter = ',';
  // Without a header, columns are named by zero-based position ("0", "1", ...).
  bool has_header = true;
};

// Splits one CSV line, honoring double-quoted fields ("" escapes a quote).
std::vector<std::string> split_csv_line(std::string_view line, char delimiter = ',');

// Empirical joint of the two columns; labels are assigned in lexicographic
// order. Throws MissingColumn, EmptyFile, MalformedRow (with line number),
// IoFailure.
JointDist load_joint(const TabularSource& source);

// Rounds to 12 significant digits.
double round_significant(double value);
std::string format_number(double value);

nlohmann::json report_to_json(const BiasReport& report);
BiasReport report_from_json(const nlohmann::json& j);
void write_report(const BiasReport& report, const std::filesystem::path& path);

// Header `target,spurious,tag,f0..f{d-1}`; labels are indices.
void write_dataset(const LabeledDataset& dataset, const std::filesystem::path& path);
// Reads a dataset written by write_dataset; `layout` must match its width.
LabeledDataset read_dataset(const std::filesystem::path& path, const FeatureLayout& layout);

// First row = spurious labels (empty corner), first column = target labels.
void export_heatmap(const JointDist& joint, const std::filesystem::path& path);
JointDist load_heatmap(const std::filesystem::path& path);

// Synthesis recipe: n_target, n_spurious, target_marginal, spurious_marginal,
// biased_set, g, corr, feature_layout, seed. `g` and `corr` are arrays
// aligned with biased_set (corr may also be a single number).
struct SynthSpec {
  BiasConfig config;
  FeatureLayout layout;
  std::uint64_t seed = 0;
};
SynthSpec synth_spec_from_json(const nlohmann::json& j);
nlohmann::json synth_spec_to_json(const SynthSpec& spec);

nlohmann::json proposition_to_json(const theory::PropositionReport& report);

nlohmann::json run_metrics_to_json(const sim::RunMetrics& metrics, const nlohmann::json& config_echo);
nlohmann::json sweep_to_json(sim::SweepAxis axis, sim::Method method,
                             const std::vector<sim::SweepPoint>& rows, const nlohmann::json& config_echo);

// Plottable matrices derived from JSON outputs.
// weights-csv: epoch,w_ba,w_bc,w_bn from simulate output.
std::string weights_csv(const nlohmann::json& run_metrics);
// heatmap-csv: P(y^t | y^s) matrix from a bias report, or a value x metric
// matrix (mean over seeds) from a sweep table.
std::string heatmap_csv(const nlohmann::json& document);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace biaslens::io
