#include "biaslens/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "biaslens/error.hpp"

namespace biaslens::io {

using nlohmann::json;

namespace {

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string current;
  bool in_quotes = false;
  for (char c : text) {
    if (c == '"') in_quotes = !in_quotes;
    if (c == '\n' && !in_quotes) {
      if (!current.empty() && current.back() == '\r') current.pop_back();
      lines.push_back(std::move(current));
      current.clear();
      continue;
    }
    current.push_back(c);
  }
  if (!current.empty()) {
    if (current.back() == '\r') current.pop_back();
    lines.push_back(std::move(current));
  }
  return lines;
}

bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

std::size_t find_column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw Error(ErrorCode::MissingColumn, "no column named '" + name + "'");
}

double parse_double(const std::string& field, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::MalformedRow,
                "line " + std::to_string(line) + ": '" + field + "' is not a number");
  }
}

std::size_t parse_index(const std::string& field, std::size_t line) {
  const double v = parse_double(field, line);
  if (v < 0.0 || v != std::floor(v)) {
    throw Error(ErrorCode::MalformedRow,
                "line " + std::to_string(line) + ": '" + field + "' is not an index");
  }
  return static_cast<std::size_t>(v);
}

json optional_number(const std::optional<double>& v) {
  if (!v) return nullptr;
  return round_significant(*v);
}

std::optional<double> read_optional(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json magnitude_to_json(const std::optional<double>& m) {
  if (!m) return nullptr;
  if (std::isinf(*m)) return "inf";
  return round_significant(*m);
}

std::optional<double> magnitude_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
    throw Error(ErrorCode::InvalidParams, "unexpected magnitude '" + j.get<std::string>() + "'");
  }
  return j.get<double>();
}

std::size_t label_index(const std::vector<std::string>& labels, const std::string& label) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) return i;
  }
  throw Error(ErrorCode::InvalidParams, "unknown label '" + label + "'");
}

std::string quote_if_needed(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

json group_means_json(const sim::GroupMeans& g) {
  return {{"w_ba", optional_number(g.ba)}, {"w_bc", optional_number(g.bc)},
          {"w_bn", optional_number(g.bn)}};
}

json final_json(const sim::FinalMetrics& f) {
  return {{"bc_acc", optional_number(f.bc_acc)},
          {"avg_acc", round_significant(f.avg_acc)},
          {"worst_acc", round_significant(f.worst_acc)}};
}

}  // namespace

std::vector<std::string> split_csv_line(std::string_view line, char delimiter) {
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == delimiter) {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + ": " + std::strerror(errno));
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoFailure, "cannot write " + path.string() + ": " + std::strerror(errno));
  }
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

JointDist load_joint(const TabularSource& source) {
  const auto lines = split_lines(read_text(source.path));
  std::size_t first = 0;
  while (first < lines.size() && is_blank(lines[first])) ++first;
  if (first == lines.size()) throw Error(ErrorCode::EmptyFile, source.path.string());

  std::vector<std::string> header = split_csv_line(lines[first], source.delimiter);
  std::size_t data_start = first + 1;
  if (!source.has_header) {
    for (std::size_t i = 0; i < header.size(); ++i) header[i] = std::to_string(i);
    data_start = first;
  }
  const std::size_t ti = find_column(header, source.target_column);
  const std::size_t si = find_column(header, source.spurious_column);

  std::map<std::pair<std::string, std::string>, std::size_t> counts;
  std::set<std::string> target_values;
  std::set<std::string> spurious_values;
  std::size_t n = 0;
  for (std::size_t i = data_start; i < lines.size(); ++i) {
    if (is_blank(lines[i])) continue;
    const auto fields = split_csv_line(lines[i], source.delimiter);
    const std::size_t line_no = i + 1;
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no) + " has " +
                                               std::to_string(fields.size()) + " fields, expected " +
                                               std::to_string(header.size()));
    }
    if (fields[ti].empty() || fields[si].empty()) {
      throw Error(ErrorCode::MalformedRow,
                  "line " + std::to_string(line_no) + " has an empty target or spurious value");
    }
    ++counts[{fields[ti], fields[si]}];
    target_values.insert(fields[ti]);
    spurious_values.insert(fields[si]);
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::EmptyFile, source.path.string() + " has no data rows");

  const std::vector<std::string> tl(target_values.begin(), target_values.end());
  const std::vector<std::string> sl(spurious_values.begin(), spurious_values.end());
  std::map<std::string, std::size_t> t_index;
  std::map<std::string, std::size_t> s_index;
  for (std::size_t i = 0; i < tl.size(); ++i) t_index[tl[i]] = i;
  for (std::size_t i = 0; i < sl.size(); ++i) s_index[sl[i]] = i;

  std::vector<double> table(tl.size() * sl.size(), 0.0);
  for (const auto& [key, count] : counts) {
    table[t_index[key.first] * sl.size() + s_index[key.second]] =
        static_cast<double>(count) / static_cast<double>(n);
  }
  return JointDist(tl.size(), sl.size(), std::move(table), tl, sl, 1e-9);
}

double round_significant(double value) {
  if (!std::isfinite(value) || value == 0.0) return value;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", kSignificantDigits, value);
  return std::strtod(buf, nullptr);
}

std::string format_number(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", kSignificantDigits, value);
  return buf;
}

json report_to_json(const BiasReport& report) {
  json magnitudes = json::array();
  for (std::size_t s = 0; s < report.features.size(); ++s) {
    const auto& f = report.features[s];
    json tcp = json::array();
    json scp = json::array();
    for (const auto& v : f.corr_tcp) tcp.push_back(optional_number(v));
    for (const auto& v : f.corr_scp) scp.push_back(optional_number(v));
    magnitudes.push_back({{"spurious_label", report.spurious_labels[s]},
                          {"rho_star", magnitude_to_json(f.magnitude)},
                          {"corr_tcp", tcp},
                          {"corr_scp", scp}});
  }
  json biased = json::array();
  for (std::size_t s : report.biased_set) biased.push_back(report.spurious_labels[s]);
  json correlated = json::object();
  for (std::size_t s = 0; s < report.correlated_class.size(); ++s) {
    if (report.correlated_class[s]) {
      correlated[report.spurious_labels[s]] = report.target_labels[*report.correlated_class[s]];
    }
  }
  json tm = json::array();
  json sm = json::array();
  for (double p : report.target_marginal) tm.push_back(round_significant(p));
  for (double p : report.spurious_marginal) sm.push_back(round_significant(p));

  json j = {{"theta", report.theta},
            {"magnitudes", magnitudes},
            {"corr_sce", round_significant(report.corr_sce)},
            {"biased_set", biased},
            {"prevalence", round_significant(report.prevalence)},
            {"correlated_class", correlated},
            {"marginals",
             {{"target", {{"labels", report.target_labels}, {"probs", tm}}},
              {"spurious", {{"labels", report.spurious_labels}, {"probs", sm}}}}}};
  if (report.phi) {
    json phi = json::array();
    for (const auto& v : *report.phi) phi.push_back(optional_number(v));
    j["phi"] = phi;
  }
  return j;
}

BiasReport report_from_json(const json& j) {
  BiasReport r;
  r.theta = j.at("theta").get<double>();
  const auto& marginals = j.at("marginals");
  r.target_labels = marginals.at("target").at("labels").get<std::vector<std::string>>();
  r.target_marginal = marginals.at("target").at("probs").get<std::vector<double>>();
  r.spurious_labels = marginals.at("spurious").at("labels").get<std::vector<std::string>>();
  r.spurious_marginal = marginals.at("spurious").at("probs").get<std::vector<double>>();

  const auto& mags = j.at("magnitudes");
  r.features.resize(mags.size());
  for (const auto& m : mags) {
    const std::size_t s = label_index(r.spurious_labels, m.at("spurious_label").get<std::string>());
    FeatureMeasures& f = r.features[s];
    f.magnitude = magnitude_from_json(m.at("rho_star"));
    for (const auto& v : m.at("corr_tcp")) f.corr_tcp.push_back(read_optional(v));
    for (const auto& v : m.at("corr_scp")) f.corr_scp.push_back(read_optional(v));
  }
  for (const auto& label : j.at("biased_set")) {
    r.biased_set.push_back(label_index(r.spurious_labels, label.get<std::string>()));
  }
  r.prevalence = j.at("prevalence").get<double>();
  r.correlated_class.assign(r.spurious_labels.size(), std::nullopt);
  for (const auto& [spurious, target] : j.at("correlated_class").items()) {
    r.correlated_class[label_index(r.spurious_labels, spurious)] =
        label_index(r.target_labels, target.get<std::string>());
  }
  r.corr_sce = j.at("corr_sce").get<double>();
  if (j.contains("phi")) {
    std::vector<std::optional<double>> phi;
    for (const auto& v : j.at("phi")) phi.push_back(read_optional(v));
    r.phi = std::move(phi);
  }
  return r;
}

void write_report(const BiasReport& report, const std::filesystem::path& path) {
  write_text(path, report_to_json(report).dump(2) + "\n");
}

void write_dataset(const LabeledDataset& dataset, const std::filesystem::path& path) {
  std::string out = "target,spurious,tag";
  const std::size_t dim = dataset.feature_dim();
  for (std::size_t j = 0; j < dim; ++j) out += ",f" + std::to_string(j);
  out += '\n';
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Record& r = dataset.records[i];
    out += std::to_string(r.target);
    out += ',';
    out += std::to_string(r.spurious);
    out += ',';
    out += tag_name(r.tag);
    for (double v : dataset.row(i)) {
      out += ',';
      out += format_number(v);
    }
    out += '\n';
  }
  write_text(path, out);
}

LabeledDataset read_dataset(const std::filesystem::path& path, const FeatureLayout& layout) {
  const auto lines = split_lines(read_text(path));
  if (lines.empty()) throw Error(ErrorCode::EmptyFile, path.string());
  const auto header = split_csv_line(lines[0]);
  const std::size_t dim = layout.feature_dim();
  if (header.size() != 3 + dim || header[0] != "target" || header[1] != "spurious" ||
      header[2] != "tag") {
    throw Error(ErrorCode::MalformedRow, "line 1: unexpected dataset header");
  }
  LabeledDataset ds;
  ds.layout = layout;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (is_blank(lines[i])) continue;
    const auto fields = split_csv_line(lines[i]);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::MalformedRow, "line " + std::to_string(i + 1) + " has " +
                                               std::to_string(fields.size()) + " fields");
    }
    const auto tag = parse_tag(fields[2]);
    if (!tag) throw Error(ErrorCode::MalformedRow, "line " + std::to_string(i + 1) + ": bad tag");
    ds.records.push_back({parse_index(fields[0], i + 1), parse_index(fields[1], i + 1), *tag});
    for (std::size_t j = 0; j < dim; ++j) ds.features.push_back(parse_double(fields[3 + j], i + 1));
  }
  return ds;
}

void export_heatmap(const JointDist& joint, const std::filesystem::path& path) {
  std::string out;
  for (const auto& label : joint.spurious_labels()) {
    out += ',';
    out += quote_if_needed(label);
  }
  out += '\n';
  for (std::size_t t = 0; t < joint.n_target(); ++t) {
    out += quote_if_needed(joint.target_labels()[t]);
    for (std::size_t s = 0; s < joint.n_spurious(); ++s) {
      out += ',';
      out += format_number(joint.at(t, s));
    }
    out += '\n';
  }
  write_text(path, out);
}

JointDist load_heatmap(const std::filesystem::path& path) {
  const auto lines = split_lines(read_text(path));
  if (lines.empty()) throw Error(ErrorCode::EmptyFile, path.string());
  const auto header = split_csv_line(lines[0]);
  if (header.size() < 3) throw Error(ErrorCode::MalformedRow, "line 1: too few columns");
  const std::vector<std::string> spurious(header.begin() + 1, header.end());
  std::vector<std::string> target;
  std::vector<double> table;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (is_blank(lines[i])) continue;
    const auto fields = split_csv_line(lines[i]);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::MalformedRow, "line " + std::to_string(i + 1) + " has " +
                                               std::to_string(fields.size()) + " fields");
    }
    target.push_back(fields[0]);
    for (std::size_t j = 1; j < fields.size(); ++j) table.push_back(parse_double(fields[j], i + 1));
  }
  if (target.empty()) throw Error(ErrorCode::EmptyFile, path.string() + " has no rows");
  const std::size_t n_target = target.size();
  const std::size_t n_spurious = spurious.size();
  // 12 significant digits per cell bound the total rounding well below 1e-9.
  return JointDist(n_target, n_spurious, std::move(table), std::move(target), spurious, 1e-9);
}

SynthSpec synth_spec_from_json(const json& j) {
  SynthSpec spec;
  BiasConfig& c = spec.config;
  c.n_target = j.at("n_target").get<std::size_t>();
  c.n_spurious = j.at("n_spurious").get<std::size_t>();
  if (j.contains("target_marginal") && !j["target_marginal"].is_null()) {
    c.target_marginal = j["target_marginal"].get<std::vector<double>>();
  }
  if (j.contains("spurious_marginal") && !j["spurious_marginal"].is_null()) {
    c.spurious_marginal = j["spurious_marginal"].get<std::vector<double>>();
  }
  const auto biased = j.value("biased_set", std::vector<std::size_t>{});
  std::vector<std::size_t> g = biased;
  if (j.contains("g")) g = j["g"].get<std::vector<std::size_t>>();
  if (g.size() != biased.size()) throw Error(ErrorCode::InvalidParams, "g must align with biased_set");
  std::vector<double> corr(biased.size(), 0.0);
  if (j.contains("corr")) {
    if (j["corr"].is_number()) {
      corr.assign(biased.size(), j["corr"].get<double>());
    } else {
      corr = j["corr"].get<std::vector<double>>();
    }
  } else if (!biased.empty()) {
    throw Error(ErrorCode::InvalidParams, "corr is required when biased_set is non-empty");
  }
  if (corr.size() != biased.size()) {
    throw Error(ErrorCode::InvalidParams, "corr must align with biased_set");
  }
  for (std::size_t i = 0; i < biased.size(); ++i) c.biased.push_back({biased[i], g[i], corr[i]});

  spec.layout.target_dim = c.n_target;
  spec.layout.spurious_dim = c.n_spurious;
  if (j.contains("feature_layout")) {
    const auto& l = j["feature_layout"];
    spec.layout.target_dim = l.value("target_dim", spec.layout.target_dim);
    spec.layout.spurious_dim = l.value("spurious_dim", spec.layout.spurious_dim);
    spec.layout.noise_target = l.value("noise_target", spec.layout.noise_target);
    spec.layout.noise_spurious = l.value("noise_spurious", spec.layout.noise_spurious);
    spec.layout.allow_hard_spurious = l.value("allow_hard_spurious", false);
  }
  spec.seed = j.value("seed", std::uint64_t{0});
  c.validate();
  return spec;
}

json synth_spec_to_json(const SynthSpec& spec) {
  const BiasConfig& c = spec.config;
  std::vector<std::size_t> biased;
  std::vector<std::size_t> g;
  std::vector<double> corr;
  for (const auto& f : c.biased) {
    biased.push_back(f.spurious);
    g.push_back(f.target);
    corr.push_back(f.corr);
  }
  const auto pt = c.target_dist();
  const auto ps = c.spurious_dist();
  return {{"n_target", c.n_target},
          {"n_spurious", c.n_spurious},
          {"target_marginal", std::vector<double>(pt.probs().begin(), pt.probs().end())},
          {"spurious_marginal", std::vector<double>(ps.probs().begin(), ps.probs().end())},
          {"biased_set", biased},
          {"g", g},
          {"corr", corr},
          {"feature_layout",
           {{"target_dim", spec.layout.target_dim},
            {"spurious_dim", spec.layout.spurious_dim},
            {"noise_target", spec.layout.noise_target},
            {"noise_spurious", spec.layout.noise_spurious}}},
          {"seed", spec.seed}};
}

json proposition_to_json(const theory::PropositionReport& report) {
  json params = json::object();
  for (const auto& [k, v] : report.parameters) params[k] = v;
  json witness = nullptr;
  if (!report.witness.empty()) {
    witness = json::object();
    for (const auto& [k, v] : report.witness) witness[k] = v;
  }
  return {{"proposition", report.proposition},
          {"parameters", params},
          {"grid_spec",
           {{"resolution", report.grid.resolution},
            {"lower", report.grid.lower},
            {"upper", report.grid.upper}}},
          {"checked", report.checked},
          {"violations", report.violations},
          {"max_violation", report.max_violation},
          {"witness", witness},
          {"failed_checks", report.failed_checks},
          {"passed", report.passed}};
}

json run_metrics_to_json(const sim::RunMetrics& metrics, const json& config_echo) {
  json per_epoch = json::array();
  for (const auto& e : metrics.per_epoch) {
    json row = group_means_json(e.weights);
    row["epoch"] = e.epoch;
    per_epoch.push_back(row);
  }
  return {{"config_echo", config_echo},
          {"per_epoch", per_epoch},
          {"final", final_json(metrics.final)},
          {"empty_groups_skipped", metrics.final.empty_groups_skipped}};
}

json sweep_to_json(sim::SweepAxis axis, sim::Method method, const std::vector<sim::SweepPoint>& rows,
                   const json& config_echo) {
  json runs = json::array();
  std::map<double, std::vector<const sim::SweepPoint*>> by_value;
  std::vector<double> value_order;
  for (const auto& row : rows) {
    json entry = {{"key", format_number(row.value) + "/" + std::to_string(row.seed)},
                  {"value", row.value},
                  {"seed", row.seed},
                  {"final", final_json(row.metrics.final)},
                  {"empty_groups_skipped", row.metrics.final.empty_groups_skipped}};
    if (!row.metrics.per_epoch.empty()) {
      entry["final_weights"] = group_means_json(row.metrics.per_epoch.back().weights);
    }
    runs.push_back(entry);
    if (by_value.find(row.value) == by_value.end()) value_order.push_back(row.value);
    by_value[row.value].push_back(&row);
  }
  json summary = json::array();
  for (double v : value_order) {
    const auto& group = by_value[v];
    double avg = 0.0;
    double worst = 0.0;
    double bc = 0.0;
    std::size_t bc_n = 0;
    for (const auto* p : group) {
      avg += p->metrics.final.avg_acc;
      worst += p->metrics.final.worst_acc;
      if (p->metrics.final.bc_acc) {
        bc += *p->metrics.final.bc_acc;
        ++bc_n;
      }
    }
    const double n = static_cast<double>(group.size());
    summary.push_back({{"value", v},
                       {"avg_acc", round_significant(avg / n)},
                       {"worst_acc", round_significant(worst / n)},
                       {"bc_acc", bc_n ? json(round_significant(bc / static_cast<double>(bc_n))) : json(nullptr)}});
  }
  return {{"axis", sim::axis_name(axis)},
          {"method", sim::method_name(method)},
          {"config_echo", config_echo},
          {"runs", runs},
          {"summary", summary}};
}

std::string weights_csv(const json& run_metrics) {
  if (!run_metrics.contains("per_epoch")) {
    throw Error(ErrorCode::InvalidParams, "weights-csv needs simulate output (per_epoch)");
  }
  auto cell = [](const json& v) { return v.is_null() ? std::string() : format_number(v.get<double>()); };
  std::string out = "epoch,w_ba,w_bc,w_bn\n";
  for (const auto& e : run_metrics["per_epoch"]) {
    out += std::to_string(e.at("epoch").get<std::size_t>()) + "," + cell(e.at("w_ba")) + "," +
           cell(e.at("w_bc")) + "," + cell(e.at("w_bn")) + "\n";
  }
  return out;
}

std::string heatmap_csv(const json& document) {
  auto cell = [](const json& v) { return v.is_null() ? std::string() : format_number(v.get<double>()); };
  std::string out;
  if (document.contains("magnitudes")) {
    const BiasReport r = report_from_json(document);
    for (const auto& label : r.spurious_labels) out += "," + quote_if_needed(label);
    out += '\n';
    for (std::size_t t = 0; t < r.target_labels.size(); ++t) {
      out += quote_if_needed(r.target_labels[t]);
      for (const auto& f : r.features) {
        out += ",";
        if (t < f.corr_scp.size() && f.corr_scp[t]) out += format_number(*f.corr_scp[t]);
      }
      out += '\n';
    }
    return out;
  }
  if (document.contains("summary")) {
    out = "value,bc_acc,avg_acc,worst_acc\n";
    for (const auto& row : document["summary"]) {
      out += format_number(row.at("value").get<double>()) + "," + cell(row.at("bc_acc")) + "," +
             cell(row.at("avg_acc")) + "," + cell(row.at("worst_acc")) + "\n";
    }
    return out;
  }
  throw Error(ErrorCode::InvalidParams, "heatmap-csv needs a bias report or a sweep table");
}

}  // namespace biaslens::io
