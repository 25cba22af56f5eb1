#include "ggadmm/harness.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>

#include "ggadmm/errors.hpp"

namespace ggadmm {

namespace {

namespace fs = std::filesystem;

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

double parse_real(const std::string& value, long line) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    throw ConfigParseError("expected a number, got '" + value + "'", line);
  return out;
}

long long parse_int(const std::string& value, long line) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    throw ConfigParseError("expected an integer, got '" + value + "'", line);
  return out;
}

bool parse_bool(const std::string& value, long line) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigParseError("expected a boolean, got '" + value + "'", line);
}

struct AlgoDraft {
  RunConfig config;
  bool censor_seen = false;
  bool omega_seen = false;
};

// Splits "algo[3].rho" into index 3 and field "rho".
bool parse_algo_key(const std::string& key, std::size_t& index, std::string& field, long line) {
  if (key.rfind("algo[", 0) != 0) return false;
  const auto close = key.find(']');
  if (close == std::string::npos || close + 1 >= key.size() || key[close + 1] != '.')
    throw ConfigParseError("malformed algorithm key '" + key + "'", line);
  const std::string idx = key.substr(5, close - 5);
  index = static_cast<std::size_t>(parse_int(idx, line));
  if (index > 63) throw ConfigParseError("algorithm index out of range", line);
  field = key.substr(close + 2);
  return true;
}

void apply_algo_key(AlgoDraft& draft, const std::string& field, const std::string& value,
                    long line) {
  RunConfig& cfg = draft.config;
  if (field == "variant") {
    try {
      cfg.variant = variant_from_string(value);
    } catch (const InvalidArgument& e) {
      throw ConfigParseError(e.what(), line);
    }
  } else if (field == "rho") {
    cfg.rho = parse_real(value, line);
  } else if (field == "tau0") {
    if (!cfg.censor) cfg.censor = CensorPolicy{};
    cfg.censor->tau0 = parse_real(value, line);
    draft.censor_seen = true;
  } else if (field == "xi") {
    if (!cfg.censor) cfg.censor = CensorPolicy{};
    cfg.censor->xi = parse_real(value, line);
    draft.censor_seen = true;
  } else if (field == "omega") {
    cfg.omega = parse_real(value, line);
    draft.omega_seen = true;
  } else if (field == "init_bits") {
    cfg.init_bits = static_cast<int>(parse_int(value, line));
  } else if (field == "max_iters") {
    cfg.max_iters = static_cast<long>(parse_int(value, line));
  } else if (field == "grad_tol") {
    cfg.solver.grad_tol = parse_real(value, line);
  } else if (field == "newton_max_iters") {
    cfg.solver.max_iters = static_cast<int>(parse_int(value, line));
  } else {
    throw ConfigParseError("unknown algorithm key '" + field + "'", line);
  }
}

void validate(ExperimentSpec& spec, const std::vector<AlgoDraft>& drafts) {
  if (spec.task == TaskKind::linear_regression) spec.mu0 = 0.0;
  if (spec.task == TaskKind::logistic_regression && !(spec.mu0 >= 0.0))
    throw ConfigValidationError("mu0 must be nonnegative");

  if (spec.dataset.kind == DatasetSpec::Kind::synthetic) {
    if (spec.dataset.samples < 1 || spec.dataset.dim < 1)
      throw ConfigValidationError("dataset needs samples >= 1 and dim >= 1");
    if (spec.dataset.noise_std < 0.0)
      throw ConfigValidationError("dataset.noise_std must be nonnegative");
  } else if (spec.dataset.path.empty()) {
    throw ConfigValidationError("dataset.kind = csv needs dataset.path");
  }

  switch (spec.topology.kind) {
    case TopologySpec::Kind::path:
      if (spec.topology.n < 2) throw ConfigValidationError("topology.n must be >= 2");
      break;
    case TopologySpec::Kind::random:
      if (spec.topology.n_heads < 1 || spec.topology.n_tails < 1)
        throw ConfigValidationError("topology needs n_heads >= 1 and n_tails >= 1");
      if (!(spec.topology.p > 0.0) || spec.topology.p > 1.0)
        throw ConfigValidationError("topology.p must be in (0, 1]");
      break;
    case TopologySpec::Kind::file:
      if (spec.topology.path.empty())
        throw ConfigValidationError("topology.kind = file needs topology.path");
      break;
  }

  if (spec.algorithms.empty())
    throw ConfigValidationError("spec needs at least one [algo] section");
  for (std::size_t i = 0; i < spec.algorithms.size(); ++i) {
    const RunConfig& cfg = spec.algorithms[i];
    const std::string where = "algo[" + std::to_string(i) + "]";
    if (!(cfg.rho > 0.0)) throw ConfigValidationError(where + ".rho must be positive");
    if (cfg.max_iters < 0) throw ConfigValidationError(where + ".max_iters must be >= 0");
    if (cfg.init_bits < 1 || cfg.init_bits > 32)
      throw ConfigValidationError(where + ".init_bits must be in [1, 32]");
    if (cfg.censor) {
      if (!(cfg.censor->tau0 > 0.0))
        throw ConfigValidationError(where + ".tau0 must be positive");
      if (!(cfg.censor->xi > 0.0 && cfg.censor->xi < 1.0))
        throw ConfigValidationError(where + ".xi must be in (0, 1)");
    }
    if (cfg.omega && !(*cfg.omega > 0.0 && *cfg.omega < 1.0))
      throw ConfigValidationError(where + ".omega must be in (0, 1)");
    if (!(cfg.solver.grad_tol > 0.0))
      throw ConfigValidationError(where + ".grad_tol must be positive");
    if (cfg.solver.max_iters < 1)
      throw ConfigValidationError(where + ".newton_max_iters must be >= 1");
    if (cfg.variant == Variant::ggadmm && drafts[i].censor_seen)
      spec.warnings.push_back(where + ": ggadmm transmits every round; censoring keys ignored");
    if (cfg.variant != Variant::cq_ggadmm && drafts[i].omega_seen)
      spec.warnings.push_back(where + ": omega only applies to cq_ggadmm; ignored");
  }

  if (!(spec.energy.total_bandwidth_hz > 0.0) || !(spec.energy.noise_psd > 0.0) ||
      !(spec.energy.slot_time_s > 0.0) || !(spec.energy.distance > 0.0))
    throw ConfigValidationError("energy parameters must be positive");
  for (double t : spec.gap_thresholds)
    if (!(t > 0.0)) throw ConfigValidationError("gap thresholds must be positive");
  if (spec.stop_gap && !(*spec.stop_gap > 0.0))
    throw ConfigValidationError("stop_gap must be positive");
}

}  // namespace

ExperimentSpec parse_spec_text(const std::string& text) {
  ExperimentSpec spec;
  std::vector<AlgoDraft> drafts;
  bool mu0_set = false;

  std::istringstream in(text);
  std::string line;
  std::string section;
  long line_no = 0;
  std::optional<std::size_t> section_algo;  // active [algo] entry

  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;

    if (stripped.front() == '[') {
      if (stripped.back() != ']') throw ConfigParseError("unterminated section header", line_no);
      section = trim(std::string_view(stripped).substr(1, stripped.size() - 2));
      if (section == "algo") {
        drafts.emplace_back();
        section_algo = drafts.size() - 1;
      } else if (section == "dataset" || section == "topology" || section == "energy" ||
                 section == "summary") {
        section_algo.reset();
      } else {
        throw ConfigParseError("unknown section '" + section + "'", line_no);
      }
      continue;
    }

    const auto eq = stripped.find('=');
    if (eq == std::string::npos) throw ConfigParseError("expected 'key = value'", line_no);
    std::string key = trim(std::string_view(stripped).substr(0, eq));
    const std::string value = trim(std::string_view(stripped).substr(eq + 1));
    if (key.empty() || value.empty()) throw ConfigParseError("expected 'key = value'", line_no);

    // Section headers are shorthand for dotted keys.
    if (!section.empty() && key.find('.') == std::string::npos && key.rfind("algo[", 0) != 0) {
      if (section_algo) {
        apply_algo_key(drafts[*section_algo], key, value, line_no);
        continue;
      }
      key = section + "." + key;
    }

    std::size_t algo_index = 0;
    std::string algo_field;
    if (parse_algo_key(key, algo_index, algo_field, line_no)) {
      if (algo_index >= drafts.size()) {
        if (algo_index != drafts.size())
          throw ConfigParseError("algorithm indices must be contiguous", line_no);
        drafts.emplace_back();
      }
      apply_algo_key(drafts[algo_index], algo_field, value, line_no);
      continue;
    }

    if (key == "task") {
      try {
        spec.task = task_from_string(value);
      } catch (const InvalidArgument& e) {
        throw ConfigParseError(e.what(), line_no);
      }
    } else if (key == "mu0") {
      spec.mu0 = parse_real(value, line_no);
      mu0_set = true;
    } else if (key == "seed") {
      spec.seed = static_cast<std::uint64_t>(parse_int(value, line_no));
    } else if (key == "stop_gap") {
      spec.stop_gap = parse_real(value, line_no);
    } else if (key == "output_dir") {
      spec.output_dir = value;
    } else if (key == "dataset.kind") {
      if (value == "synthetic")
        spec.dataset.kind = DatasetSpec::Kind::synthetic;
      else if (value == "csv")
        spec.dataset.kind = DatasetSpec::Kind::csv;
      else
        throw ConfigParseError("dataset.kind must be synthetic or csv", line_no);
    } else if (key == "dataset.samples") {
      spec.dataset.samples = static_cast<Eigen::Index>(parse_int(value, line_no));
    } else if (key == "dataset.dim") {
      spec.dataset.dim = static_cast<Eigen::Index>(parse_int(value, line_no));
    } else if (key == "dataset.noise_std") {
      spec.dataset.noise_std = parse_real(value, line_no);
    } else if (key == "dataset.path") {
      spec.dataset.path = value;
    } else if (key == "dataset.label_column") {
      spec.dataset.label_column = static_cast<int>(parse_int(value, line_no));
    } else if (key == "dataset.has_header") {
      spec.dataset.has_header = parse_bool(value, line_no);
    } else if (key == "topology.kind") {
      if (value == "path")
        spec.topology.kind = TopologySpec::Kind::path;
      else if (value == "random")
        spec.topology.kind = TopologySpec::Kind::random;
      else if (value == "file")
        spec.topology.kind = TopologySpec::Kind::file;
      else
        throw ConfigParseError("topology.kind must be path, random or file", line_no);
    } else if (key == "topology.n") {
      spec.topology.n = static_cast<int>(parse_int(value, line_no));
    } else if (key == "topology.n_heads") {
      spec.topology.n_heads = static_cast<int>(parse_int(value, line_no));
    } else if (key == "topology.n_tails") {
      spec.topology.n_tails = static_cast<int>(parse_int(value, line_no));
    } else if (key == "topology.p") {
      spec.topology.p = parse_real(value, line_no);
    } else if (key == "topology.path") {
      spec.topology.path = value;
    } else if (key == "energy.bandwidth_hz") {
      spec.energy.total_bandwidth_hz = parse_real(value, line_no);
    } else if (key == "energy.n0") {
      spec.energy.noise_psd = parse_real(value, line_no);
    } else if (key == "energy.tau_s") {
      spec.energy.slot_time_s = parse_real(value, line_no);
    } else if (key == "energy.distance") {
      spec.energy.distance = parse_real(value, line_no);
    } else if (key == "energy.scheme") {
      if (value == "alternating")
        spec.energy.scheme = EnergyModel::Scheme::alternating;
      else if (value == "parallel")
        spec.energy.scheme = EnergyModel::Scheme::parallel;
      else
        throw ConfigParseError("energy.scheme must be alternating or parallel", line_no);
    } else if (key == "summary.gap_thresholds") {
      spec.gap_thresholds.clear();
      std::istringstream items(value);
      std::string item;
      while (std::getline(items, item, ','))
        spec.gap_thresholds.push_back(parse_real(trim(item), line_no));
      if (spec.gap_thresholds.empty())
        throw ConfigParseError("summary.gap_thresholds needs at least one value", line_no);
    } else {
      throw ConfigParseError("unknown key '" + key + "'", line_no);
    }
  }

  if (spec.task == TaskKind::linear_regression && mu0_set && spec.mu0 != 0.0)
    throw ConfigValidationError("mu0 applies to the logistic task only");
  spec.algorithms.clear();
  for (const AlgoDraft& d : drafts) spec.algorithms.push_back(d.config);
  validate(spec, drafts);
  return spec;
}

ExperimentSpec parse_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigParseError("cannot open spec file '" + path + "'", 0);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_spec_text(text.str());
}

ExperimentInputs prepare_experiment(const ExperimentSpec& spec) {
  DenseDataset dataset;
  if (spec.dataset.kind == DatasetSpec::Kind::synthetic) {
    dataset = generate_synthetic(spec.task, spec.dataset.samples, spec.dataset.dim,
                                 spec.dataset.noise_std, spec.seed)
                  .first;
  } else {
    dataset = load_csv(spec.dataset.path,
                       CsvSchema{spec.dataset.label_column, spec.dataset.has_header,
                                 spec.task == TaskKind::logistic_regression});
  }

  ExperimentInputs inputs;
  switch (spec.topology.kind) {
    case TopologySpec::Kind::path:
      inputs.topology = generate_path(spec.topology.n);
      break;
    case TopologySpec::Kind::random:
      inputs.topology = generate_random_bipartite(spec.topology.n_heads, spec.topology.n_tails,
                                                  spec.topology.p, spec.seed);
      break;
    case TopologySpec::Kind::file: {
      std::ifstream in(spec.topology.path);
      if (!in) throw ConfigValidationError("cannot open topology file '" + spec.topology.path + "'");
      const auto edges = read_edge_list(in);
      int max_id = -1;
      for (const auto& [u, v] : edges) max_id = std::max({max_id, u, v});
      inputs.topology = build_topology(max_id + 1, edges);
      break;
    }
  }

  const auto shards = partition_uniform(dataset, inputs.topology.n_workers());
  inputs.objectives.reserve(shards.size());
  for (auto& shard : shards)
    inputs.objectives.emplace_back(spec.task, std::move(shard),
                                   spec.task == TaskKind::logistic_regression ? spec.mu0 : 0.0);

  inputs.reference = reference_solution(inputs.objectives);
  inputs.reference_loss = 0.0;
  for (const auto& obj : inputs.objectives) inputs.reference_loss += obj.value(inputs.reference);
  return inputs;
}

SimulationResult run_simulation(const RunConfig& config, const Topology& topology,
                                const std::vector<LocalObjective>& objectives,
                                const EnergyModel& energy,
                                const std::optional<ModelVector>& reference, int n_threads) {
  Engine engine(config, topology, objectives, n_threads);
  std::optional<double> reference_loss;
  if (reference) {
    double sum = 0.0;
    for (const auto& obj : objectives) sum += obj.value(*reference);
    reference_loss = sum;
  }
  MetricsAccumulator accumulator(energy, topology.n_workers(), reference_loss);

  SimulationResult result;
  result.iterations =
      run(engine, [&](const IterationRecord& rec, const Engine& e) { accumulator.consume(rec, e); },
          reference ? &*reference : nullptr);
  result.series = accumulator.rows();
  result.final_states = engine.snapshot_workers();
  return result;
}

std::optional<std::size_t> reach_index(const std::vector<MetricsRow>& series, double threshold) {
  std::optional<std::size_t> first;
  for (std::size_t i = series.size(); i-- > 0;) {
    if (std::abs(series[i].gap) <= threshold && std::isfinite(series[i].gap))
      first = i;
    else
      break;
  }
  return first;
}

namespace {

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "variant,gap_threshold,iterations,rounds_cum,bits_cum,energy_cum_J\n";
  for (const SummaryRow& r : rows) {
    out << r.variant << ',' << format_real(r.gap_threshold) << ',';
    if (r.reached)
      out << r.iterations << ',' << r.rounds_cum << ',' << r.bits_cum << ','
          << format_real(r.energy_cum_j);
    else
      out << "not_reached,not_reached,not_reached,not_reached";
    out << "\n";
  }
}

struct PanelAxis {
  const char* file;
  const char* column;
};

constexpr PanelAxis kPanels[] = {
    {"panel_iterations.csv", "k"},
    {"panel_rounds.csv", "rounds_cum"},
    {"panel_bits.csv", "bits_cum"},
    {"panel_energy.csv", "energy_cum_J"},
};

void write_panels(const std::string& dir,
                  const std::vector<std::pair<std::string, std::vector<MetricsRow>>>& series) {
  for (const PanelAxis& panel : kPanels) {
    std::ofstream out(fs::path(dir) / panel.file, std::ios::binary);
    out << "variant," << panel.column << ",gap\n";
    for (const auto& [name, rows] : series) {
      for (const MetricsRow& r : rows) {
        out << name << ',';
        if (panel.column == std::string_view("k"))
          out << r.k;
        else if (panel.column == std::string_view("rounds_cum"))
          out << r.rounds_cum;
        else if (panel.column == std::string_view("bits_cum"))
          out << r.bits_cum;
        else
          out << format_real(r.energy_cum_j);
        out << ',' << format_real(r.gap) << "\n";
      }
    }
  }
}

}  // namespace

ExperimentSummary run_experiment(const ExperimentSpec& spec, int n_threads) {
  const ExperimentInputs inputs = prepare_experiment(spec);

  fs::create_directories(spec.output_dir);
  ExperimentSummary summary;
  summary.output_dir = spec.output_dir;
  summary.reference_loss = inputs.reference_loss;

  std::vector<std::pair<std::string, std::vector<MetricsRow>>> all_series;
  std::map<std::string, int> name_uses;
  for (const RunConfig& algo : spec.algorithms) {
    RunConfig config = algo;
    config.seed = spec.seed;
    if (!config.stop_gap) config.stop_gap = spec.stop_gap;

    SimulationResult result;
    try {
      result = run_simulation(config, inputs.topology, inputs.objectives, spec.energy,
                              inputs.reference, n_threads);
    } catch (const Error& e) {
      throw Error("variant " + to_string(config.variant) + ": " + e.what());
    }

    std::string name = to_string(config.variant);
    const int uses = ++name_uses[name];
    if (uses > 1) name += "_" + std::to_string(uses);

    const fs::path series_path = fs::path(spec.output_dir) / (name + ".csv");
    {
      std::ofstream out(series_path, std::ios::binary);
      write_metrics_csv(out, result.series);
    }
    summary.series_files.push_back(series_path.string());

    for (double threshold : spec.gap_thresholds) {
      SummaryRow row;
      row.variant = name;
      row.gap_threshold = threshold;
      if (const auto idx = reach_index(result.series, threshold)) {
        const MetricsRow& at = result.series[*idx];
        row.reached = true;
        row.iterations = at.k;
        row.rounds_cum = at.rounds_cum;
        row.bits_cum = at.bits_cum;
        row.energy_cum_j = at.energy_cum_j;
      }
      summary.rows.push_back(row);
    }
    all_series.emplace_back(name, std::move(result.series));
  }

  {
    std::ofstream out(fs::path(spec.output_dir) / "summary.csv", std::ios::binary);
    write_summary_csv(out, summary.rows);
  }
  // panels list the variants in name order, matching regeneration from disk
  std::sort(all_series.begin(), all_series.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  write_panels(spec.output_dir, all_series);
  return summary;
}

std::vector<std::string> write_plot_panels(const std::string& dir) {
  std::vector<std::pair<std::string, std::vector<MetricsRow>>> series;
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
    const std::string stem = entry.path().stem().string();
    if (stem == "summary" || stem.rfind("panel_", 0) == 0) continue;
    names.push_back(entry.path().string());
  }
  std::sort(names.begin(), names.end());
  for (const std::string& file : names) {
    std::ifstream in(file);
    series.emplace_back(fs::path(file).stem().string(), read_metrics_csv(in));
  }
  if (series.empty()) throw InvalidArgument("no series CSV files under '" + dir + "'");
  write_panels(dir, series);

  std::vector<std::string> written;
  for (const PanelAxis& panel : kPanels) written.push_back((fs::path(dir) / panel.file).string());
  return written;
}

}  // namespace ggadmm
