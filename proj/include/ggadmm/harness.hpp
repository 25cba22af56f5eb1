#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ggadmm/engine.hpp"
#include "ggadmm/metrics.hpp"
#include "ggadmm/objectives.hpp"
#include "ggadmm/topology.hpp"

namespace ggadmm {

struct DatasetSpec {
  enum class Kind { synthetic, csv } kind = Kind::synthetic;
  Eigen::Index samples = 1200;
  Eigen::Index dim = 50;
  double noise_std = 0.1;
  std::string path;
  int label_column = 0;
  bool has_header = false;
};

struct TopologySpec {
  enum class Kind { path, random, file } kind = Kind::random;
  int n = 20;             // path
  int n_heads = 10;       // random
  int n_tails = 10;
  double p = 0.4;
  std::string path;       // file
};

struct ExperimentSpec {
  TaskKind task = TaskKind::linear_regression;
  double mu0 = 0.01;  // logistic ridge; must be 0 for the linear task
  DatasetSpec dataset;
  TopologySpec topology;
  std::vector<RunConfig> algorithms;
  EnergyModel energy;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  std::optional<double> stop_gap;
  std::vector<double> gap_thresholds{1e-4};
  std::vector<std::string> warnings;  // filled by the parser
};

// Plain-text config: "key = value" lines, '#' comments, optional [section]
// headers that prefix the keys below them; every [algo] section starts a new
// algorithm entry (flat algo[i].key works too). Unknown keys are errors.
ExperimentSpec parse_spec(const std::string& path);
ExperimentSpec parse_spec_text(const std::string& text);

// Everything run_experiment derives from a spec before the sweeps start.
struct ExperimentInputs {
  Topology topology;
  std::vector<LocalObjective> objectives;
  ModelVector reference;
  double reference_loss = 0.0;
};

ExperimentInputs prepare_experiment(const ExperimentSpec& spec);

// In-memory run of a single algorithm configuration.
struct SimulationResult {
  std::vector<MetricsRow> series;
  std::vector<WorkerState> final_states;
  long iterations = 0;
};

SimulationResult run_simulation(const RunConfig& config, const Topology& topology,
                                const std::vector<LocalObjective>& objectives,
                                const EnergyModel& energy,
                                const std::optional<ModelVector>& reference, int n_threads = 1);

// Smallest k such that |gap_j| <= threshold for all j >= k through the end
// of the series (sustained reach); nullopt when never reached.
std::optional<std::size_t> reach_index(const std::vector<MetricsRow>& series, double threshold);

struct SummaryRow {
  std::string variant;
  double gap_threshold = 0.0;
  bool reached = false;
  long iterations = 0;
  long long rounds_cum = 0;
  long long bits_cum = 0;
  double energy_cum_j = 0.0;
};

struct ExperimentSummary {
  std::string output_dir;
  std::vector<std::string> series_files;  // one per algorithm, run order
  std::vector<SummaryRow> rows;
  double reference_loss = 0.0;
};

// Runs every configured algorithm, writes <variant>.csv series plus
// summary.csv and the four plot-panel files under spec.output_dir.
ExperimentSummary run_experiment(const ExperimentSpec& spec, int n_threads = 1);

// Rebuilds the panel files from the series CSVs already in the directory.
std::vector<std::string> write_plot_panels(const std::string& dir);

}  // namespace ggadmm
