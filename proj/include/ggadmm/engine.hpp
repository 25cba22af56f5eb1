#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ggadmm/compression.hpp"
#include "ggadmm/objectives.hpp"
#include "ggadmm/solvers.hpp"
#include "ggadmm/topology.hpp"

namespace ggadmm {

enum class Variant { ggadmm, c_ggadmm, cq_ggadmm };

std::string to_string(Variant variant);
Variant variant_from_string(const std::string& name);

struct RunConfig {
  Variant variant = Variant::ggadmm;
  double rho = 1.0;
  long max_iters = 1000;
  std::optional<CensorPolicy> censor;  // censored variants; defaults tau0=1, xi=0.97
  std::optional<double> omega;         // cq_ggadmm; default 0.97
  int init_bits = 2;
  std::uint64_t seed = 0;
  NewtonSettings solver;
  std::optional<double> stop_gap;      // needs a reference solution
};

// Per-worker replicated state. neighbor_view[i] is this worker's local copy
// of neighbor topology.neighbors(n)[i]'s last transmitted model; after every
// phase barrier it equals that neighbor's last_sent bit-exactly.
struct WorkerState {
  ModelVector theta;
  ModelVector alpha;
  ModelVector last_sent;
  std::vector<ModelVector> neighbor_view;
  QuantizerState quantizer;  // cq_ggadmm only
};

struct IterationRecord {
  long k = 0;                            // 1-based
  std::vector<std::uint8_t> transmitted; // per worker
  std::vector<long long> bits_sent;      // per worker; 0 when censored
  std::vector<double> primal_residual;   // per edge, ||theta_head - theta_tail||
  std::vector<double> dual_residual;     // per head, ||rho * sum of view changes||
  std::vector<double> quant_step;        // per worker; 0 for exact variants
  std::vector<double> censor_residual;   // per worker, ||candidate - last_sent||
  std::vector<double> total_error;       // per worker, ||theta - last_sent||
};

// Barrier-synchronous iteration engine for the three variants. Heads update
// and broadcast first, then tails, then every worker integrates its dual
// locally; every broadcast goes through the wire codecs and each receiver
// decodes independently. Results are independent of the thread count.
class Engine {
 public:
  Engine(RunConfig config, Topology topology, std::vector<LocalObjective> objectives,
         int n_threads = 1);

  IterationRecord step();

  long iteration() const { return iteration_; }
  Eigen::Index dim() const { return dim_; }
  const Topology& topology() const { return topology_; }
  const RunConfig& config() const { return config_; }
  const std::vector<LocalObjective>& objectives() const { return objectives_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  const WorkerState& worker(int n) const { return workers_[n]; }
  std::vector<WorkerState> snapshot_workers() const { return workers_; }

  std::vector<ModelVector> thetas() const;
  std::vector<ModelVector> alphas() const;
  std::vector<ModelVector> last_sents() const;

  double loss() const;
  double gap(const ModelVector& reference) const;

 private:
  struct Staged {
    ModelVector theta;
    ModelVector candidate;
    std::vector<std::uint8_t> frame;
    QuantizerState quantizer;
    double quant_step = 0.0;
    long long bits = 0;
    bool transmit = false;
  };

  Staged compute_worker(int n, long k) const;
  void commit_worker(int n, Staged&& staged, IterationRecord& rec);
  void run_group(const std::vector<int>& group, long k, IterationRecord& rec);

  RunConfig config_;
  Topology topology_;
  std::vector<LocalObjective> objectives_;
  std::vector<SubproblemSolver> solvers_;
  std::vector<WorkerState> workers_;
  std::vector<ModelVector> prev_last_sent_;
  CensorPolicy censor_;
  double omega_ = 0.97;
  Eigen::Index dim_ = 0;
  long iteration_ = 0;
  int n_threads_ = 1;
  std::vector<std::string> warnings_;
};

// Loops step() until max_iters, invoking the sink after every iteration;
// stops early once |gap| <= stop_gap when both the stop and a reference are
// configured.
using IterationSink = std::function<void(const IterationRecord&, const Engine&)>;
long run(Engine& engine, const IterationSink& sink, const ModelVector* reference = nullptr);

// Minimizer of the summed objective: the consensus solution every variant
// converges to. Linear task solves the stacked normal equations; logistic
// runs full-batch damped Newton to gradient norm 1e-12.
ModelVector reference_solution(const std::vector<LocalObjective>& objectives,
                               const NewtonSettings& settings = {1e-12, 200});

}  // namespace ggadmm
