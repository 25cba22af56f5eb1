#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ggadmm/engine.hpp"
#include "ggadmm/objectives.hpp"
#include "ggadmm/topology.hpp"

namespace ggadmm {

// One CSV row. gap is the signed sum of f_n(theta_n) - f_n(theta*); NaN when
// no reference solution was configured.
struct MetricsRow {
  long k = 0;
  double loss = 0.0;
  double gap = 0.0;
  double primal_res = 0.0;  // max over edges
  double dual_res = 0.0;    // max over heads
  long long rounds_cum = 0; // per-worker transmission events
  long long bits_cum = 0;
  double energy_cum_j = 0.0;
  int censored_count = 0;
};

inline constexpr const char* kMetricsCsvHeader =
    "k,loss,gap,primal_res,dual_res,rounds_cum,bits_cum,energy_cum_J,censored_count";

// Free-space transmission model. With the alternating scheme only half of
// the workers transmit per round, so each one gets twice the even share of
// the total bandwidth.
struct EnergyModel {
  double total_bandwidth_hz = 2e6;
  double noise_psd = 1e-6;  // W/Hz
  double slot_time_s = 1e-3;
  double distance = 1.0;
  enum class Scheme { alternating, parallel } scheme = Scheme::alternating;
};

double bandwidth_per_worker(const EnergyModel& model, int n_workers);

// E = P * tau with P = tau * D^2 * N0 * B * (2^(R/B) - 1), R = bits/tau.
double transmission_energy(long long bits, const EnergyModel& model, double bandwidth_hz);

// Per-edge primal residuals theta_head - theta_tail and per-head dual
// residuals rho * sum over neighbors of (last_sent - prev_last_sent),
// aligned with topology.edges() and topology.heads().
struct ResidualSet {
  std::vector<ModelVector> primal;
  std::vector<ModelVector> dual;
};

ResidualSet residuals(const Topology& topology, const std::vector<ModelVector>& theta,
                      const std::vector<ModelVector>& last_sent,
                      const std::vector<ModelVector>& prev_last_sent, double rho);

// Scalar reductions of a residual family. Plots and MetricsRow use the max;
// the root-sum-square view is the stacked-vector norm.
double max_norm(const std::vector<ModelVector>& vectors);
double rss_norm(const std::vector<ModelVector>& vectors);

// Least-squares recovery of the per-edge duals lambda (head->tail
// orientation) from the per-worker alpha stack; exact whenever alpha lies in
// the incidence column space.
Eigen::MatrixXd recover_edge_duals(const Topology& topology,
                                   const std::vector<ModelVector>& alpha);

// Squared distance of the current duals and tail models to a converged
// reference run, weighted 1/rho and rho; the tail sum runs over edges, so a
// tail counts once per incident edge.
struct LyapunovReference {
  ModelVector theta_star;
  Eigen::MatrixXd lambda_star;  // |E| x d
};

double lyapunov_proxy(const Topology& topology, const std::vector<ModelVector>& theta,
                      const std::vector<ModelVector>& alpha,
                      const std::optional<LyapunovReference>& reference, double rho);

// Least-squares slope of log(series) over the tail half, exponentiated; the
// per-iteration contraction estimate. Throws NonPositiveSeries if the series
// is not strictly positive.
double fit_linear_rate(const std::vector<double>& series);

// Folds iteration records into MetricsRow series with cumulative
// communication and energy accounting.
class MetricsAccumulator {
 public:
  MetricsAccumulator(EnergyModel energy, int n_workers,
                     std::optional<double> reference_loss = std::nullopt);

  MetricsRow consume(const IterationRecord& record, const Engine& engine);
  const std::vector<MetricsRow>& rows() const { return rows_; }

 private:
  EnergyModel energy_;
  double bandwidth_;
  std::optional<double> reference_loss_;
  long long rounds_ = 0;
  long long bits_ = 0;
  double energy_joules_ = 0.0;
  std::vector<MetricsRow> rows_;
};

// Exact schema above, one row per iteration, reals with 12 significant
// digits.
void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_csv(std::istream& in);

}  // namespace ggadmm
