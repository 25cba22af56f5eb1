#include "ggadmm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "ggadmm/errors.hpp"

namespace ggadmm {

double bandwidth_per_worker(const EnergyModel& model, int n_workers) {
  if (n_workers < 1) throw InvalidArgument("need at least one worker");
  if (!(model.total_bandwidth_hz > 0.0)) throw InvalidArgument("bandwidth must be positive");
  const double share = model.total_bandwidth_hz / static_cast<double>(n_workers);
  return model.scheme == EnergyModel::Scheme::alternating ? 2.0 * share : share;
}

double transmission_energy(long long bits, const EnergyModel& model, double bandwidth_hz) {
  if (bits < 0) throw InvalidArgument("bits must be nonnegative");
  if (!(bandwidth_hz > 0.0)) throw InvalidArgument("bandwidth must be positive");
  const double rate = static_cast<double>(bits) / model.slot_time_s;
  const double power = model.slot_time_s * model.distance * model.distance * model.noise_psd *
                       bandwidth_hz * (std::exp2(rate / bandwidth_hz) - 1.0);
  return power * model.slot_time_s;
}

ResidualSet residuals(const Topology& topology, const std::vector<ModelVector>& theta,
                      const std::vector<ModelVector>& last_sent,
                      const std::vector<ModelVector>& prev_last_sent, double rho) {
  ResidualSet out;
  out.primal.reserve(topology.edges().size());
  for (const auto& [head, tail] : topology.edges())
    out.primal.push_back(theta[head] - theta[tail]);
  out.dual.reserve(topology.heads().size());
  for (int h : topology.heads()) {
    ModelVector change = ModelVector::Zero(theta.front().size());
    for (int m : topology.neighbors(h)) change += last_sent[m] - prev_last_sent[m];
    out.dual.push_back(rho * change);
  }
  return out;
}

double max_norm(const std::vector<ModelVector>& vectors) {
  double out = 0.0;
  for (const ModelVector& v : vectors) out = std::max(out, v.norm());
  return out;
}

double rss_norm(const std::vector<ModelVector>& vectors) {
  double sum = 0.0;
  for (const ModelVector& v : vectors) sum += v.squaredNorm();
  return std::sqrt(sum);
}

Eigen::MatrixXd recover_edge_duals(const Topology& topology,
                                   const std::vector<ModelVector>& alpha) {
  const Eigen::Index d = alpha.front().size();
  Eigen::MatrixXd stacked(topology.n_workers(), d);
  for (int w = 0; w < topology.n_workers(); ++w) stacked.row(w) = alpha[w].transpose();
  const Eigen::MatrixXd incidence = oriented_incidence(topology);
  return incidence.completeOrthogonalDecomposition().solve(stacked);
}

double lyapunov_proxy(const Topology& topology, const std::vector<ModelVector>& theta,
                      const std::vector<ModelVector>& alpha,
                      const std::optional<LyapunovReference>& reference, double rho) {
  if (!reference) throw MissingReference("lyapunov proxy needs a converged reference run");
  if (!(rho > 0.0)) throw InvalidArgument("rho must be positive");
  const Eigen::MatrixXd lambda = recover_edge_duals(topology, alpha);
  if (lambda.rows() != reference->lambda_star.rows() ||
      lambda.cols() != reference->lambda_star.cols())
    throw DimensionMismatch("reference duals do not match the topology");

  double value = (lambda - reference->lambda_star).squaredNorm() / rho;
  for (const auto& edge : topology.edges())
    value += rho * (theta[edge.tail] - reference->theta_star).squaredNorm();
  return value;
}

double fit_linear_rate(const std::vector<double>& series) {
  if (series.size() < 20) throw InvalidArgument("need a series of at least 20 points");
  const std::size_t start = series.size() / 2;
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = start; i < series.size(); ++i) {
    if (!(series[i] > 0.0)) throw NonPositiveSeries("series must be strictly positive");
    mean_x += static_cast<double>(i);
    mean_y += std::log(series[i]);
  }
  const double count = static_cast<double>(series.size() - start);
  mean_x /= count;
  mean_y /= count;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = start; i < series.size(); ++i) {
    const double dx = static_cast<double>(i) - mean_x;
    sxy += dx * (std::log(series[i]) - mean_y);
    sxx += dx * dx;
  }
  return std::exp(sxy / sxx);
}

MetricsAccumulator::MetricsAccumulator(EnergyModel energy, int n_workers,
                                       std::optional<double> reference_loss)
    : energy_(energy),
      bandwidth_(bandwidth_per_worker(energy, n_workers)),
      reference_loss_(reference_loss) {}

MetricsRow MetricsAccumulator::consume(const IterationRecord& record, const Engine& engine) {
  MetricsRow row;
  row.k = record.k;
  row.loss = engine.loss();
  row.gap = reference_loss_ ? row.loss - *reference_loss_
                            : std::numeric_limits<double>::quiet_NaN();
  row.primal_res = 0.0;
  for (double r : record.primal_residual) row.primal_res = std::max(row.primal_res, r);
  row.dual_res = 0.0;
  for (double s : record.dual_residual) row.dual_res = std::max(row.dual_res, s);

  int transmitted = 0;
  for (std::size_t w = 0; w < record.transmitted.size(); ++w) {
    if (!record.transmitted[w]) continue;
    ++transmitted;
    bits_ += record.bits_sent[w];
    energy_joules_ += transmission_energy(record.bits_sent[w], energy_, bandwidth_);
  }
  rounds_ += transmitted;
  row.rounds_cum = rounds_;
  row.bits_cum = bits_;
  row.energy_cum_j = energy_joules_;
  row.censored_count = static_cast<int>(record.transmitted.size()) - transmitted;
  rows_.push_back(row);
  return row;
}

namespace {

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << kMetricsCsvHeader << "\n";
  for (const MetricsRow& r : rows) {
    out << r.k << ',' << format_real(r.loss) << ',' << format_real(r.gap) << ','
        << format_real(r.primal_res) << ',' << format_real(r.dual_res) << ',' << r.rounds_cum
        << ',' << r.bits_cum << ',' << format_real(r.energy_cum_j) << ',' << r.censored_count
        << "\n";
  }
}

std::vector<MetricsRow> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty metrics file", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kMetricsCsvHeader) throw ParseError("unexpected metrics header '" + line + "'", 1);

  std::vector<MetricsRow> rows;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    MetricsRow r;
    if (!(fields >> r.k >> r.loss >> r.gap >> r.primal_res >> r.dual_res >> r.rounds_cum >>
          r.bits_cum >> r.energy_cum_j >> r.censored_count))
      throw ParseError("malformed metrics row", line_no);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace ggadmm
