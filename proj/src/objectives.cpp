#include "ggadmm/objectives.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>

#include "ggadmm/errors.hpp"
#include "ggadmm/rng.hpp"

namespace ggadmm {

namespace {

// log(1 + exp(t)) without overflow for large |t|.
double softplus(double t) {
  if (t > 0.0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

}  // namespace

std::string to_string(TaskKind kind) {
  return kind == TaskKind::linear_regression ? "linear" : "logistic";
}

TaskKind task_from_string(const std::string& name) {
  if (name == "linear") return TaskKind::linear_regression;
  if (name == "logistic") return TaskKind::logistic_regression;
  throw InvalidArgument("unknown task '" + name + "' (expected linear or logistic)");
}

LocalObjective::LocalObjective(TaskKind kind, DenseDataset data, double ridge)
    : kind_(kind), data_(std::move(data)), ridge_(ridge) {
  if (data_.dim() < 1) throw InvalidArgument("objective needs at least one feature column");
  if (data_.features.rows() != data_.labels.size())
    throw DimensionMismatch("feature rows and label length differ");
  if (ridge_ < 0.0) throw InvalidArgument("ridge must be nonnegative");
  if (kind_ == TaskKind::linear_regression && ridge_ != 0.0)
    throw InvalidArgument("linear regression carries no ridge term");
  if (kind_ == TaskKind::logistic_regression)
    for (Eigen::Index j = 0; j < data_.labels.size(); ++j)
      if (data_.labels[j] != 1.0 && data_.labels[j] != -1.0)
        throw InvalidArgument("classification labels must be -1 or +1");
}

void LocalObjective::check_dim(const ModelVector& theta) const {
  if (theta.size() != data_.dim())
    throw DimensionMismatch("model has dimension " + std::to_string(theta.size()) +
                            ", data expects " + std::to_string(data_.dim()));
}

double LocalObjective::value(const ModelVector& theta) const {
  check_dim(theta);
  if (kind_ == TaskKind::linear_regression)
    return 0.5 * (data_.features * theta - data_.labels).squaredNorm();

  const Eigen::VectorXd margins = data_.features * theta;
  double sum = 0.0;
  for (Eigen::Index j = 0; j < margins.size(); ++j)
    sum += softplus(-data_.labels[j] * margins[j]);
  return sum / static_cast<double>(data_.sample_count()) + 0.5 * ridge_ * theta.squaredNorm();
}

ModelVector LocalObjective::gradient(const ModelVector& theta) const {
  check_dim(theta);
  if (kind_ == TaskKind::linear_regression)
    return data_.features.transpose() * (data_.features * theta - data_.labels);

  const Eigen::VectorXd margins = data_.features * theta;
  Eigen::VectorXd weights(margins.size());
  for (Eigen::Index j = 0; j < margins.size(); ++j)
    weights[j] = -data_.labels[j] * sigmoid(-data_.labels[j] * margins[j]);
  return data_.features.transpose() * weights / static_cast<double>(data_.sample_count()) +
         ridge_ * theta;
}

Eigen::MatrixXd LocalObjective::hessian(const ModelVector& theta) const {
  check_dim(theta);
  const Eigen::Index d = data_.dim();
  if (kind_ == TaskKind::linear_regression)
    return data_.features.transpose() * data_.features;

  const Eigen::VectorXd margins = data_.features * theta;
  Eigen::VectorXd weights(margins.size());
  for (Eigen::Index j = 0; j < margins.size(); ++j) {
    const double s = sigmoid(-data_.labels[j] * margins[j]);
    weights[j] = s * (1.0 - s);
  }
  return data_.features.transpose() * weights.asDiagonal() * data_.features /
             static_cast<double>(data_.sample_count()) +
         ridge_ * Eigen::MatrixXd::Identity(d, d);
}

std::pair<DenseDataset, ModelVector> generate_synthetic(TaskKind task, Eigen::Index n_samples,
                                                        Eigen::Index dim, double noise_std,
                                                        std::uint64_t seed) {
  if (n_samples < 1 || dim < 1) throw InvalidArgument("need n_samples >= 1 and dim >= 1");
  if (noise_std < 0.0) throw InvalidArgument("noise_std must be nonnegative");

  const auto features_stream = rng::stream(seed, 1, 0);
  const auto truth_stream = rng::stream(seed, 2, 0);
  const auto noise_stream = rng::stream(seed, 3, 0);

  DenseDataset ds;
  ds.features.resize(n_samples, dim);
  for (Eigen::Index i = 0; i < n_samples; ++i)
    for (Eigen::Index j = 0; j < dim; ++j)
      ds.features(i, j) = features_stream.normal(static_cast<std::uint64_t>(i * dim + j));

  ModelVector truth(dim);
  for (Eigen::Index j = 0; j < dim; ++j)
    truth[j] = truth_stream.normal(static_cast<std::uint64_t>(j));

  Eigen::VectorXd noisy = ds.features * truth;
  for (Eigen::Index i = 0; i < n_samples; ++i)
    noisy[i] += noise_std * noise_stream.normal(static_cast<std::uint64_t>(i));

  if (task == TaskKind::linear_regression) {
    ds.labels = noisy;
  } else {
    ds.labels.resize(n_samples);
    for (Eigen::Index i = 0; i < n_samples; ++i) ds.labels[i] = noisy[i] >= 0.0 ? 1.0 : -1.0;
  }
  return {std::move(ds), std::move(truth)};
}

std::vector<DenseDataset> partition_uniform(const DenseDataset& dataset, int n_workers) {
  if (n_workers < 1) throw InvalidArgument("need at least one worker");
  const Eigen::Index s = dataset.sample_count();
  if (s < n_workers)
    throw InsufficientData(std::to_string(s) + " samples cannot cover " +
                           std::to_string(n_workers) + " workers");

  std::vector<DenseDataset> shards;
  shards.reserve(n_workers);
  const Eigen::Index base = s / n_workers;
  const Eigen::Index remainder = s % n_workers;
  Eigen::Index offset = 0;
  for (int w = 0; w < n_workers; ++w) {
    const Eigen::Index rows = base + (w < remainder ? 1 : 0);
    shards.push_back({dataset.features.middleRows(offset, rows),
                      dataset.labels.segment(offset, rows)});
    offset += rows;
  }
  return shards;
}

namespace {

double parse_field(std::string_view field, long line_no) {
  while (!field.empty() && std::isspace(static_cast<unsigned char>(field.front())))
    field.remove_prefix(1);
  while (!field.empty() && std::isspace(static_cast<unsigned char>(field.back())))
    field.remove_suffix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw ParseError("non-numeric field '" + std::string(field) + "'", line_no);
  return value;
}

}  // namespace

DenseDataset parse_csv(std::istream& in, const CsvSchema& schema) {
  std::vector<std::vector<double>> rows;
  std::string line;
  long line_no = 0;
  bool header_pending = schema.has_header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::size_t end = comma == std::string::npos ? line.size() : comma;
      row.push_back(parse_field(std::string_view(line).substr(start, end - start), line_no));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError("expected " + std::to_string(rows.front().size()) + " fields, got " +
                           std::to_string(row.size()),
                       line_no);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw SchemaError("no data rows");

  const int n_cols = static_cast<int>(rows.front().size());
  if (schema.label_column < 0 || schema.label_column >= n_cols)
    throw SchemaError("label_column " + std::to_string(schema.label_column) +
                      " out of range for " + std::to_string(n_cols) + " columns");
  if (n_cols < 2) throw SchemaError("need at least one feature column besides the label");

  DenseDataset ds;
  ds.features.resize(static_cast<Eigen::Index>(rows.size()), n_cols - 1);
  ds.labels.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    int out = 0;
    for (int c = 0; c < n_cols; ++c) {
      if (c == schema.label_column)
        ds.labels[static_cast<Eigen::Index>(i)] = rows[i][c];
      else
        ds.features(static_cast<Eigen::Index>(i), out++) = rows[i][c];
    }
  }
  if (schema.classification) {
    for (Eigen::Index i = 0; i < ds.labels.size(); ++i) {
      double& y = ds.labels[i];
      if (y == 0.0) y = -1.0;
      if (y != 1.0 && y != -1.0)
        throw SchemaError("classification label " + std::to_string(y) +
                          " is not in {-1, 0, +1}");
    }
  }
  return ds;
}

DenseDataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  return parse_csv(in, schema);
}

}  // namespace ggadmm
