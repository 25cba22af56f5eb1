#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace ggadmm {

using ModelVector = Eigen::VectorXd;

enum class TaskKind { linear_regression, logistic_regression };

std::string to_string(TaskKind kind);
TaskKind task_from_string(const std::string& name);

// Per-worker training data. Regression labels are arbitrary reals,
// classification labels are +-1.
struct DenseDataset {
  Eigen::MatrixXd features;  // s x d
  Eigen::VectorXd labels;    // s

  Eigen::Index sample_count() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
};

// Local cost f_n. Immutable; value/gradient/hessian are pure and reentrant.
//
//   linear:   f(theta) = ||X theta - y||^2 / 2
//   logistic: f(theta) = sum_j log(1 + exp(-y_j x_j^T theta)) / s
//                        + ridge * ||theta||^2 / 2
class LocalObjective {
 public:
  LocalObjective(TaskKind kind, DenseDataset data, double ridge = 0.0);

  double value(const ModelVector& theta) const;
  ModelVector gradient(const ModelVector& theta) const;
  Eigen::MatrixXd hessian(const ModelVector& theta) const;

  TaskKind kind() const { return kind_; }
  const DenseDataset& data() const { return data_; }
  double ridge() const { return ridge_; }
  Eigen::Index dim() const { return data_.dim(); }

 private:
  void check_dim(const ModelVector& theta) const;

  TaskKind kind_;
  DenseDataset data_;
  double ridge_;
};

// Features and the ground-truth model are i.i.d. standard normal; linear
// labels get additive noise, logistic labels are the sign of the noisy
// margin (zero maps to +1). Fully determined by the seed.
std::pair<DenseDataset, ModelVector> generate_synthetic(TaskKind task, Eigen::Index n_samples,
                                                        Eigen::Index dim, double noise_std,
                                                        std::uint64_t seed);

// Contiguous shards in sample order, sizes differing by at most one;
// concatenating the shards reproduces the input. Throws InsufficientData
// when there are fewer samples than workers.
std::vector<DenseDataset> partition_uniform(const DenseDataset& dataset, int n_workers);

struct CsvSchema {
  int label_column = 0;         // 0-based
  bool has_header = false;
  bool classification = false;  // validate labels in {-1,+1}; remap 0/1
};

// Comma-separated numeric file; one label column, the rest are features.
DenseDataset load_csv(const std::string& path, const CsvSchema& schema);
DenseDataset parse_csv(std::istream& in, const CsvSchema& schema);

}  // namespace ggadmm
