#include "ggadmm/solvers.hpp"

#include <cassert>
#include <cmath>
#include <limits>
#include <utility>

#include "ggadmm/errors.hpp"

namespace ggadmm {

SubproblemSolver::SubproblemSolver(const LocalObjective& objective, double quad_coeff,
                                   NewtonSettings settings)
    : objective_(&objective), quad_coeff_(quad_coeff), settings_(settings) {
  if (!(quad_coeff > 0.0)) throw InvalidArgument("quad_coeff must be positive");
  if (!(settings_.grad_tol > 0.0)) throw InvalidArgument("grad_tol must be positive");
  if (settings_.max_iters < 1) throw InvalidArgument("max_iters must be positive");

  if (objective.kind() == TaskKind::linear_regression) {
    const Eigen::MatrixXd& x = objective.data().features;
    Eigen::MatrixXd normal = x.transpose() * x;
    normal.diagonal().array() += quad_coeff;
    cached_normal_.compute(normal);
    // quad_coeff > 0 makes the normal matrix positive definite.
    assert(cached_normal_.info() == Eigen::Success);
    cached_xty_ = x.transpose() * objective.data().labels;
  }
}

ModelVector SubproblemSolver::solve(const ModelVector& linear_term,
                                    const ModelVector& warm_start) const {
  if (linear_term.size() != objective_->dim() || warm_start.size() != objective_->dim())
    throw DimensionMismatch("subproblem vectors do not match the objective dimension");
  if (objective_->kind() == TaskKind::linear_regression)
    return cached_normal_.solve(cached_xty_ - linear_term);
  return solve_newton(linear_term, warm_start);
}

ModelVector SubproblemSolver::solve_newton(const ModelVector& linear_term,
                                           const ModelVector& warm_start) const {
  const auto value = [&](const ModelVector& theta) {
    return objective_->value(theta) + linear_term.dot(theta) +
           0.5 * quad_coeff_ * theta.squaredNorm();
  };

  ModelVector theta = warm_start;
  double current = value(theta);
  for (int iter = 0; iter < settings_.max_iters; ++iter) {
    const ModelVector grad = objective_->gradient(theta) + linear_term + quad_coeff_ * theta;
    const double grad_norm = grad.norm();
    if (grad_norm <= settings_.grad_tol) return theta;

    Eigen::MatrixXd hess = objective_->hessian(theta);
    hess.diagonal().array() += quad_coeff_;
    const Eigen::LLT<Eigen::MatrixXd> llt(hess);
    assert(llt.info() == Eigen::Success);
    const ModelVector direction = llt.solve(-grad);

    // Backtracking halving on the subproblem value.
    double step = 1.0;
    bool accepted = false;
    ModelVector best;
    double best_value = current;
    for (int halving = 0; halving < 30; ++halving) {
      ModelVector candidate = theta + step * direction;
      const double candidate_value = value(candidate);
      if (candidate_value <= current) {
        accepted = true;
        best = std::move(candidate);
        best_value = candidate_value;
        break;
      }
      step *= 0.5;
    }

    // Near the precision floor the value comparison loses resolution before
    // the gradient does; once progress falls under ulp noise, take the full
    // step whenever it shrinks the gradient.
    const double noise = 8.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(current));
    if (!accepted || current - best_value <= noise) {
      ModelVector full = theta + direction;
      const double full_norm =
          (objective_->gradient(full) + linear_term + quad_coeff_ * full).norm();
      if (full_norm < grad_norm) {
        theta = std::move(full);
        current = value(theta);
        continue;
      }
    }
    if (accepted) {
      theta = std::move(best);
      current = best_value;
    }
  }
  const ModelVector grad = objective_->gradient(theta) + linear_term + quad_coeff_ * theta;
  if (grad.norm() <= settings_.grad_tol) return theta;
  throw NoConverge("subproblem Newton did not reach grad_tol", settings_.max_iters);
}

ModelVector solve_subproblem(const SubproblemSpec& spec, const ModelVector& warm_start,
                             const NewtonSettings& settings) {
  if (spec.objective == nullptr) throw InvalidArgument("subproblem has no objective");
  return SubproblemSolver(*spec.objective, spec.quad_coeff, settings)
      .solve(spec.linear_term, warm_start);
}

}  // namespace ggadmm
