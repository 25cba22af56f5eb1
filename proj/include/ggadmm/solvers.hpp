#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "ggadmm/objectives.hpp"

namespace ggadmm {

struct NewtonSettings {
  double grad_tol = 1e-10;
  int max_iters = 50;
};

// One penalized subproblem
//   minimize  f(theta) + <theta, linear_term> + quad_coeff/2 * ||theta||^2
// with quad_coeff = rho * degree. quad_coeff > 0 keeps it strongly convex.
struct SubproblemSpec {
  const LocalObjective* objective = nullptr;
  ModelVector linear_term;
  double quad_coeff = 0.0;
};

// Per-worker solver. The linear-regression normal matrix is iteration
// independent, so its Cholesky factor is computed once here and reused for
// every solve; the logistic path runs damped Newton from the warm start.
// solve() is const and safe to call concurrently for distinct workers.
class SubproblemSolver {
 public:
  SubproblemSolver(const LocalObjective& objective, double quad_coeff,
                   NewtonSettings settings = {});

  // Returned theta satisfies ||grad f(theta) + linear_term + quad_coeff*theta||
  // <= grad_tol (exactly solved modulo roundoff on the linear path).
  ModelVector solve(const ModelVector& linear_term, const ModelVector& warm_start) const;

  double quad_coeff() const { return quad_coeff_; }

 private:
  ModelVector solve_newton(const ModelVector& linear_term, const ModelVector& warm_start) const;

  const LocalObjective* objective_;
  double quad_coeff_;
  NewtonSettings settings_;
  Eigen::LLT<Eigen::MatrixXd> cached_normal_;  // linear kind only
  ModelVector cached_xty_;
};

// One-shot form; builds a solver and discards it.
ModelVector solve_subproblem(const SubproblemSpec& spec, const ModelVector& warm_start,
                             const NewtonSettings& settings = {});

}  // namespace ggadmm
