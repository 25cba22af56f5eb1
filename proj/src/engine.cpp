#include "ggadmm/engine.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <exception>
#include <thread>

#include "ggadmm/errors.hpp"
#include "ggadmm/rng.hpp"

namespace ggadmm {

std::string to_string(Variant variant) {
  switch (variant) {
    case Variant::ggadmm: return "ggadmm";
    case Variant::c_ggadmm: return "c_ggadmm";
    case Variant::cq_ggadmm: return "cq_ggadmm";
  }
  return "?";
}

Variant variant_from_string(const std::string& name) {
  if (name == "ggadmm") return Variant::ggadmm;
  if (name == "c_ggadmm") return Variant::c_ggadmm;
  if (name == "cq_ggadmm") return Variant::cq_ggadmm;
  throw InvalidArgument("unknown variant '" + name +
                        "' (expected ggadmm, c_ggadmm or cq_ggadmm)");
}

Engine::Engine(RunConfig config, Topology topology, std::vector<LocalObjective> objectives,
               int n_threads)
    : config_(std::move(config)),
      topology_(std::move(topology)),
      objectives_(std::move(objectives)),
      n_threads_(std::max(1, n_threads)) {
  const int n = topology_.n_workers();
  if (static_cast<int>(objectives_.size()) != n)
    throw ConfigError("got " + std::to_string(objectives_.size()) + " objectives for " +
                      std::to_string(n) + " workers");
  dim_ = objectives_.front().dim();
  for (const auto& obj : objectives_)
    if (obj.dim() != dim_) throw ConfigError("objectives disagree on the model dimension");

  if (!(config_.rho > 0.0)) throw ConfigError("rho must be positive");
  if (config_.max_iters < 0) throw ConfigError("max_iters must be nonnegative");
  if (config_.init_bits < 1 || config_.init_bits > 32)
    throw ConfigError("init_bits must be in [1, 32]");

  const bool censored = config_.variant != Variant::ggadmm;
  if (censored) {
    censor_ = config_.censor.value_or(CensorPolicy{});
    if (!(censor_.tau0 > 0.0)) throw ConfigError("tau0 must be positive");
    if (!(censor_.xi > 0.0 && censor_.xi < 1.0)) throw ConfigError("xi must be in (0, 1)");
  } else if (config_.censor.has_value()) {
    warnings_.push_back("variant ggadmm transmits every round; censoring parameters ignored");
  }
  if (config_.variant == Variant::cq_ggadmm) {
    omega_ = config_.omega.value_or(0.97);
    if (!(omega_ > 0.0 && omega_ < 1.0)) throw ConfigError("omega must be in (0, 1)");
  } else if (config_.omega.has_value()) {
    warnings_.push_back("variant " + to_string(config_.variant) +
                        " does not quantize; omega ignored");
  }

  solvers_.reserve(objectives_.size());
  workers_.resize(n);
  for (int w = 0; w < n; ++w) {
    solvers_.emplace_back(objectives_[w], config_.rho * topology_.degree(w), config_.solver);
    workers_[w].theta = ModelVector::Zero(dim_);
    workers_[w].alpha = ModelVector::Zero(dim_);
    workers_[w].last_sent = ModelVector::Zero(dim_);
    workers_[w].neighbor_view.assign(topology_.neighbors(w).size(), ModelVector::Zero(dim_));
    if (config_.variant == Variant::cq_ggadmm)
      workers_[w].quantizer = initial_quantizer_state(dim_, config_.init_bits, omega_);
  }
  prev_last_sent_.resize(n);
}

Engine::Staged Engine::compute_worker(int n, long k) const {
  const WorkerState& w = workers_[n];
  ModelVector neighbor_sum = ModelVector::Zero(dim_);
  for (const ModelVector& view : w.neighbor_view) neighbor_sum += view;
  const ModelVector linear_term = w.alpha - config_.rho * neighbor_sum;

  Staged staged;
  staged.theta = solvers_[n].solve(linear_term, w.theta);

  switch (config_.variant) {
    case Variant::ggadmm:
      staged.candidate = staged.theta;
      staged.transmit = true;
      break;
    case Variant::c_ggadmm:
      staged.candidate = staged.theta;
      staged.transmit = censor_decide(w.last_sent, staged.candidate, k, censor_);
      break;
    case Variant::cq_ggadmm: {
      auto result = quantize(staged.theta, w.quantizer,
                             rng::stream(config_.seed, static_cast<std::uint64_t>(n),
                                         static_cast<std::uint64_t>(k)));
      staged.candidate = std::move(result.reconstruction);
      staged.quantizer = std::move(result.state);
      staged.quant_step = staged.quantizer.prev_step;
      staged.transmit = censor_decide(w.last_sent, staged.candidate, k, censor_);
      if (staged.transmit) {
        staged.frame = serialize(result.payload);
        staged.bits = payload_bits(result.payload);
      }
      break;
    }
  }
  if (staged.transmit && config_.variant != Variant::cq_ggadmm) {
    staged.frame = serialize_model(staged.candidate);
    staged.bits = full_precision_bits(dim_);
  }
  return staged;
}

void Engine::commit_worker(int n, Staged&& staged, IterationRecord& rec) {
  WorkerState& w = workers_[n];
  w.theta = std::move(staged.theta);
  rec.quant_step[n] = staged.quant_step;

  if (config_.variant == Variant::cq_ggadmm) {
    if (staged.transmit) {
      w.quantizer = staged.quantizer;
    } else {
      // Censored: the step-size chain still advances, the shared base stays.
      w.quantizer.prev_range = staged.quantizer.prev_range;
      w.quantizer.prev_bits = staged.quantizer.prev_bits;
      w.quantizer.prev_step = staged.quantizer.prev_step;
    }
  }

  if (staged.transmit) {
    rec.transmitted[n] = 1;
    rec.bits_sent[n] = staged.bits;
    // Every receiver (and the sender's own last_sent) decodes the frame
    // independently from its replicated copy of the previous transmission.
    if (config_.variant == Variant::cq_ggadmm) {
      const QuantizedPayload payload = deserialize(staged.frame);
      w.last_sent = reconstruct(payload, w.last_sent);
      const auto& neighbors = topology_.neighbors(n);
      for (std::size_t i = 0; i < neighbors.size(); ++i) {
        WorkerState& peer = workers_[neighbors[i]];
        const auto& peer_neighbors = topology_.neighbors(neighbors[i]);
        const auto slot = std::lower_bound(peer_neighbors.begin(), peer_neighbors.end(), n) -
                          peer_neighbors.begin();
        peer.neighbor_view[slot] = reconstruct(payload, peer.neighbor_view[slot]);
      }
    } else {
      const ModelVector decoded = deserialize_model(staged.frame);
      w.last_sent = decoded;
      const auto& neighbors = topology_.neighbors(n);
      for (int m : neighbors) {
        WorkerState& peer = workers_[m];
        const auto& peer_neighbors = topology_.neighbors(m);
        const auto slot = std::lower_bound(peer_neighbors.begin(), peer_neighbors.end(), n) -
                          peer_neighbors.begin();
        peer.neighbor_view[slot] = decoded;
      }
    }
  }
  rec.censor_residual[n] = (staged.candidate - w.last_sent).norm();
  rec.total_error[n] = (w.theta - w.last_sent).norm();
}

void Engine::run_group(const std::vector<int>& group, long k, IterationRecord& rec) {
  std::vector<Staged> staged(group.size());
  if (n_threads_ <= 1 || group.size() <= 1) {
    for (std::size_t i = 0; i < group.size(); ++i) staged[i] = compute_worker(group[i], k);
  } else {
    const std::size_t n_chunks = std::min<std::size_t>(n_threads_, group.size());
    std::vector<std::exception_ptr> errors(group.size());
    std::vector<std::thread> pool;
    pool.reserve(n_chunks);
    for (std::size_t c = 0; c < n_chunks; ++c) {
      pool.emplace_back([&, c] {
        for (std::size_t i = c; i < group.size(); i += n_chunks) {
          try {
            staged[i] = compute_worker(group[i], k);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  // Commits run serially in id order so results never depend on scheduling.
  for (std::size_t i = 0; i < group.size(); ++i) commit_worker(group[i], std::move(staged[i]), rec);
}

IterationRecord Engine::step() {
  const long k = iteration_;
  const int n = topology_.n_workers();

  IterationRecord rec;
  rec.k = k + 1;
  rec.transmitted.assign(n, 0);
  rec.bits_sent.assign(n, 0);
  rec.quant_step.assign(n, 0.0);
  rec.censor_residual.assign(n, 0.0);
  rec.total_error.assign(n, 0.0);

  for (int w = 0; w < n; ++w) prev_last_sent_[w] = workers_[w].last_sent;

  run_group(topology_.heads(), k, rec);
  run_group(topology_.tails(), k, rec);

  // Dual update from local transmissions only.
  for (int w = 0; w < n; ++w) {
    WorkerState& worker = workers_[w];
    ModelVector disagreement = ModelVector::Zero(dim_);
    for (std::size_t i = 0; i < worker.neighbor_view.size(); ++i)
      disagreement += worker.last_sent - worker.neighbor_view[i];
    worker.alpha += config_.rho * disagreement;
  }

  rec.primal_residual.reserve(topology_.edges().size());
  for (const auto& [head, tail] : topology_.edges())
    rec.primal_residual.push_back((workers_[head].theta - workers_[tail].theta).norm());
  rec.dual_residual.reserve(topology_.heads().size());
  for (int h : topology_.heads()) {
    ModelVector change = ModelVector::Zero(dim_);
    for (int m : topology_.neighbors(h))
      change += workers_[m].last_sent - prev_last_sent_[m];
    rec.dual_residual.push_back(config_.rho * change.norm());
  }

  ++iteration_;
  return rec;
}

std::vector<ModelVector> Engine::thetas() const {
  std::vector<ModelVector> out;
  out.reserve(workers_.size());
  for (const auto& w : workers_) out.push_back(w.theta);
  return out;
}

std::vector<ModelVector> Engine::alphas() const {
  std::vector<ModelVector> out;
  out.reserve(workers_.size());
  for (const auto& w : workers_) out.push_back(w.alpha);
  return out;
}

std::vector<ModelVector> Engine::last_sents() const {
  std::vector<ModelVector> out;
  out.reserve(workers_.size());
  for (const auto& w : workers_) out.push_back(w.last_sent);
  return out;
}

double Engine::loss() const {
  double sum = 0.0;
  for (std::size_t w = 0; w < workers_.size(); ++w) sum += objectives_[w].value(workers_[w].theta);
  return sum;
}

double Engine::gap(const ModelVector& reference) const {
  double sum = 0.0;
  for (std::size_t w = 0; w < workers_.size(); ++w)
    sum += objectives_[w].value(workers_[w].theta) - objectives_[w].value(reference);
  return sum;
}

long run(Engine& engine, const IterationSink& sink, const ModelVector* reference) {
  const RunConfig& config = engine.config();
  long iterations = 0;
  int below = 0;  // the signed gap crosses zero in transients; require a
                  // sustained stay under stop_gap before stopping
  for (long k = 0; k < config.max_iters; ++k) {
    const IterationRecord rec = engine.step();
    ++iterations;
    if (sink) sink(rec, engine);
    if (config.stop_gap && reference != nullptr) {
      below = std::abs(engine.gap(*reference)) <= *config.stop_gap ? below + 1 : 0;
      if (below >= 8) break;
    }
  }
  return iterations;
}

ModelVector reference_solution(const std::vector<LocalObjective>& objectives,
                               const NewtonSettings& settings) {
  if (objectives.empty()) throw InvalidArgument("no objectives");
  const Eigen::Index d = objectives.front().dim();
  for (const auto& obj : objectives)
    if (obj.dim() != d) throw DimensionMismatch("objectives disagree on the model dimension");

  if (objectives.front().kind() == TaskKind::linear_regression) {
    Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
    for (const auto& obj : objectives) {
      normal.noalias() += obj.data().features.transpose() * obj.data().features;
      rhs.noalias() += obj.data().features.transpose() * obj.data().labels;
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(normal);
    if (llt.info() != Eigen::Success)
      throw SingularSystem("stacked normal matrix is not positive definite");
    const Eigen::VectorXd solution = llt.solve(rhs);
    const double scale = normal.norm() * solution.norm() + rhs.norm();
    if ((normal * solution - rhs).norm() > 1e-8 * scale + 1e-300)
      throw SingularSystem("stacked normal system is numerically singular");
    return solution;
  }

  const auto total_value = [&](const ModelVector& theta) {
    double sum = 0.0;
    for (const auto& obj : objectives) sum += obj.value(theta);
    return sum;
  };

  ModelVector theta = ModelVector::Zero(d);
  double current = total_value(theta);
  for (int iter = 0; iter < settings.max_iters; ++iter) {
    ModelVector grad = ModelVector::Zero(d);
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(d, d);
    for (const auto& obj : objectives) {
      grad += obj.gradient(theta);
      hess += obj.hessian(theta);
    }
    if (grad.norm() <= settings.grad_tol) return theta;
    const Eigen::LLT<Eigen::MatrixXd> llt(hess);
    if (llt.info() != Eigen::Success)
      throw SingularSystem("global Hessian is not positive definite; is the ridge positive?");
    const ModelVector direction = llt.solve(-grad);
    double step = 1.0;
    for (int halving = 0; halving < 30; ++halving) {
      const ModelVector candidate = theta + step * direction;
      const double candidate_value = total_value(candidate);
      if (candidate_value <= current) {
        theta = candidate;
        current = candidate_value;
        break;
      }
      step *= 0.5;
    }
  }
  ModelVector grad = ModelVector::Zero(d);
  for (const auto& obj : objectives) grad += obj.gradient(theta);
  if (grad.norm() <= settings.grad_tol) return theta;
  throw NoConverge("reference Newton did not reach grad_tol", settings.max_iters);
}

}  // namespace ggadmm
