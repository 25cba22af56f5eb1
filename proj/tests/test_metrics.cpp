#include "ggadmm/metrics.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ggadmm/errors.hpp"
#include "ggadmm/harness.hpp"
#include "ggadmm/rng.hpp"

using namespace ggadmm;

namespace {

LocalObjective quadratic(const ModelVector& center) {
  DenseDataset ds;
  ds.features = Eigen::MatrixXd::Identity(center.size(), center.size());
  ds.labels = center;
  return {TaskKind::linear_regression, std::move(ds)};
}

std::vector<LocalObjective> line_of_quadratics(int n, Eigen::Index d, std::uint64_t seed) {
  std::vector<LocalObjective> objs;
  const auto stream = rng::stream(seed, 0, 0);
  for (int w = 0; w < n; ++w) {
    ModelVector c(d);
    for (Eigen::Index i = 0; i < d; ++i)
      c[i] = stream.normal(static_cast<std::uint64_t>(w) * d + i);
    objs.push_back(quadratic(c));
  }
  return objs;
}

std::vector<ModelVector> scalars(std::initializer_list<double> values) {
  std::vector<ModelVector> out;
  for (double v : values) {
    ModelVector m(1);
    m << v;
    out.push_back(m);
  }
  return out;
}

}  // namespace

TEST_CASE("residual desk cases") {
  const Topology k2 = build_topology(2, {{0, 1}});

  SUBCASE("consensus means zero primal residuals") {
    const auto r = residuals(k2, scalars({1.5, 1.5}), scalars({1.5, 1.5}), scalars({1.5, 1.5}), 1.0);
    CHECK(r.primal[0](0) == 0.0);
  }
  SUBCASE("no transmission means zero dual residuals") {
    const auto r = residuals(k2, scalars({1.0, 3.0}), scalars({0.7, 0.4}), scalars({0.7, 0.4}), 2.0);
    CHECK(r.dual[0](0) == 0.0);
  }
  SUBCASE("head-minus-tail orientation") {
    const auto r = residuals(k2, scalars({1.0, 3.0}), scalars({1.0, 3.0}), scalars({0.0, 0.0}), 1.0);
    CHECK(r.primal[0](0) == -2.0);
    CHECK(r.dual[0](0) == 3.0);  // rho * (3 - 0) at the head's only neighbor
  }
  SUBCASE("norm reductions") {
    const auto family = scalars({3.0, -4.0});
    CHECK(max_norm(family) == 4.0);
    CHECK(rss_norm(family) == 5.0);
  }
}

TEST_CASE("bandwidth per worker") {
  EnergyModel model;  // 2 MHz total, alternating
  CHECK(bandwidth_per_worker(model, 20) == doctest::Approx(2e5));
  model.scheme = EnergyModel::Scheme::parallel;
  CHECK(bandwidth_per_worker(model, 20) == doctest::Approx(1e5));
  model.scheme = EnergyModel::Scheme::alternating;
  CHECK(bandwidth_per_worker(model, 1) == doctest::Approx(4e6));
}

TEST_CASE("transmission energy formula") {
  const EnergyModel model;  // tau 1e-3, N0 1e-6, D 1
  SUBCASE("spot value") {
    const double e = transmission_energy(1600, model, 2e5);
    CHECK(std::abs(e - 5.1e-5) <= 5.1e-5 * 1e-12);
  }
  SUBCASE("zero bits cost nothing") {
    CHECK(transmission_energy(0, model, 2e5) == 0.0);
  }
  SUBCASE("doubling the distance quadruples the energy") {
    EnergyModel far = model;
    far.distance = 2.0;
    CHECK(transmission_energy(1600, far, 2e5) ==
          doctest::Approx(4.0 * transmission_energy(1600, model, 2e5)));
  }
  SUBCASE("monotone in bits") {
    double prev = 0.0;
    for (long long bits : {0, 10, 100, 1000, 10000}) {
      const double e = transmission_energy(bits, model, 2e5);
      CHECK(e >= prev);
      prev = e;
    }
  }
}

TEST_CASE("edge dual recovery inverts the incidence map") {
  const Topology t = generate_random_bipartite(3, 3, 0.7, 31);
  const Eigen::MatrixXd incidence = oriented_incidence(t);
  const auto stream = rng::stream(3, 3, 3);
  Eigen::MatrixXd lambda(t.edges().size(), 2);
  for (Eigen::Index e = 0; e < lambda.rows(); ++e)
    for (Eigen::Index j = 0; j < 2; ++j) lambda(e, j) = stream.normal(e * 2 + j);

  const Eigen::MatrixXd stacked = incidence * lambda;
  std::vector<ModelVector> alpha;
  for (int w = 0; w < t.n_workers(); ++w) alpha.push_back(stacked.row(w).transpose());

  const Eigen::MatrixXd recovered = recover_edge_duals(t, alpha);
  CHECK((incidence * recovered - stacked).norm() <= 1e-10);
}

TEST_CASE("lyapunov proxy") {
  const Topology path3 = generate_path(3);  // heads {0,2}, tail {1} with degree 2
  const double rho = 1.3;

  LyapunovReference ref;
  ref.theta_star = ModelVector::Zero(1);
  ref.theta_star(0) = 0.8;
  ref.lambda_star = Eigen::MatrixXd::Zero(2, 1);
  ref.lambda_star << 0.25, -0.5;

  const Eigen::MatrixXd incidence = oriented_incidence(path3);
  const Eigen::MatrixXd stacked = incidence * ref.lambda_star;
  std::vector<ModelVector> alpha;
  for (int w = 0; w < 3; ++w) alpha.push_back(stacked.row(w).transpose());

  SUBCASE("zero at the reference itself") {
    const auto theta = scalars({0.8, 0.8, 0.8});
    CHECK(lyapunov_proxy(path3, theta, alpha, ref, rho) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("tail perturbation scales with its edge multiplicity") {
    const double delta = 0.05;
    const auto theta = scalars({0.8, 0.8 + delta, 0.8});
    CHECK(lyapunov_proxy(path3, theta, alpha, ref, rho) ==
          doctest::Approx(rho * 2.0 * delta * delta).epsilon(1e-9));
  }
  SUBCASE("missing reference") {
    const auto theta = scalars({0.8, 0.8, 0.8});
    CHECK_THROWS_AS(lyapunov_proxy(path3, theta, alpha, std::nullopt, rho), MissingReference);
  }
}

TEST_CASE("lyapunov series on a converging run has a decreasing envelope") {
  const auto objectives = line_of_quadratics(6, 2, 47);
  const Topology topology = generate_path(6);

  RunConfig config;
  config.variant = Variant::ggadmm;
  config.max_iters = 400;
  Engine engine(config, topology, objectives);
  std::vector<std::vector<ModelVector>> theta_series, alpha_series;
  for (int k = 0; k < 400; ++k) {
    engine.step();
    theta_series.push_back(engine.thetas());
    alpha_series.push_back(engine.alphas());
  }

  LyapunovReference ref;
  ref.theta_star = reference_solution(objectives);
  ref.lambda_star = recover_edge_duals(topology, engine.alphas());

  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < theta_series.size(); ++k) {
    const double v = lyapunov_proxy(topology, theta_series[k], alpha_series[k], ref, 1.0);
    CHECK(v <= prev * (1.0 + 1e-9) + 1e-15);
    prev = v;
  }
}

TEST_CASE("linear rate fit") {
  std::vector<double> geometric;
  for (int k = 0; k < 60; ++k) geometric.push_back(3.0 * std::pow(0.9, k));
  CHECK(std::abs(fit_linear_rate(geometric) - 0.9) <= 1e-6);

  std::vector<double> constant(25, 4.2);
  CHECK(fit_linear_rate(constant) == doctest::Approx(1.0).epsilon(1e-12));

  std::vector<double> with_zero(25, 1.0);
  with_zero[20] = 0.0;
  CHECK_THROWS_AS(fit_linear_rate(with_zero), NonPositiveSeries);
  CHECK_THROWS_AS(fit_linear_rate(std::vector<double>(5, 1.0)), InvalidArgument);
}

TEST_CASE("accumulator counts rounds, bits and energy exactly") {
  const auto objectives = line_of_quadratics(4, 3, 77);
  const Topology topology = generate_path(4);

  RunConfig config;
  config.variant = Variant::cq_ggadmm;
  config.seed = 2;
  config.censor = CensorPolicy{1.0, 0.9};
  config.max_iters = 120;
  Engine engine(config, topology, objectives);

  EnergyModel energy;
  MetricsAccumulator acc(energy, 4);
  const double bandwidth = bandwidth_per_worker(energy, 4);

  long long rounds = 0, bits = 0;
  double joules = 0.0;
  for (int k = 0; k < 120; ++k) {
    const IterationRecord rec = engine.step();
    int sent = 0;
    for (int w = 0; w < 4; ++w) {
      if (!rec.transmitted[w]) {
        CHECK(rec.bits_sent[w] == 0);
        continue;
      }
      ++sent;
      bits += rec.bits_sent[w];
      joules += transmission_energy(rec.bits_sent[w], energy, bandwidth);
    }
    rounds += sent;
    const MetricsRow row = acc.consume(rec, engine);
    CHECK(row.rounds_cum == rounds);
    CHECK(row.bits_cum == bits);
    CHECK(row.energy_cum_j == doctest::Approx(joules).epsilon(1e-12));
    CHECK(row.censored_count == 4 - sent);
    CHECK(row.k == k + 1);
  }
  // cumulative columns never decrease
  const auto& rows = acc.rows();
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].rounds_cum >= rows[i - 1].rounds_cum);
    CHECK(rows[i].bits_cum >= rows[i - 1].bits_cum);
    CHECK(rows[i].energy_cum_j >= rows[i - 1].energy_cum_j);
  }
}

TEST_CASE("engine residual records agree with an independent recomputation") {
  const auto objectives = line_of_quadratics(7, 3, 91);
  const Topology topology = generate_random_bipartite(4, 3, 0.6, 91);

  RunConfig config;
  config.variant = Variant::cq_ggadmm;
  config.seed = 8;
  config.censor = CensorPolicy{1.0, 0.92};
  config.omega = 0.92;
  config.max_iters = 50;
  Engine engine(config, topology, objectives);
  for (int k = 0; k < 50; ++k) {
    const auto prev_sent = engine.last_sents();
    const IterationRecord rec = engine.step();
    const ResidualSet rs =
        residuals(topology, engine.thetas(), engine.last_sents(), prev_sent, config.rho);
    REQUIRE(rs.primal.size() == rec.primal_residual.size());
    REQUIRE(rs.dual.size() == rec.dual_residual.size());
    for (std::size_t e = 0; e < rs.primal.size(); ++e)
      CHECK(rs.primal[e].norm() == doctest::Approx(rec.primal_residual[e]).epsilon(1e-12));
    for (std::size_t h = 0; h < rs.dual.size(); ++h)
      CHECK(rs.dual[h].norm() == doctest::Approx(rec.dual_residual[h]).epsilon(1e-12));
  }
}

TEST_CASE("ggadmm gap magnitude decays monotonically on strongly convex quadratics") {
  const auto objectives = line_of_quadratics(6, 3, 13);
  const ModelVector reference = reference_solution(objectives);
  const auto result = run_simulation(RunConfig{Variant::ggadmm, 1.0, 500}, generate_path(6),
                                     objectives, EnergyModel{}, reference);

  REQUIRE(result.series.size() == 500);
  // absolute slack covers ulp jitter of the fully converged loss sum
  for (std::size_t i = 2; i < result.series.size(); ++i)
    CHECK(std::abs(result.series[i].gap) <=
          std::abs(result.series[i - 1].gap) * (1.0 + 1e-9) + 1e-13);
  CHECK(std::abs(result.series.back().gap) <= 1e-10);
}

TEST_CASE("metrics csv round-trip with the exact header") {
  std::vector<MetricsRow> rows(2);
  rows[0] = {1, 0.5, 0.25, 0.125, 0.0625, 4, 656, 6.5e-7, 0};
  rows[1] = {2, 0.25, 0.125, 0.0625, 0.03125, 8, 1312, 1.3e-6, 2};

  std::stringstream io;
  write_metrics_csv(io, rows);
  std::string header;
  std::getline(io, header);
  CHECK(header == "k,loss,gap,primal_res,dual_res,rounds_cum,bits_cum,energy_cum_J,censored_count");

  io.clear();
  io.seekg(0);
  const auto back = read_metrics_csv(io);
  REQUIRE(back.size() == 2);
  CHECK(back[1].k == 2);
  CHECK(back[1].loss == 0.25);
  CHECK(back[1].bits_cum == 1312);
  CHECK(back[1].censored_count == 2);

  std::stringstream bad("wrong,header\n");
  CHECK_THROWS_AS(read_metrics_csv(bad), ParseError);
}
