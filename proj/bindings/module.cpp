#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

#include "ggadmm/compression.hpp"
#include "ggadmm/engine.hpp"
#include "ggadmm/errors.hpp"
#include "ggadmm/harness.hpp"
#include "ggadmm/metrics.hpp"
#include "ggadmm/rng.hpp"
#include "ggadmm/topology.hpp"

namespace py = pybind11;
using namespace ggadmm;

namespace {

std::vector<std::pair<int, int>> edge_pairs(const Topology& t) {
  std::vector<std::pair<int, int>> out;
  for (const auto& e : t.edges()) out.emplace_back(e.head, e.tail);
  return out;
}

py::dict summary_row_dict(const SummaryRow& row) {
  py::dict d;
  d["variant"] = row.variant;
  d["gap_threshold"] = row.gap_threshold;
  d["reached"] = row.reached;
  if (row.reached) {
    d["iterations"] = row.iterations;
    d["rounds_cum"] = row.rounds_cum;
    d["bits_cum"] = row.bits_cum;
    d["energy_cum_J"] = row.energy_cum_j;
  }
  return d;
}

py::dict metrics_row_dict(const MetricsRow& row) {
  py::dict d;
  d["k"] = row.k;
  d["loss"] = row.loss;
  d["gap"] = row.gap;
  d["primal_res"] = row.primal_res;
  d["dual_res"] = row.dual_res;
  d["rounds_cum"] = row.rounds_cum;
  d["bits_cum"] = row.bits_cum;
  d["energy_cum_J"] = row.energy_cum_j;
  d["censored_count"] = row.censored_count;
  return d;
}

RunConfig make_run_config(const std::string& variant, double rho, long max_iters, double tau0,
                          double xi, double omega, int init_bits, std::uint64_t seed,
                          std::optional<double> stop_gap) {
  RunConfig config;
  config.variant = variant_from_string(variant);
  config.rho = rho;
  config.max_iters = max_iters;
  config.censor = CensorPolicy{tau0, xi};
  config.omega = omega;
  config.init_bits = init_bits;
  config.seed = seed;
  config.stop_gap = stop_gap;
  return config;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Decentralized consensus optimization simulator (GGADMM family)";

  py::register_exception<Error>(m, "GgadmmError");

  // ---- topology ----
  py::class_<Topology>(m, "Topology")
      .def_property_readonly("n_workers", &Topology::n_workers)
      .def_property_readonly("edges", &edge_pairs)
      .def_property_readonly("heads", [](const Topology& t) { return t.heads(); })
      .def_property_readonly("tails", [](const Topology& t) { return t.tails(); })
      .def("neighbors", [](const Topology& t, int w) { return t.neighbors(w); })
      .def("degree", &Topology::degree)
      .def("is_head", &Topology::is_head);

  m.def("build_topology", &build_topology, py::arg("n_workers"), py::arg("edges"));
  m.def("generate_path", &generate_path, py::arg("n_workers"));
  m.def("generate_random_bipartite", &generate_random_bipartite, py::arg("n_heads"),
        py::arg("n_tails"), py::arg("edge_prob"), py::arg("seed"));
  m.def("incidence_set", [](const Topology& t) {
    const IncidenceSet s = incidence_set(t);
    py::dict d;
    d["m_signed"] = s.m_signed;
    d["m_unsigned"] = s.m_unsigned;
    d["degree_matrix"] = s.degree_matrix;
    d["adjacency"] = s.adjacency;
    d["c_block"] = s.c_block;
    return d;
  });

  // ---- objectives ----
  py::class_<DenseDataset>(m, "DenseDataset")
      .def(py::init([](Eigen::MatrixXd features, Eigen::VectorXd labels) {
             return DenseDataset{std::move(features), std::move(labels)};
           }),
           py::arg("features"), py::arg("labels"))
      .def_readonly("features", &DenseDataset::features)
      .def_readonly("labels", &DenseDataset::labels)
      .def_property_readonly("sample_count", &DenseDataset::sample_count)
      .def_property_readonly("dim", &DenseDataset::dim);

  py::class_<LocalObjective>(m, "LocalObjective")
      .def(py::init([](const std::string& kind, DenseDataset data, double ridge) {
             return LocalObjective(task_from_string(kind), std::move(data), ridge);
           }),
           py::arg("kind"), py::arg("data"), py::arg("ridge") = 0.0)
      .def("value", &LocalObjective::value)
      .def("gradient", &LocalObjective::gradient)
      .def_property_readonly("dim", &LocalObjective::dim)
      .def_property_readonly("ridge", &LocalObjective::ridge);

  m.def(
      "generate_synthetic",
      [](const std::string& task, Eigen::Index n, Eigen::Index d, double noise, std::uint64_t seed) {
        auto [ds, truth] = generate_synthetic(task_from_string(task), n, d, noise, seed);
        return py::make_tuple(std::move(ds), std::move(truth));
      },
      py::arg("task"), py::arg("n_samples"), py::arg("dim"), py::arg("noise_std"), py::arg("seed"));
  m.def("partition_uniform", &partition_uniform, py::arg("dataset"), py::arg("n_workers"));
  m.def(
      "load_csv",
      [](const std::string& path, int label_column, bool has_header, bool classification) {
        return load_csv(path, CsvSchema{label_column, has_header, classification});
      },
      py::arg("path"), py::arg("label_column"), py::arg("has_header") = false,
      py::arg("classification") = false);

  // ---- compression ----
  py::class_<QuantizerState>(m, "QuantizerState")
      .def_readonly("prev_reconstruction", &QuantizerState::prev_reconstruction)
      .def_readonly("prev_range", &QuantizerState::prev_range)
      .def_readonly("prev_bits", &QuantizerState::prev_bits)
      .def_readonly("prev_step", &QuantizerState::prev_step)
      .def_readonly("omega", &QuantizerState::omega);

  py::class_<QuantizedPayload>(m, "QuantizedPayload")
      .def_readonly("codes", &QuantizedPayload::codes)
      .def_readonly("range", &QuantizedPayload::range)
      .def_readonly("bits", &QuantizedPayload::bits);

  m.def("initial_quantizer_state", &initial_quantizer_state, py::arg("dim"), py::arg("init_bits"),
        py::arg("omega"));
  m.def(
      "quantize",
      [](const ModelVector& theta, const QuantizerState& state, std::uint64_t seed,
         std::uint64_t worker, std::uint64_t iteration) {
        auto r = quantize(theta, state, rng::stream(seed, worker, iteration));
        return py::make_tuple(std::move(r.payload), std::move(r.reconstruction),
                              std::move(r.state));
      },
      py::arg("theta"), py::arg("state"), py::arg("seed"), py::arg("worker") = 0,
      py::arg("iteration") = 0);
  m.def("reconstruct", &reconstruct, py::arg("payload"), py::arg("prev_reconstruction"));
  m.def("payload_bits", &payload_bits, py::arg("payload"), py::arg("range_bits") = 32,
        py::arg("bits_bits") = 32);
  m.def(
      "censor_decide",
      [](const ModelVector& last_sent, const ModelVector& candidate, long k, double tau0,
         double xi) { return censor_decide(last_sent, candidate, k, CensorPolicy{tau0, xi}); },
      py::arg("last_sent"), py::arg("candidate"), py::arg("k"), py::arg("tau0") = 1.0,
      py::arg("xi") = 0.97);
  m.def("serialize", [](const QuantizedPayload& p) {
    const auto bytes = serialize(p);
    return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  });
  m.def("deserialize", [](const py::bytes& data) {
    const std::string_view view = data;
    return deserialize(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(view.data()), view.size()));
  });

  // ---- engine / metrics ----
  m.def(
      "reference_solution",
      [](const std::vector<LocalObjective>& objectives) { return reference_solution(objectives); },
      py::arg("objectives"));
  m.def("fit_linear_rate", &fit_linear_rate, py::arg("series"));
  m.def(
      "transmission_energy",
      [](long long bits, double bandwidth_hz, double total_bandwidth_hz, double n0, double tau_s,
         double distance) {
        EnergyModel model{total_bandwidth_hz, n0, tau_s, distance};
        return transmission_energy(bits, model, bandwidth_hz);
      },
      py::arg("bits"), py::arg("bandwidth_hz"), py::arg("total_bandwidth_hz") = 2e6,
      py::arg("n0") = 1e-6, py::arg("tau_s") = 1e-3, py::arg("distance") = 1.0);
  m.def(
      "bandwidth_per_worker",
      [](int n_workers, double total_bandwidth_hz, const std::string& scheme) {
        EnergyModel model;
        model.total_bandwidth_hz = total_bandwidth_hz;
        model.scheme = scheme == "parallel" ? EnergyModel::Scheme::parallel
                                            : EnergyModel::Scheme::alternating;
        return bandwidth_per_worker(model, n_workers);
      },
      py::arg("n_workers"), py::arg("total_bandwidth_hz") = 2e6,
      py::arg("scheme") = "alternating");

  m.def(
      "run_simulation",
      [](const std::string& variant, const Topology& topology,
         const std::vector<LocalObjective>& objectives, double rho, long max_iters, double tau0,
         double xi, double omega, int init_bits, std::uint64_t seed,
         std::optional<double> stop_gap, int n_threads) {
        const RunConfig config =
            make_run_config(variant, rho, max_iters, tau0, xi, omega, init_bits, seed, stop_gap);
        const std::optional<ModelVector> reference =
            stop_gap ? std::optional<ModelVector>(reference_solution(objectives)) : std::nullopt;
        const SimulationResult result =
            run_simulation(config, topology, objectives, EnergyModel{}, reference, n_threads);
        py::list rows;
        for (const MetricsRow& row : result.series) rows.append(metrics_row_dict(row));
        py::list thetas;
        for (const WorkerState& w : result.final_states) thetas.append(w.theta);
        py::dict out;
        out["series"] = rows;
        out["thetas"] = thetas;
        out["iterations"] = result.iterations;
        return out;
      },
      py::arg("variant"), py::arg("topology"), py::arg("objectives"), py::arg("rho") = 1.0,
      py::arg("max_iters") = 1000, py::arg("tau0") = 1.0, py::arg("xi") = 0.97,
      py::arg("omega") = 0.97, py::arg("init_bits") = 2, py::arg("seed") = 0,
      py::arg("stop_gap") = std::nullopt, py::arg("n_threads") = 1);

  // ---- harness ----
  m.def("parse_spec_text", [](const std::string& text) {
    const ExperimentSpec spec = parse_spec_text(text);
    py::dict d;
    d["task"] = to_string(spec.task);
    d["seed"] = spec.seed;
    d["output_dir"] = spec.output_dir;
    d["n_algorithms"] = spec.algorithms.size();
    d["gap_thresholds"] = spec.gap_thresholds;
    return d;
  });
  m.def(
      "run_experiment",
      [](const std::string& spec_path, std::optional<std::string> out_dir,
         std::optional<std::uint64_t> seed, int n_threads) {
        ExperimentSpec spec = parse_spec(spec_path);
        if (out_dir) spec.output_dir = *out_dir;
        if (seed) spec.seed = *seed;
        const ExperimentSummary summary = run_experiment(spec, n_threads);
        py::dict d;
        d["output_dir"] = summary.output_dir;
        d["series_files"] = summary.series_files;
        d["reference_loss"] = summary.reference_loss;
        py::list rows;
        for (const SummaryRow& row : summary.rows) rows.append(summary_row_dict(row));
        d["rows"] = rows;
        return d;
      },
      py::arg("spec_path"), py::arg("out_dir") = std::nullopt, py::arg("seed") = std::nullopt,
      py::arg("n_threads") = 1);
}
