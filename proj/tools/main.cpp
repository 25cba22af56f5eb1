#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "ggadmm/engine.hpp"
#include "ggadmm/errors.hpp"
#include "ggadmm/harness.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

int cmd_run(const std::string& spec_path, const std::optional<std::string>& out_dir,
            const std::optional<std::uint64_t>& seed, int threads) {
  ggadmm::ExperimentSpec spec = ggadmm::parse_spec(spec_path);
  if (out_dir) spec.output_dir = *out_dir;
  if (seed) spec.seed = *seed;
  for (const std::string& w : spec.warnings) std::cerr << "warning: " << w << "\n";

  const ggadmm::ExperimentSummary summary = ggadmm::run_experiment(spec, threads);
  std::cout << "wrote " << summary.series_files.size() << " series to " << summary.output_dir
            << " (reference loss " << summary.reference_loss << ")\n";
  for (const ggadmm::SummaryRow& row : summary.rows) {
    std::cout << "  " << row.variant << " @ gap " << row.gap_threshold << ": ";
    if (row.reached)
      std::cout << row.iterations << " iters, " << row.rounds_cum << " rounds, " << row.bits_cum
                << " bits, " << row.energy_cum_j << " J\n";
    else
      std::cout << "not reached\n";
  }
  return 0;
}

int cmd_solve_reference(const std::string& spec_path) {
  const ggadmm::ExperimentSpec spec = ggadmm::parse_spec(spec_path);
  const ggadmm::ExperimentInputs inputs = ggadmm::prepare_experiment(spec);
  for (Eigen::Index i = 0; i < inputs.reference.size(); ++i)
    std::printf("%.12g\n", inputs.reference[i]);
  std::fprintf(stderr, "reference loss: %.12g\n", inputs.reference_loss);
  return 0;
}

int cmd_plot(const std::string& dir) {
  for (const std::string& file : ggadmm::write_plot_panels(dir))
    std::cout << "wrote " << file << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized consensus optimization simulator (GGADMM family)"};
  app.require_subcommand(1);

  std::string spec_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 1;

  CLI::App* run_cmd = app.add_subcommand("run", "Run the algorithm sweep from a spec file");
  run_cmd->add_option("--spec", spec_path, "experiment spec file")->required();
  run_cmd->add_option("--out", out_dir, "output directory (overrides the spec)");
  run_cmd->add_option("--seed", seed, "run seed (overrides the spec)");
  run_cmd->add_option("--threads", threads, "worker threads per phase")->check(CLI::PositiveNumber);

  std::string ref_spec_path;
  CLI::App* ref_cmd =
      app.add_subcommand("solve-reference", "Print the consensus reference solution");
  ref_cmd->add_option("--spec", ref_spec_path, "experiment spec file")->required();

  std::string plot_dir;
  CLI::App* plot_cmd = app.add_subcommand("plot", "Rebuild plot panels from series CSVs");
  plot_cmd->add_option("--dir", plot_dir, "directory holding <variant>.csv files")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return cmd_run(spec_path, out_dir, seed, threads);
    if (ref_cmd->parsed()) return cmd_solve_reference(ref_spec_path);
    if (plot_cmd->parsed()) return cmd_plot(plot_dir);
  } catch (const ggadmm::ConfigParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ggadmm::ConfigValidationError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ggadmm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ggadmm::SchemaError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ggadmm::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ggadmm::InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ggadmm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return 0;
}
