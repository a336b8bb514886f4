// hamlearn: learn Hamiltonians from trajectory bursts and evaluate them.
//
//   hamlearn run      [--preset NAME | --config FILE] [--seed N] [--out DIR]
//   hamlearn converge [--preset NAME | --config FILE] [--steps 8e-3,4e-3,...]
//   hamlearn compare  [--preset NAME | --config FILE]
//   hamlearn presets
//
// Exit status: 0 success, 2 configuration error, 3 numerical or I/O failure.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hamlearn/experiment.hpp"
#include "hamlearn/io.hpp"

namespace {

constexpr int kConfigExit = 2;
constexpr int kFailureExit = 3;

struct CommonOptions {
  std::string config_path;
  std::string preset_name;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  unsigned threads = 1;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "JSON config file");
  cmd->add_option("--preset", o.preset_name, "Named preset (see `hamlearn presets`)");
  cmd->add_option("--seed", o.seed, "Override the config seed");
  cmd->add_option("--out", o.out_dir, "Output directory");
  cmd->add_option("--threads", o.threads, "Worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber);
}

hamlearn::ExperimentConfig resolve(const CommonOptions& o) {
  if (!o.config_path.empty() && !o.preset_name.empty())
    throw hamlearn::ConfigError("give either --config or --preset, not both");
  hamlearn::ExperimentConfig cfg;
  if (!o.config_path.empty())
    cfg = hamlearn::ExperimentConfig::load(o.config_path);
  else if (!o.preset_name.empty())
    cfg = hamlearn::preset(o.preset_name);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out_dir.empty()) cfg.output_dir = o.out_dir;
  cfg.threads = o.threads;
  cfg.validate();
  return cfg;
}

std::vector<double> parse_steps(const std::string& csv) {
  std::vector<double> steps;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      steps.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw hamlearn::ConfigError("bad step value '" + item + "'");
    }
  }
  if (steps.empty()) throw hamlearn::ConfigError("--steps is empty");
  return steps;
}

void print_files(const std::vector<std::filesystem::path>& files) {
  for (const auto& f : files) std::cout << "wrote " << f.string() << '\n';
}

void report_run(const hamlearn::ExperimentReport& r) {
  std::cout << "system " << r.config.system << ", K = " << r.pairs.count()
            << ", dim V = " << r.model->basis().dim_v() << '\n'
            << "time-averaged relative error " << r.time_averaged_relative_error() << '\n'
            << "max |dH~| " << r.max_abs_delta_h() << '\n';
  if (r.diverged) std::cout << "reconstruction diverged at t = " << r.diverged_time << '\n';
  if (r.nonsp)
    std::cout << "non-SP time-averaged relative error " << r.nonsp->time_averaged_error() << '\n';
  if (r.diagnostics && r.diagnostics->nonsp_symplectic_defect)
    std::cout << "symplectic defect SP " << r.diagnostics->symplectic_defect << ", non-SP "
              << *r.diagnostics->nonsp_symplectic_defect << '\n';
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structure-preserving Hamiltonian learning from trajectory data"};
  app.require_subcommand(1);

  CommonOptions run_opts, conv_opts, cmp_opts;
  std::string steps_csv = "8e-3,4e-3,2e-3,1e-3,5e-4";
  auto* run = app.add_subcommand("run", "Learn a model and simulate it against the truth");
  add_common(run, run_opts);
  auto* converge = app.add_subcommand("converge", "Hamiltonian-deviation convergence study");
  add_common(converge, conv_opts);
  converge->add_option("--steps", steps_csv, "Comma-separated RK4 steps, strictly decreasing");
  auto* compare = app.add_subcommand("compare", "SP versus non-SP fit on identical data");
  add_common(compare, cmp_opts);
  auto* presets = app.add_subcommand("presets", "List presets and their settings");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigExit;
  }

  try {
    if (*presets) {
      for (const auto& name : hamlearn::preset_names())
        std::cout << name << ' ' << hamlearn::preset(name).to_json().dump() << '\n';
    } else if (*run) {
      const auto cfg = resolve(run_opts);
      const auto report = hamlearn::run_experiment(cfg);
      report_run(report);
      print_files(hamlearn::emit_outputs(report, cfg.output_dir, "run"));
    } else if (*compare) {
      const auto cfg = resolve(cmp_opts);
      const auto report = hamlearn::run_nonsp_comparison(cfg);
      report_run(report);
      print_files(hamlearn::emit_outputs(report, cfg.output_dir, "compare"));
    } else if (*converge) {
      const auto cfg = resolve(conv_opts);
      const auto study = hamlearn::run_convergence_study(cfg, parse_steps(steps_csv));
      std::cout << "step        linf          order\n";
      for (std::size_t i = 0; i < study.steps.size(); ++i) {
        std::cout << study.steps[i] << "  " << study.linf[i];
        if (i > 0) std::cout << "  " << study.order_linf[i - 1];
        std::cout << '\n';
      }
      print_files(hamlearn::emit_convergence(study, cfg, cfg.output_dir));
    }
  } catch (const hamlearn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const hamlearn::LookupError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const hamlearn::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailureExit;
  }
  return 0;
}
