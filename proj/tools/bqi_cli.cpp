#include "bqi/config.hpp"
#include "bqi/runner.hpp"
#include "bqi/threads.hpp"

#include "CLI11.hpp"

#include <cstdint>
#include <iostream>
#include <string>

namespace {

struct Overrides {
  std::string config_path;
  std::string out_dir;
  std::int64_t seed = -1;
  int threads = -1;
  int budget = -1;
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config_path, "experiment description (JSON)")
      ->required();
  sub->add_option("--out", o.out_dir, "output directory");
  sub->add_option("--seed", o.seed, "override the dataset/optimizer seed")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--threads", o.threads, "worker thread cap (0 = automatic)")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--budget", o.budget, "override the evaluation budget")
      ->check(CLI::PositiveNumber);
}

bqi::ExperimentConfig resolve(const Overrides& o) {
  bqi::ExperimentConfig cfg = bqi::load_config(o.config_path);
  if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
  if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
  if (o.threads >= 0) cfg.threads = o.threads;
  if (o.budget >= 0) cfg.budget = o.budget;
  cfg.validate();
  if (cfg.threads > 0) bqi::set_thread_count(cfg.threads);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collective-spin interferometer training and analysis"};
  app.require_subcommand(1);
  Overrides o;

  add_common(app.add_subcommand(
                 "train", "optimize a circuit and report its Bayesian risk"),
             o);
  add_common(app.add_subcommand(
                 "compare",
                 "direct function readout versus a phase estimate pushed "
                 "through the target"),
             o);
  add_common(app.add_subcommand(
                 "scaling", "risk against qubit count with reference limits"),
             o);
  add_common(app.add_subcommand(
                 "eigentasks",
                 "noise-ordered output combinations and truncated readout"),
             o);
  add_common(app.add_subcommand(
                 "info", "information content and small-width loss expansion"),
             o);
  add_common(
      app.add_subcommand("sample", "dump measured feature rows for inputs "
                                   "drawn from the prior"),
      o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const bqi::ExperimentConfig cfg = resolve(o);
    const std::string command = app.get_subcommands().front()->get_name();
    if (command == "train")
      bqi::run_train(cfg);
    else if (command == "compare")
      bqi::run_compare(cfg);
    else if (command == "scaling")
      bqi::run_scaling(cfg);
    else if (command == "eigentasks")
      bqi::run_eigentasks(cfg);
    else if (command == "info")
      bqi::run_info(cfg);
    else
      bqi::run_sample(cfg);
    std::cout << "wrote " << cfg.out_dir << "\n";
    return 0;
  } catch (const bqi::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
