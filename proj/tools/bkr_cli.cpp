// Experiment runner.
//
//   bkr_cli <scenario> [--config FILE] [--seed N] [--out DIR] [--trials K] [overrides]
//   bkr_cli --dump-config
//
// Exit status: 0 when every executed scenario passes, 1 when one fails,
// 2 on usage or configuration errors.

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bkr/harness.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

struct Overrides {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> trials;
  std::optional<std::size_t> n, ell, t_class, perturbation_trials, incompressibility_trials, attack_runs, pac_runs;
  std::optional<double> delta, lambda_est, epsilon_threshold, fooling_tolerance;
  std::optional<unsigned> target_class;
  std::optional<std::string> subject;

  void apply(bkr::ExperimentConfig& c) const {
    if (seed) c.master_seed = *seed;
    if (trials) c.trials = *trials;
    if (n) c.n = *n;
    if (ell) c.ell = *ell;
    if (t_class) c.t_class = *t_class;
    if (perturbation_trials) c.perturbation_trials = *perturbation_trials;
    if (incompressibility_trials) c.incompressibility_trials = *incompressibility_trials;
    if (attack_runs) c.attack_runs = *attack_runs;
    if (pac_runs) c.pac_runs = *pac_runs;
    if (delta) c.delta = *delta;
    if (lambda_est) c.lambda_est = *lambda_est;
    if (epsilon_threshold) c.epsilon_threshold = *epsilon_threshold;
    if (fooling_tolerance) c.fooling_tolerance = *fooling_tolerance;
    if (target_class) c.target_class = bkr::to_bit(*target_class);
    if (subject) c.subject = *subject;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Big-key robustness experiments"};
  app.require_subcommand(0, 1);

  Overrides o;
  bool dump = false;
  app.add_flag("--dump-config", dump, "Print the effective configuration as INI and exit");
  app.add_option("--config", o.config, "INI configuration file");
  app.add_option("--seed", o.seed, "Master seed");
  app.add_option("--out", o.out, "Output directory (overrides BKR_OUT_DIR and the config)");
  app.add_option("--trials", o.trials, "Trials per estimate (clean, crafted and post-learning evaluations)");
  app.add_option("--n", o.n, "Number of features");
  app.add_option("--ell", o.ell, "Key length in bits");
  app.add_option("--t-class", o.t_class, "Protected-set size of the metric class");
  app.add_option("--delta", o.delta, "Estimator accuracy");
  app.add_option("--lambda-est", o.lambda_est, "Estimator confidence parameter");
  app.add_option("--perturbation-trials", o.perturbation_trials, "Random perturbations per robustness scenario");
  app.add_option("--incompressibility-trials", o.incompressibility_trials, "Ciphertexts per incompressibility cell");
  app.add_option("--attack-runs", o.attack_runs, "Independent runs of the adaptive attack");
  app.add_option("--pac-runs", o.pac_runs, "Independent reconstruction runs");
  app.add_option("--target-class", o.target_class, "Class the attack pushes toward (0 or 1)")->check(CLI::Range(0, 1));
  app.add_option("--epsilon-threshold", o.epsilon_threshold, "Minimum clean advantage before attack results count");
  app.add_option("--fooling-tolerance", o.fooling_tolerance, "Largest acceptable fooling gap");
  app.add_option("--subject", o.subject, "Attacked classifier: all | partial:<i,j,...>");

  std::vector<std::string> scenarios;
  for (const auto& name : bkr::scenario_names()) {
    app.add_subcommand(name, "Run the " + name + " scenario")->fallthrough();
  }
  app.add_subcommand("all", "Run every scenario in order")->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitPass : kExitUsage;
  }

  bkr::ExperimentConfig cfg;
  try {
    if (const char* env = std::getenv("BKR_OUT_DIR"); env && *env) cfg.out_dir = env;
    if (o.config) {
      const std::string env_dir = cfg.out_dir;
      cfg = bkr::load_config(*o.config, cfg);
      if (const char* env = std::getenv("BKR_OUT_DIR"); env && *env) cfg.out_dir = env_dir;
    }
    o.apply(cfg);
    if (o.out) cfg.out_dir = *o.out;
    cfg.validate();
  } catch (const bkr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  if (dump) {
    std::cout << bkr::dump_config(cfg);
    return kExitPass;
  }

  const auto chosen = app.get_subcommands();
  if (chosen.empty()) {
    std::cerr << app.help();
    return kExitUsage;
  }
  const std::string command = chosen.front()->get_name();
  if (command == "all") {
    scenarios = bkr::scenario_names();
  } else {
    scenarios = {command};
  }

  try {
    bkr::RecordWriter writer(cfg.out_dir);
    std::vector<bkr::ResultRecord> done;
    for (const auto& name : scenarios) {
      bkr::ResultRecord r = bkr::run_scenario(name, cfg);
      writer.append(r);
      done.push_back(std::move(r));
    }
    std::cout << bkr::RecordWriter::summary_table(done, true);
    for (const auto& r : done) {
      if (!r.pass) return kExitFail;
    }
    return kExitPass;
  } catch (const bkr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == bkr::Errc::kConfigError ? kExitUsage : kExitFail;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
}
