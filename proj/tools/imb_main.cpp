// Command-line front end: campaign runner, synthetic log generator, and
// post-hoc analysis over the emitted CSVs.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "imb/analysis.hpp"
#include "imb/environment.hpp"
#include "imb/harness.hpp"

namespace {

imb::CampaignConfig load_config_or_exit(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot open config file: " << path << "\n";
    std::exit(2);
  }
  nlohmann::json j;
  try {
    in >> j;
    return imb::parse_campaign_config(j);
  } catch (const std::exception& e) {
    std::cerr << "error: invalid config " << path << ": " << e.what() << "\n";
    std::exit(2);
  }
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed, int workers, bool trace,
            bool dump_ledger) {
  imb::CampaignConfig cfg = load_config_or_exit(config_path);
  if (seed) {
    cfg.master_seed = *seed;
    if (cfg.env.kind == imb::EnvironmentSpec::Kind::synthetic)
      cfg.env.world.seed = imb::mix64(cfg.master_seed, imb::hash_str("world"));
  }
  cfg.workers = workers;
  cfg.trace = trace;
  cfg.dump_ledger = dump_ledger;

  imb::CampaignResult result = imb::run_campaign(cfg);
  imb::write_campaign_outputs(cfg, result, out_dir);
  std::cout << "wrote " << out_dir << "/runs.csv, aggregate.csv, reward_samples.csv\n";
  return 0;
}

int cmd_generate_log(const std::string& config_path, const std::string& out_dir,
                     int n_contexts, int n_records,
                     std::optional<std::uint64_t> seed) {
  imb::CampaignConfig cfg = load_config_or_exit(config_path);
  if (cfg.env.kind != imb::EnvironmentSpec::Kind::synthetic) {
    std::cerr << "error: generate-log needs a synthetic environment config\n";
    return 2;
  }
  if (seed) cfg.env.world.seed = imb::mix64(*seed, imb::hash_str("world"));
  imb::SyntheticWorld world = imb::generate_ba_world(cfg.env.world);
  imb::ReplayLog log = imb::synthesize_log(
      world, n_contexts, n_records, seed.value_or(cfg.master_seed));
  std::filesystem::create_directories(out_dir);
  imb::save_replay_log(log, out_dir + "/replay_log.jsonl",
                       out_dir + "/replay_contexts.jsonl");
  std::cout << "wrote " << out_dir << "/replay_log.jsonl ("
            << log.records.size() << " keys) and replay_contexts.jsonl ("
            << log.contexts.size() << " contexts)\n";
  return 0;
}

int cmd_analyze(const std::string& runs_dir, const std::string& out_dir,
                int min_samples) {
  auto cells = imb::load_reward_samples_csv(runs_dir + "/reward_samples.csv");
  std::filesystem::create_directories(out_dir);
  imb::write_poisson_fits_csv(cells, out_dir + "/poisson_fits.csv", min_samples);
  int skipped = 0;
  for (const auto& cell : cells)
    if (static_cast<int>(cell.values.size()) < min_samples) ++skipped;
  if (skipped > 0)
    std::cerr << "warning: " << skipped << " cell(s) below " << min_samples
              << " samples were not fitted\n";
  std::cout << "wrote " << out_dir << "/poisson_fits.csv (" << cells.size()
            << " cells)\n";
  return 0;
}

int cmd_plot_data(const std::string& runs_dir, const std::string& out_dir,
                  const std::string& format) {
  auto curves = imb::load_aggregate_csv(runs_dir + "/aggregate.csv");
  imb::export_plot_data(curves, out_dir, format == "svg");
  std::cout << "wrote " << out_dir << "/curves.csv and curves_tail50.csv";
  if (format == "svg") std::cout << " and curves.svg";
  std::cout << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contextual-bandit influence-maximization campaigns"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "results", runs_dir, format = "csv";
  std::optional<std::uint64_t> seed;
  int workers = 1, n_contexts = 24, n_records = 5000, min_samples = 30;
  bool trace = false, dump_ledger = false;

  auto* run = app.add_subcommand("run", "Run a campaign from a JSON config");
  run->add_option("--config", config_path, "campaign config JSON")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--seed", seed, "override the config master seed");
  run->add_option("--workers", workers, "worker threads over (policy, run) pairs");
  run->add_flag("--trace", trace, "dump per-arm policy snapshots");
  run->add_flag("--dump-ledger", dump_ledger, "dump activation ledgers");

  auto* gen = app.add_subcommand("generate-log",
                                 "Synthesize a replay log from a synthetic world");
  gen->add_option("--config", config_path, "campaign config JSON")->required();
  gen->add_option("--out", out_dir, "output directory");
  gen->add_option("--contexts", n_contexts, "number of contexts to draw");
  gen->add_option("--records", n_records, "number of cascade records");
  gen->add_option("--seed", seed, "generation seed");

  auto* ana = app.add_subcommand("analyze", "Poisson fits of reward samples");
  ana->add_option("--runs", runs_dir, "directory with run outputs")->required();
  ana->add_option("--out", out_dir, "output directory");
  ana->add_option("--min-samples", min_samples, "minimum samples per fitted cell");

  auto* plot = app.add_subcommand("plot-data", "Export plot-ready curve data");
  plot->add_option("--runs", runs_dir, "directory with run outputs")->required();
  plot->add_option("--out", out_dir, "output directory");
  plot->add_option("--format", format, "csv or svg")
      ->check(CLI::IsMember({"csv", "svg"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed())
      return cmd_run(config_path, out_dir, seed, workers, trace, dump_ledger);
    if (gen->parsed())
      return cmd_generate_log(config_path, out_dir, n_contexts, n_records, seed);
    if (ana->parsed()) return cmd_analyze(runs_dir, out_dir, min_samples);
    if (plot->parsed()) return cmd_plot_data(runs_dir, out_dir, format);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
