#include <CLI11.hpp>

#include "tslab/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"least-squares learning lab for dependent time-series data"};
  app.require_subcommand(0, 1);

  tslab::RunConfig cfg;
  std::uint64_t seed = 0;
  bool seed_set = false;

  for (const char* name : {"simulate", "fit", "diagnose", "experiment"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", cfg.config_path, "JSON config file")->required();
    sub->add_option("--out", cfg.out_dir, "output directory")->required();
    sub->add_option("--seed", seed, "master seed")->each([&](const std::string&) {
      seed_set = true;
    });
    sub->add_option("--threads", cfg.threads, "worker threads (default: all)");
  }

  CLI11_PARSE(app, argc, argv);
  if (app.get_subcommands().empty()) {
    std::cout << app.help();
    return 1;
  }
  cfg.command = app.get_subcommands().front()->get_name();
  if (seed_set) cfg.master_seed = seed;
  return tslab::run(cfg);
}
