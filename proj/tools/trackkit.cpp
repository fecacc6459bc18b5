#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "trackkit/backtest.hpp"

int main(int argc, char** argv) {
  CLI::App app{"index tracking backtest toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false, out_set = false;

  CLI::App* run = app.add_subcommand("run", "run a rolling backtest");
  run->add_option("--config", config_path, "JSON config file")->required();
  run->add_option("--seed", seed, "override the config seed")
      ->each([&](const std::string&) { seed_set = true; });
  run->add_option("--out", out_dir, "override the output directory")
      ->each([&](const std::string&) { out_set = true; });

  CLI::App* validate = app.add_subcommand("validate", "check a config without running");
  validate->add_option("--config", config_path, "JSON config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    trackkit::RunConfig cfg = trackkit::parse_config(config_path);
    if (seed_set) cfg.seed = seed;
    if (out_set) cfg.out_dir = out_dir;
    if (validate->parsed()) {
      std::cout << trackkit::config_echo(cfg).dump(2) << "\n";
      return 0;
    }
    trackkit::ResultStore store = trackkit::run_backtest(cfg);
    trackkit::emit_reports(store, cfg.out_dir);
    std::cout << "wrote reports to " << cfg.out_dir << " (" << store.plan.windows.size()
              << " windows, " << store.model_names.size() << " models, "
              << trackkit::detail::fmt(store.total_wall_seconds) << "s)\n";
    return 0;
  } catch (const trackkit::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const trackkit::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const trackkit::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
