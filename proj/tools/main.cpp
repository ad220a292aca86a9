// xarb: models, simulation, detection and accounting of cross-chain arbitrage.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data error,
// 3 internal error.

#include <iostream>

#include "cli_common.hpp"
#include "xarb/error.hpp"

int main(int argc, char** argv) {
  using namespace xarb;
  CLI::App app{"Cross-chain arbitrage models, simulator, detector and accounting", "xarb"};
  app.set_version_flag("--version", cli::kToolVersion);
  app.require_subcommand(1);
  app.fallthrough();

  cli::Globals g;
  for (int i = 0; i < argc; ++i) g.argv.emplace_back(argv[i]);
  app.add_option("--seed", g.seed, "Seed for simulation and Monte Carlo");
  app.add_option("--threads", g.threads, "Worker threads (0: XARB_THREADS or all cores)");
  app.add_flag("--strict", g.strict, "Abort on the first malformed input line");

  cli::add_model_commands(app, g);
  cli::add_pipeline_commands(app, g);
  cli::add_stats_commands(app, g);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
