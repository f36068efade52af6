#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fixbias/report/commands.hpp"

namespace rep = fixbias::report;

int main(int argc, char** argv) {
  CLI::App app{"Fixed-bias shallow network experiments: gradient descent, spectra and spectral bias"};
  app.require_subcommand(1, 1);

  const std::map<std::string, std::string> help{
      {"train", "run gradient descent on a target; writes trajectory.csv"},
      {"spectrum", "eigenvalues of TT*, decay fit and boundary value residuals (ReLU models)"},
      {"bias", "per-mode error decay and the spectral-bias front"},
      {"rates", "parameter-error rate for smooth targets (relu_discrete)"},
      {"kernel", "ReLU kernel against quadrature, or the FReX kernel profile"},
      {"plot", "render columns of a CSV as an SVG line plot"},
  };
  std::string config_path;
  std::string out_dir = ".";
  std::vector<std::pair<std::string, CLI::App*>> subs;
  for (const auto& name : rep::command_names()) {
    CLI::App* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("--config", config_path, "flat key = value config file");
    sub->add_option("--out", out_dir, "output directory");
    sub->allow_extras();
    sub->footer("Any config key may be overridden as --key value.");
    subs.emplace_back(name, sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : rep::kExitInvalid;
  }

  for (const auto& [name, sub] : subs) {
    if (!sub->parsed()) continue;
    rep::ExperimentConfig cfg;
    try {
      const rep::KeyValues file = config_path.empty() ? rep::KeyValues{} : rep::read_key_values(config_path);
      const rep::KeyValues overrides = rep::parse_overrides(sub->remaining());
      cfg = rep::load_config(file, overrides, std::getenv("FIXBIAS_SEED"));
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return rep::kExitInvalid;
    }
    return rep::run_command(name, cfg, out_dir, std::cout, std::cerr);
  }
  return rep::kExitInvalid;
}
