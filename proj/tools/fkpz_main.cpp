#include <CLI11.hpp>
#include <iostream>

#include "fkpz/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"fkpz: fractional KPZ numerical laboratory"};
  app.set_version_flag("--version", std::string("fkpz ") + fkpz::kVersion);

  std::string run_config;
  auto* run_cmd = app.add_subcommand("run", "execute one experiment from a config file");
  run_cmd->add_option("config", run_config, "config file path")->required();

  std::string scan_config, scan_param;
  std::vector<double> scan_values;
  auto* scan_cmd = app.add_subcommand("scan", "sweep one parameter over a value list");
  scan_cmd->add_option("config", scan_config, "config file path")->required();
  scan_cmd->add_option("--param", scan_param, "parameter: alpha, s, h or m")->required();
  scan_cmd->add_option("--values", scan_values, "comma-separated values")
      ->required()
      ->delimiter(',');

  app.require_subcommand(0, 1);
  CLI11_PARSE(app, argc, argv);

  fkpz::RunOutcome out;
  if (*run_cmd) {
    out = fkpz::run_config_file(run_config);
  } else if (*scan_cmd) {
    out = fkpz::scan_config_file(scan_config, scan_param, scan_values);
  } else {
    std::cout << app.help();
    return 0;
  }
  std::cout << out.verdict << "\n";
  if (!out.manifest.is_null() && out.manifest.contains("headline"))
    std::cout << out.manifest["headline"].dump(2) << "\n";
  return out.exit_code;
}
