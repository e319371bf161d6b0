#include <CLI11.hpp>

#include <string>

#include "conlab/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"consensus-lab: design and simulation of fully distributed consensus protocols"};
  app.require_subcommand(1);

  std::string path;
  std::string out_dir = ".";
  int runs = 1;

  auto* analyze = app.add_subcommand("analyze", "graph reachability and M-matrix analysis");
  analyze->add_option("scenario", path, "scenario or graph JSON file")->required();

  auto* design = app.add_subcommand("design", "Riccati gain synthesis from the agent dynamics");
  design->add_option("scenario", path, "scenario or dynamics JSON file")->required();

  auto* simulate = app.add_subcommand("simulate", "integrate a scenario and write artifacts");
  simulate->add_option("scenario", path, "scenario JSON file")->required();
  simulate->add_option("--out", out_dir, "output directory (default .)");
  simulate->add_option("--runs", runs, "number of independent seeded runs")
      ->check(CLI::PositiveNumber);

  auto* containment = app.add_subcommand("containment", "multi-leader containment run and check");
  containment->add_option("scenario", path, "scenario JSON file")->required();
  containment->add_option("--out", out_dir, "output directory (default .)");
  containment->add_option("--runs", runs, "number of independent seeded runs")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  if (analyze->parsed()) return conlab::cli::cmd_analyze(path);
  if (design->parsed()) return conlab::cli::cmd_design(path);
  if (simulate->parsed()) return conlab::cli::cmd_simulate(path, out_dir, runs);
  if (containment->parsed()) return conlab::cli::cmd_containment(path, out_dir, runs);
  return 1;
}
