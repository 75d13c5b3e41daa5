#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dagfl/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Simulator for DAG-based decentralized federated learning "
               "with accuracy-biased tip selection"};
  app.require_subcommand(1);

  std::string spec_path;
  std::string out_dir;
  bool dry_run = false;
  bool export_params = false;
  bool export_data = false;
  auto* run = app.add_subcommand("run", "Run an experiment spec (JSON)");
  run->add_option("spec", spec_path, "Path to the experiment spec JSON file")->required();
  run->add_option("--out", out_dir, "Output directory (default: $DAGFL_OUT or ./runs)");
  run->add_flag("--dry-run", dry_run, "Validate and print the resolved config, write nothing");
  run->add_flag("--export-params", export_params, "Include model params in the DAG export");
  run->add_flag("--export-data", export_data, "Write each repetition's datasets as JSONL");

  std::string recipes_dir;
  auto* recipes = app.add_subcommand("recipes", "List built-in experiment recipes");
  recipes->add_option("--write", recipes_dir, "Write every recipe as <name>.json into DIR");

  std::string summarize_dir;
  auto* summarize_cmd = app.add_subcommand("summarize", "Summarize finished runs");
  summarize_cmd->add_option("dir", summarize_dir, "Run output directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    dagfl::RunOptions options;
    options.out_dir = out_dir.empty() ? dagfl::default_out_dir()
                                      : std::filesystem::path(out_dir);
    options.dry_run = dry_run;
    options.export_params = export_params;
    options.export_data = export_data;
    return dagfl::run_experiment(spec_path, options, std::cout, std::cerr);
  }

  if (recipes->parsed()) {
    const auto all = dagfl::builtin_recipes();
    for (const auto& [name, spec] : all) {
      std::cout << name << "\n";
    }
    if (!recipes_dir.empty()) {
      std::filesystem::create_directories(recipes_dir);
      for (const auto& [name, spec] : all) {
        std::ofstream out(std::filesystem::path(recipes_dir) / (name + ".json"));
        out << spec.dump(2) << '\n';
      }
      std::cout << "wrote " << all.size() << " recipe files to " << recipes_dir << "\n";
    }
    return 0;
  }

  if (summarize_cmd->parsed()) {
    return dagfl::summarize(summarize_dir, std::cout, std::cerr);
  }
  return 0;
}
