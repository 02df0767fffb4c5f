// Command-line front end: gen | split | infer | eval | validate.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "longitrack/longitrack.hpp"

namespace lt = longitrack;

int main(int argc, char** argv) {
  CLI::App app{"Promptable longitudinal lesion segmentation pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::uint64_t seed = 0;
  int cases = 0;
  std::string fold = "all";
  std::string backend;
  int jobs = 1;
  bool exclude_on_edge = false;
  std::string data_root, out_root;

  app.add_option("--config", config_path, "JSON run configuration file")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "master seed override");
  app.add_option("--cases", cases, "number of cases for gen");
  app.add_option("--fold", fold, "restrict infer/eval to one fold (or \"all\")");
  app.add_option("--backend", backend, "segmenter backend (region_grow|oracle)");
  app.add_option("--jobs", jobs, "worker threads for infer")
      ->check(CLI::PositiveNumber);
  app.add_flag("--exclude-patient-on-edge", exclude_on_edge,
               "skip whole patients that have an edge-center lesion");
  app.add_option("--data", data_root, "dataset root override");
  app.add_option("--out", out_root, "output root override");

  auto* cmd_gen = app.add_subcommand("gen", "generate a synthetic dataset");
  auto* cmd_split = app.add_subcommand("split", "write the fold assignment");
  auto* cmd_infer =
      app.add_subcommand("infer", "segment every prompted lesion");
  auto* cmd_eval = app.add_subcommand("eval", "score predictions against GT");
  auto* cmd_validate =
      app.add_subcommand("validate", "load all cases and report warnings");

  CLI11_PARSE(app, argc, argv);

  try {
    lt::RunConfig cfg;
    if (!config_path.empty()) cfg = lt::load_run_config(config_path);
    if (app.count("--seed")) cfg.seed = seed;
    if (app.count("--cases")) cfg.n_cases = cases;
    if (app.count("--backend")) cfg.backend.name = backend;
    if (app.count("--data")) cfg.dataset_root = data_root;
    if (app.count("--out")) cfg.output_root = out_root;

    lt::RuntimeOptions rt;
    rt.jobs = jobs;
    rt.exclude_patient_on_edge = exclude_on_edge;
    rt.fold_selector = fold;

    if (cmd_gen->parsed()) {
      lt::run_gen(cfg);
    } else if (cmd_split->parsed()) {
      lt::run_split(cfg);
    } else if (cmd_infer->parsed()) {
      lt::run_infer(cfg, rt);
    } else if (cmd_eval->parsed()) {
      const lt::EvalResult res = lt::run_eval(cfg, rt);
      std::fputs(res.csv.c_str(), stdout);
      if (!res.failed.empty()) {
        for (const auto& pid : res.failed)
          std::cerr << "error: no prediction for patient " << pid << "\n";
        return 1;
      }
    } else if (cmd_validate->parsed()) {
      lt::run_validate(cfg);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
