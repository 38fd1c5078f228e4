#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dualtune/common/json_fields.hpp"
#include "dualtune/experiment/runner.hpp"

namespace {

using namespace dualtune;

struct GlobalArgs {
  std::string spec_path;
  std::string out_dir;
  bool quiet = false;
};

ExperimentSpec resolve_spec(const GlobalArgs& args) {
  auto spec = args.spec_path.empty() ? default_experiment_spec()
                                     : load_experiment_spec(args.spec_path);
  if (!args.out_dir.empty()) spec.output_dir = args.out_dir;
  spec.validate();
  return spec;
}

RunOptions run_options(const GlobalArgs& args) {
  RunOptions opts;
  if (!args.quiet) opts.log = &std::cerr;
  return opts;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-domain LoRA fine-tuning experiments on synthetic lyrics data"};
  app.require_subcommand(1);
  GlobalArgs args;
  app.add_option("--spec", args.spec_path, "Experiment spec (JSON); built-in defaults if omitted")
      ->check(CLI::ExistingFile);
  app.add_option("--out", args.out_dir, "Run directory (overrides the spec's output_dir)");
  app.add_flag("-q,--quiet", args.quiet, "Suppress progress output");

  auto* show = app.add_subcommand("show-spec", "Print the resolved experiment spec");
  auto* gen = app.add_subcommand("gen-data", "Generate the train/dev/test and pretraining corpora");
  auto* pretrain = app.add_subcommand("pretrain", "Train the base model on the pretraining corpus");

  auto* finetune = app.add_subcommand("finetune", "Fine-tune LoRA adapters for one grid cell");
  std::string strategy;
  std::uint64_t seed = 0;
  finetune->add_option("--strategy", strategy, "Grid entry name, e.g. voc or cns-L2-1.0")
      ->required();
  finetune->add_option("--seed", seed, "Seed from the spec's seeds list")->required();

  auto* decode = app.add_subcommand(
      "decode", "Transcribe the test split; all cells unless --strategy is given");
  std::string decode_strategy;
  std::optional<std::uint64_t> decode_seed;
  decode->add_option("--strategy", decode_strategy, "Grid entry name or 'pretrained'");
  decode->add_option("--seed", decode_seed, "Restrict to one seed");

  auto* eval = app.add_subcommand("eval", "Score transcripts and write comparison tables");

  auto* grid = app.add_subcommand("grid", "Run gen-data, pretrain, every cell, and eval");
  std::size_t jobs = 1;
  grid->add_option("--jobs", jobs, "Concurrent grid cells")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    const auto spec = resolve_spec(args);
    const RunLayout out(spec.output_dir);
    const auto opts = run_options(args);
    if (*show) {
      std::cout << experiment_spec_to_json(spec).dump(2) << '\n';
    } else if (*gen) {
      cmd_gen_data(spec, out, opts);
    } else if (*pretrain) {
      cmd_pretrain(spec, out, opts);
    } else if (*finetune) {
      cmd_finetune(spec, out, strategy, seed, opts);
    } else if (*decode) {
      std::vector<CellId> cells;
      if (decode_strategy.empty() || decode_strategy == kPretrainedCell) {
        if (decode_seed && decode_strategy.empty()) {
          throw ConfigError("decode --seed needs --strategy");
        }
        cells.push_back({});
      }
      if (decode_strategy != kPretrainedCell) {
        for (const auto& c : grid_cells(spec)) {
          if (!decode_strategy.empty() && c.strategy != decode_strategy) continue;
          if (decode_seed && c.seed != *decode_seed) continue;
          cells.push_back(c);
        }
        if (!decode_strategy.empty()) {
          spec.finetune_plan(decode_strategy);
          if (decode_seed) spec.require_seed(*decode_seed);
        }
      }
      for (const auto& c : cells) cmd_decode(spec, out, c, opts);
    } else if (*eval) {
      const auto summary = cmd_eval(spec, out, opts);
      std::cout << comparison_markdown(summary.rows);
    } else if (*grid) {
      const auto summary = cmd_grid(spec, out, jobs, opts);
      std::cout << comparison_markdown(summary.rows);
    }
  } catch (const MissingPrerequisite& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
