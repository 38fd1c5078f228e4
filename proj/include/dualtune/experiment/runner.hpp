#pragma once

// Output layout under the run directory:
//
//   spec.json                              resolved spec
//   data/{pretrain,train,dev,test}.jsonl   corpora (see corpus.hpp)
//   data/manifest.json                     per-split sample counts and digests
//   pretrained/model.ckpt, metrics.jsonl, transcripts.jsonl, report.csv
//   cells/<strategy>/seed-<n>/             same files for each grid cell
//   eval/comparison.md, comparison.csv     seed-median table
//   eval/per_seed.csv                      every cell's pooled rows

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dualtune/evaluation/comparison.hpp"
#include "dualtune/evaluation/wer.hpp"
#include "dualtune/experiment/spec.hpp"

namespace dualtune {

/// A command was run before the artifacts it consumes exist.
class MissingPrerequisite : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kPretrainedCell = "pretrained";
inline constexpr const char* kPretrainedLabel = "pretrained (no finetune)";

/// One grid cell; `strategy` empty means the pretrained model.
struct CellId {
  std::string strategy;
  std::uint64_t seed = 0;

  bool pretrained() const { return strategy.empty(); }
  std::string label() const;  // "pretrained" or "<strategy>/seed-<n>"
  bool operator==(const CellId&) const = default;
};

class RunLayout {
 public:
  explicit RunLayout(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path split(const std::string& name) const;
  std::filesystem::path manifest() const { return root_ / "data" / "manifest.json"; }
  std::filesystem::path cell_dir(const CellId& cell) const;
  std::filesystem::path checkpoint(const CellId& cell) const { return cell_dir(cell) / "model.ckpt"; }
  std::filesystem::path metrics(const CellId& cell) const { return cell_dir(cell) / "metrics.jsonl"; }
  std::filesystem::path transcripts(const CellId& cell) const {
    return cell_dir(cell) / "transcripts.jsonl";
  }
  std::filesystem::path report(const CellId& cell) const { return cell_dir(cell) / "report.csv"; }
  std::filesystem::path eval_dir() const { return root_ / "eval"; }

 private:
  std::filesystem::path root_;
};

/// Every grid cell in spec order (strategy-major, then seeds).
std::vector<CellId> grid_cells(const ExperimentSpec& spec);

/// Where progress lines go; nullptr silences them. Safe to share between
/// concurrent jobs.
struct RunOptions {
  std::ostream* log = nullptr;
  std::size_t log_every = 100;
};

void cmd_gen_data(const ExperimentSpec& spec, const RunLayout& out, const RunOptions& opts = {});
void cmd_pretrain(const ExperimentSpec& spec, const RunLayout& out, const RunOptions& opts = {});
void cmd_finetune(const ExperimentSpec& spec, const RunLayout& out, const std::string& strategy,
                  std::uint64_t seed, const RunOptions& opts = {});
/// Transcribes the test split in both conditions with the cell's model.
void cmd_decode(const ExperimentSpec& spec, const RunLayout& out, const CellId& cell,
                const RunOptions& opts = {});

struct CellReport {
  CellId cell;
  WerReport report;
};

struct EvalSummary {
  std::vector<CellReport> cells;      // pretrained first, then grid order
  std::vector<ComparisonRow> rows;    // pretrained row, then one per strategy

  /// Pooled WER of one cell; throws std::out_of_range when absent.
  double wer(const CellId& cell, const std::string& subset, const std::string& condition) const;
};

/// Scores every cell's transcripts, writes per-cell report.csv and the eval/
/// tables. Throws MissingPrerequisite listing every cell without transcripts.
EvalSummary cmd_eval(const ExperimentSpec& spec, const RunLayout& out, const RunOptions& opts = {});

/// gen-data, pretrain, then every grid cell (finetune + decode) on up to
/// `jobs` worker threads, the pretrained decode, and eval.
EvalSummary cmd_grid(const ExperimentSpec& spec, const RunLayout& out, std::size_t jobs,
                     const RunOptions& opts = {});

}  // namespace dualtune
