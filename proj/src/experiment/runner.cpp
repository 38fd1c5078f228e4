#include "dualtune/experiment/runner.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dualtune/common/json_fields.hpp"
#include "dualtune/decoding/decoder.hpp"
#include "dualtune/model/checkpoint.hpp"
#include "dualtune/numerics/rng.hpp"
#include "dualtune/synthdata/corpus.hpp"
#include "dualtune/training/trainer.hpp"

namespace dualtune {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kInitStream = 0;

struct SplitDef {
  const char* name;
  std::uint64_t index;
  bool finetune_domain;
};

constexpr SplitDef kSplits[] = {
    {"pretrain", 0, false}, {"train", 1, true}, {"dev", 2, true}, {"test", 3, true}};

std::mutex g_log_mutex;

void log_line(const RunOptions& opts, const std::string& line) {
  if (!opts.log) return;
  std::lock_guard lock(g_log_mutex);
  *opts.log << line << '\n' << std::flush;
}

std::size_t split_size(const ExperimentSpec& spec, const std::string& name) {
  if (name == "pretrain") return spec.sizes.pretrain;
  if (name == "train") return spec.sizes.train;
  if (name == "dev") return spec.sizes.dev;
  return spec.sizes.test;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

std::vector<CorpusRecord> load_split(const ExperimentSpec& spec, const RunLayout& out,
                                     const std::string& name) {
  const auto path = out.split(name);
  if (!fs::exists(path)) {
    throw MissingPrerequisite("corpus " + path.string() + " not found; run gen-data first");
  }
  auto records = read_corpus(path);
  const auto& expected = name == "pretrain" ? spec.pretrain_data : spec.finetune_data;
  if (records.size() != split_size(spec, name)) {
    throw ConfigError("corpus " + path.string() + " has " + std::to_string(records.size()) +
                      " samples but the spec asks for " + std::to_string(split_size(spec, name)) +
                      "; rerun gen-data");
  }
  for (const auto& r : records) {
    if (!(r.params == expected)) {
      throw ConfigError("corpus " + path.string() +
                        " was generated from a different spec; rerun gen-data");
    }
  }
  return records;
}

TranscriberModel load_model(const RunLayout& out, const CellId& cell, const std::string& hint) {
  const auto path = out.checkpoint(cell);
  if (!fs::exists(path)) {
    throw MissingPrerequisite("checkpoint " + path.string() + " not found; run " + hint + " first");
  }
  return load_checkpoint(path).model;
}

std::string run_hint(const CellId& cell) {
  return cell.pretrained() ? std::string("pretrain")
                           : "finetune --strategy " + cell.strategy + " --seed " +
                                 std::to_string(cell.seed);
}

ProgressFn progress_logger(const RunOptions& opts, const std::string& tag, std::size_t total) {
  if (!opts.log || opts.log_every == 0) return {};
  return [&opts, tag, total](const StepMetrics& m) {
    if (m.step % opts.log_every != 0 && m.step != total) return;
    char buf[160];
    std::snprintf(buf, sizeof buf, "[%s] step %zu/%zu lr %.2e loss %.4f (avg50 %.4f)", tag.c_str(),
                  m.step, total, m.lr, m.loss.total, m.running_total);
    log_line(opts, buf);
  };
}

std::string format_weight(double w) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", w);
  std::string text = buf;
  if (text.find_first_of(".e") == std::string::npos) text += ".0";
  return text;
}

ComparisonRow row_header(const TrainPlan& plan) {
  ComparisonRow row;
  row.label = plan.name;
  if (plan.loss.strategy == Strategy::Cns) {
    row.cns_kind = to_string(plan.loss.kind);
    row.weight = format_weight(plan.loss.weight);
  } else {
    row.cns_kind = "-";
    row.weight = "-";
  }
  return row;
}

}  // namespace

std::string CellId::label() const {
  return pretrained() ? std::string(kPretrainedCell) : strategy + "/seed-" + std::to_string(seed);
}

fs::path RunLayout::split(const std::string& name) const {
  return root_ / "data" / (name + ".jsonl");
}

fs::path RunLayout::cell_dir(const CellId& cell) const {
  if (cell.pretrained()) return root_ / kPretrainedCell;
  return root_ / "cells" / cell.strategy / ("seed-" + std::to_string(cell.seed));
}

std::vector<CellId> grid_cells(const ExperimentSpec& spec) {
  std::vector<CellId> cells;
  for (const auto& plan : spec.finetune) {
    for (auto seed : spec.seeds) cells.push_back({plan.name, seed});
  }
  return cells;
}

void cmd_gen_data(const ExperimentSpec& spec, const RunLayout& out, const RunOptions& opts) {
  spec.validate();
  fs::create_directories(out.root() / "data");
  write_text(out.root() / "spec.json", experiment_spec_to_json(spec).dump(2) + "\n");
  json manifest = json::object();
  for (const auto& def : kSplits) {
    const auto& cfg = def.finetune_domain ? spec.finetune_data : spec.pretrain_data;
    const auto records =
        generate_split(cfg, def.name, def.index, split_size(spec, def.name), spec.model.feature_dim);
    write_corpus(out.split(def.name), records);
    std::map<std::string, std::size_t> per_language;
    for (const auto& r : records) ++per_language[r.language];
    manifest[def.name] = {
        {"count", records.size()},
        {"languages", per_language},
        {"digest", corpus_digest(materialize_all(records, spec.model.feature_dim))}};
    log_line(opts, "[gen-data] " + std::string(def.name) + ": " + std::to_string(records.size()) +
                       " samples");
  }
  write_text(out.manifest(), manifest.dump(2) + "\n");
}

void cmd_pretrain(const ExperimentSpec& spec, const RunLayout& out, const RunOptions& opts) {
  spec.validate();
  const auto samples = materialize_all(load_split(spec, out, "pretrain"), spec.model.feature_dim);
  const auto& plan = spec.pretrain;
  const auto init_seed = derive_seed(plan.seed, kInitStream);
  auto result = run_experiment(plan, samples, TranscriberModel(spec.model, init_seed),
                               progress_logger(opts, "pretrain", plan.total_steps));
  const CellId cell;
  save_checkpoint(out.checkpoint(cell), result.model,
                  {{"plan", plan.seed},
                   {"init", init_seed},
                   {"corpus", spec.pretrain_data.corpus_seed}});
  write_metrics_log(out.metrics(cell), result.log);
}

void cmd_finetune(const ExperimentSpec& spec, const RunLayout& out, const std::string& strategy,
                  std::uint64_t seed, const RunOptions& opts) {
  spec.validate();
  spec.require_seed(seed);
  TrainPlan plan = spec.finetune_plan(strategy);
  plan.seed = seed;
  auto base = load_model(out, CellId{}, "pretrain");
  const auto samples = materialize_all(load_split(spec, out, "train"), spec.model.feature_dim);
  const CellId cell{strategy, seed};
  auto result = run_experiment(plan, samples, std::move(base),
                               progress_logger(opts, cell.label(), plan.total_steps));
  save_checkpoint(out.checkpoint(cell), result.model,
                  {{"pretrain_plan", spec.pretrain.seed},
                   {"init", result.model.init_seed()},
                   {"plan", seed},
                   {"corpus", spec.finetune_data.corpus_seed}});
  write_metrics_log(out.metrics(cell), result.log);
}

void cmd_decode(const ExperimentSpec& spec, const RunLayout& out, const CellId& cell,
                const RunOptions& opts) {
  spec.validate();
  if (!cell.pretrained()) {
    spec.finetune_plan(cell.strategy);
    spec.require_seed(cell.seed);
  }
  const auto model = load_model(out, cell, run_hint(cell));
  const auto records = load_split(spec, out, "test");
  std::vector<TranscriptEntry> rows;
  rows.reserve(2 * records.size());
  for (const auto& r : records) {
    const auto sample = materialize(r, spec.model.feature_dim);
    rows.push_back({r.id, kConditionMix, longform_decode(model, sample.mixture, spec.decode)});
    rows.push_back({r.id, kConditionVoc, longform_decode(model, sample.vocal, spec.decode)});
  }
  write_transcripts(out.transcripts(cell), rows);
  log_line(opts, "[" + cell.label() + "] decoded " + std::to_string(records.size()) +
                     " test samples");
}

double EvalSummary::wer(const CellId& cell, const std::string& subset,
                        const std::string& condition) const {
  for (const auto& c : cells) {
    if (c.cell == cell) return c.report.row(subset, condition).detail.wer;
  }
  throw std::out_of_range("no evaluated cell " + cell.label());
}

EvalSummary cmd_eval(const ExperimentSpec& spec, const RunLayout& out, const RunOptions& opts) {
  spec.validate();
  std::vector<CellId> cells{CellId{}};
  for (const auto& c : grid_cells(spec)) cells.push_back(c);
  std::vector<std::string> missing;
  for (const auto& c : cells) {
    if (!fs::exists(out.transcripts(c))) missing.push_back(c.label());
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += "\n  " + m;
    throw MissingPrerequisite("incomplete grid: no transcripts for " +
                              std::to_string(missing.size()) + " cell(s):" + list);
  }

  const auto records = load_split(spec, out, "test");
  std::map<std::string, std::string> reference, subset_of;
  for (const auto& r : records) {
    reference[r.id] = r.text;
    subset_of[r.id] = r.language;
  }

  EvalSummary summary;
  for (const auto& c : cells) {
    const auto path = out.transcripts(c);
    std::set<std::pair<std::string, std::string>> seen;
    std::vector<SampleWer> scored;
    for (const auto& t : read_transcripts(path)) {
      auto it = reference.find(t.id);
      if (it == reference.end()) {
        throw ConfigError(path.string() + ": unknown sample id '" + t.id + "'");
      }
      if (!seen.insert({t.id, t.condition}).second) {
        throw ConfigError(path.string() + ": duplicate entry for " + t.id + " (" + t.condition +
                          ")");
      }
      scored.push_back({t.id, t.condition, dualtune::wer(it->second, t.hypothesis)});
    }
    if (seen.size() != 2 * records.size()) {
      throw MissingPrerequisite(path.string() + " does not cover every test sample in both " +
                                "conditions; rerun decode for " + c.label());
    }
    auto report = aggregate(scored, subset_of);
    write_text(out.report(c), report_csv(report));
    summary.cells.push_back({c, std::move(report)});
  }

  ComparisonRow pretrained{kPretrainedLabel, "-", "-", {}};
  for (const auto& [key, row] : summary.cells.front().report.pooled) {
    pretrained.wer[key] = row.detail.wer;
  }
  summary.rows.push_back(pretrained);
  for (const auto& plan : spec.finetune) {
    auto row = row_header(plan);
    std::map<std::pair<std::string, std::string>, std::vector<double>> per_key;
    for (const auto& c : summary.cells) {
      if (c.cell.strategy != plan.name) continue;
      for (const auto& [key, pooled] : c.report.pooled) per_key[key].push_back(pooled.detail.wer);
    }
    for (auto& [key, values] : per_key) row.wer[key] = median(values);
    summary.rows.push_back(std::move(row));
  }

  std::ostringstream per_seed;
  per_seed << "strategy,seed,subset,condition,S,D,I,ref_words,wer\n";
  for (const auto& c : summary.cells) {
    for (const auto& [key, row] : c.report.pooled) {
      char wer[32];
      std::snprintf(wer, sizeof wer, "%.6f", row.detail.wer);
      per_seed << (c.cell.pretrained() ? std::string(kPretrainedCell) : c.cell.strategy) << ','
               << (c.cell.pretrained() ? std::string() : std::to_string(c.cell.seed)) << ','
               << row.subset << ',' << row.condition << ',' << row.detail.substitutions << ','
               << row.detail.deletions << ',' << row.detail.insertions << ','
               << row.detail.ref_words << ',' << wer << '\n';
    }
  }
  write_text(out.eval_dir() / "per_seed.csv", per_seed.str());
  write_text(out.eval_dir() / "comparison.md", comparison_markdown(summary.rows));
  write_text(out.eval_dir() / "comparison.csv", comparison_csv(summary.rows));
  log_line(opts, "[eval] " + std::to_string(summary.cells.size()) + " cells scored");
  return summary;
}

EvalSummary cmd_grid(const ExperimentSpec& spec, const RunLayout& out, std::size_t jobs,
                     const RunOptions& opts) {
  spec.validate();
  if (jobs == 0) throw ConfigError("--jobs must be >= 1");
  cmd_gen_data(spec, out, opts);
  cmd_pretrain(spec, out, opts);

  std::vector<CellId> tasks{CellId{}};
  for (const auto& c : grid_cells(spec)) tasks.push_back(c);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const auto worker = [&] {
    while (!failed) {
      const auto i = next++;
      if (i >= tasks.size()) return;
      const auto& cell = tasks[i];
      try {
        if (!cell.pretrained()) cmd_finetune(spec, out, cell.strategy, cell.seed, opts);
        cmd_decode(spec, out, cell, opts);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed = true;
      }
    }
  };
  const auto n = std::min(jobs, tasks.size());
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < n; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return cmd_eval(spec, out, opts);
}

}  // namespace dualtune
