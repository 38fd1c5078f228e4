// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "../support/model_grad_cases.hpp"
#include "dualtune/evaluation/comparison.hpp"
#include "dualtune/numerics/ops.hpp"
#include "dualtune/evaluation/wer.hpp"
#include "dualtune/experiment/runner.hpp"
#include "dualtune/experiment/spec.hpp"
#include "dualtune/losses/losses.hpp"
#include "dualtune/training/adam.hpp"
#include "dualtune/training/schedule.hpp"

namespace fs = std::filesystem;
using namespace dualtune;
using num::Tensor;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

/// Accumulates named checks; the first few failures go into the detail.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    ++total_;
    if (ok) return;
    ++failed_;
    if (failures_.size() < 4) failures_.push_back(what);
  }
  Outcome outcome(const std::string& summary) const {
    if (failed_ == 0) return {true, summary};
    std::string d = std::to_string(failed_) + "/" + std::to_string(total_) + " checks failed:";
    for (const auto& f : failures_) d += " [" + f + "]";
    return {false, d};
  }

 private:
  std::size_t total_ = 0;
  std::size_t failed_ = 0;
  std::vector<std::string> failures_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() &&
         std::equal(a.values().begin(), a.values().end(), b.values().begin());
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a.values()[i] - b.values()[i]));
  }
  return worst;
}

Tensor random_features(Rng& rng, std::size_t frames, std::size_t dim) {
  return oracle::random_tensor(rng, {frames, dim}, 1.0, false);
}

std::vector<int> random_tokens(Rng& rng, std::size_t len) {
  std::vector<int> t{tokens::kBos};
  while (t.size() < len) t.push_back(static_cast<int>(rng.uniform_int(3, 29)));
  return t;
}

void randomize_adapters(const TranscriberModel& model, Rng& rng) {
  for (const auto& [name, adapter] : model.adapters()) {
    auto b = adapter.b;
    for (auto& v : b.mutable_values()) v = 0.3 * rng.normal();
  }
}

std::vector<PairedSample> sample_corpus(const GenConfig& cfg, std::size_t n, std::size_t dim) {
  std::vector<PairedSample> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(generate_sample(7000 + i, cfg, dim));
  return out;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_file(e.path());
  }
  return out;
}

// 1. Gradient correctness.
Outcome gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  auto cases = oracle::op_cases();
  cases.push_back(oracle::lora_linear_case());
  cases.push_back(oracle::cns_objective_case());
  Checks checks;
  double worst = 0.0;
  std::string worst_name;
  for (const auto& c : cases) {
    const auto r = oracle::run_case(c, 20);
    checks.expect(r.max_relative_error < 1e-4,
                  c.name + " rel err " + fmt(r.max_relative_error) + " at instance " +
                      std::to_string(r.worst_instance));
    if (r.max_relative_error >= worst) {
      worst = r.max_relative_error;
      worst_name = c.name;
    }
  }
  const double elapsed = seconds_since(t0);
  checks.expect(elapsed < 60.0, "took " + fmt(elapsed, 3) + " s");
  return checks.outcome(std::to_string(cases.size()) + " cases x 20 instances, worst rel err " +
                        fmt(worst, 3) + " (" + worst_name + "), " + fmt(elapsed, 3) + " s");
}

// 2. LoRA identities.
Outcome lora_identities() {
  Checks checks;
  const ModelConfig cfg;
  Rng rng(202);

  TranscriberModel base(cfg, 1);
  auto adapted = base.clone();
  adapted.attach_adapters(LoraConfig{}, 2);
  for (int i = 0; i < 20; ++i) {
    const auto x = random_features(rng, 1 + static_cast<std::size_t>(rng.uniform_int(0, 63)),
                                   cfg.feature_dim);
    const auto eb = base.encode(x, ForwardMode::eval());
    const auto ea = adapted.encode(x, ForwardMode::eval());
    checks.expect(bit_equal(eb.features, ea.features), "zero-init encoder output differs");
    const auto toks = random_tokens(rng, 1 + static_cast<std::size_t>(rng.uniform_int(0, 20)));
    checks.expect(bit_equal(base.decoder_forward(eb, toks, ForwardMode::eval()),
                            adapted.decoder_forward(ea, toks, ForwardMode::eval())),
                  "zero-init logits differ");
  }

  randomize_adapters(adapted, rng);
  const auto merged = adapted.merged();
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const auto x = random_features(rng, 1 + static_cast<std::size_t>(rng.uniform_int(0, 63)),
                                   cfg.feature_dim);
    const auto e1 = adapted.encode(x, ForwardMode::eval());
    const auto e2 = merged.encode(x, ForwardMode::eval());
    worst = std::max(worst, max_abs_diff(e1.features, e2.features));
    const auto toks = random_tokens(rng, 1 + static_cast<std::size_t>(rng.uniform_int(0, 20)));
    worst = std::max(worst, max_abs_diff(adapted.decoder_forward(e1, toks, ForwardMode::eval()),
                                         merged.decoder_forward(e2, toks, ForwardMode::eval())));
  }
  checks.expect(worst <= 1e-10, "merge deviation " + fmt(worst));

  const auto spec = default_experiment_spec();
  const auto corpus = sample_corpus(spec.finetune_data, 64, cfg.feature_dim);
  auto plan = spec.finetune_plan("cns-L2-1.0");
  plan.total_steps = 100;
  const auto digest = base.base_digest();
  std::vector<std::vector<double>> raw;
  for (const auto& p : base.base_parameters()) {
    raw.emplace_back(p.tensor.values().begin(), p.tensor.values().end());
  }
  const auto tuned = run_experiment(plan, corpus, base.clone());
  checks.expect(tuned.model.base_digest() == digest, "base digest changed after fine-tuning");
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto& after = tuned.model.base_parameters()[i].tensor.values();
    checks.expect(std::equal(raw[i].begin(), raw[i].end(), after.begin()),
                  "base tensor " + tuned.model.base_parameters()[i].name + " changed");
  }
  return checks.outcome("zero-init bit-exact on 20 inputs, merge max dev " + fmt(worst, 3) +
                        " on 50 inputs, base digest unchanged after 100 cns steps");
}

// 3. Loss algebra.
Outcome loss_algebra() {
  Checks checks;
  const auto ev = Tensor::from({2, 1}, {1, 2});
  const auto em = Tensor::from({2, 1}, {2, 4});
  const std::vector<bool> all{true, true};
  checks.expect(consistency_loss(ev, em, ConsistencyKind::L1, all).item() == 1.5, "L1 hand value");
  checks.expect(consistency_loss(ev, em, ConsistencyKind::L2, all).item() == 2.5, "L2 hand value");

  Rng rng(303);
  for (int i = 0; i < 50; ++i) {
    const auto e = oracle::random_tensor(rng, {1 + static_cast<std::size_t>(rng.uniform_int(0, 9)),
                                               1 + static_cast<std::size_t>(rng.uniform_int(0, 9))},
                                         3.0, false);
    std::vector<bool> mask(e.rows());
    for (std::size_t k = 0; k < mask.size(); ++k) mask[k] = rng.bernoulli(0.7);
    for (auto kind : {ConsistencyKind::L1, ConsistencyKind::L2}) {
      checks.expect(consistency_loss(e, e, kind, mask).item() == 0.0, "consistency(E, E) != 0");
    }
  }

  const auto spec = default_experiment_spec();
  TranscriberModel model(spec.model, 3);
  model.attach_adapters(LoraConfig{}, 4);
  randomize_adapters(model, rng);
  const auto corpus = sample_corpus(spec.finetune_data, 8, spec.model.feature_dim);
  std::vector<const PairedSample*> batch;
  for (const auto& s : corpus) batch.push_back(&s);
  std::size_t identities = 0;
  for (const auto& plan : default_strategy_grid(spec.finetune_plan("voc"))) {
    Rng coin(1), drop(2);
    const auto obj = batch_objective(model, batch, plan.loss, coin, ForwardMode::training(drop));
    const auto& b = obj.breakdown;
    checks.expect(b.total == obj.total.item(), plan.name + ": breakdown total != graph value");
    if (plan.loss.strategy == Strategy::Cns || plan.loss.strategy == Strategy::Both) {
      const double w = plan.loss.strategy == Strategy::Cns ? plan.loss.weight : 0.0;
      const bool ok = b.alt_vocal && b.alt_mixture && b.consistency &&
                      b.total == (*b.alt_vocal + *b.alt_mixture) / 2.0 + w * *b.consistency;
      checks.expect(ok, plan.name + ": L_total != (L_v + L_m)/2 + w L_CNS");
      ++identities;
    }
  }
  return checks.outcome("hand values exact, consistency(E,E)=0 on 50 inputs x 2 kinds, combined "
                        "identity exact for " +
                        std::to_string(identities) + " dual strategies");
}

// 4. Schedule.
Outcome schedule() {
  Checks checks;
  Rng rng(404);
  for (int trial = 0; trial < 10; ++trial) {
    const auto t = static_cast<std::size_t>(rng.uniform_int(2, 5000));
    const double frac = rng.uniform(0.01, 1.0);
    const double peak = rng.uniform(1e-5, 1e-2);
    const auto lr = make_schedule(t, peak, frac);
    const auto w = static_cast<std::size_t>(std::ceil(frac * static_cast<double>(t)));
    const std::string tag = "T=" + std::to_string(t) + " frac=" + fmt(frac);
    checks.expect(lr(0) == 0.0, tag + " lr(0)");
    checks.expect(std::abs(lr(w) - peak) <= 1e-15 * peak, tag + " lr(W)");
    checks.expect(lr(t) == 0.0, tag + " lr(T)");
    for (std::size_t s = 0; s <= t; ++s) {
      const double expect = s <= w ? peak * static_cast<double>(s) / static_cast<double>(w)
                                   : peak * static_cast<double>(t - s) / static_cast<double>(t - w);
      if (std::abs(lr(s) - expect) > 1e-12 * peak) {
        checks.expect(false, tag + " off the line at s=" + std::to_string(s));
        break;
      }
    }
  }
  return checks.outcome("10 random (T, warmup_frac): endpoints, peak, and every step on the lines");
}

// 5. Adam oracle.
Outcome adam_oracle() {
  Checks checks;
  const AdamHyper hyper;
  Rng rng(505);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const double lr = trial == 0 ? 0.1 : rng.uniform(1e-3, 0.5);
    const double x0 = trial == 0 ? 1.0 : rng.uniform(-3.0, 3.0);
    auto x = Tensor::from({1}, {x0}, true);
    std::vector<Tensor> params{x};
    OptimizerState state;
    oracle::AdamReference ref{hyper.beta1, hyper.beta2, hyper.eps, {}, {}};
    std::vector<double> rx{x0};
    for (int s = 0; s < 5; ++s) {
      x.zero_grad();
      num::backward(num::sum(num::square(x)));
      const std::vector<double> g{2.0 * rx[0]};
      adam_step(params, state, lr, hyper);
      ref.step(rx, g, lr);
      worst = std::max(worst, std::abs(x.values()[0] - rx[0]));
    }
  }
  checks.expect(worst <= 1e-12, "max deviation " + fmt(worst));
  return checks.outcome("10 five-step traces on x^2, max deviation " + fmt(worst, 3));
}

// 6. WER oracle.
Outcome wer_oracle() {
  Checks checks;
  static const std::vector<std::string> vocab{"la", "love", "amor", "sol", "you"};
  Rng rng(606);
  const auto words = [&] {
    std::vector<std::string> out(static_cast<std::size_t>(rng.uniform_int(0, 5)));
    for (auto& w : out) w = vocab[static_cast<std::size_t>(rng.uniform_int(0, 4))];
    return out;
  };
  for (int i = 0; i < 200; ++i) {
    const auto ref = words();
    const auto hyp = words();
    const auto dp = word_alignment(ref, hyp);
    const auto brute = oracle::brute_force_edits(ref, hyp);
    checks.expect(dp.errors() == brute.cost && dp.substitutions == brute.subs &&
                      dp.deletions == brute.dels && dp.insertions == brute.ins,
                  "pair " + std::to_string(i) + " disagrees with enumeration");
  }
  checks.expect(normalize_text("Hello,  WORLD!") == "hello world", "normalize Hello, WORLD!");
  checks.expect(normalize_text("don't  stop") == "dont stop", "normalize don't stop");
  checks.expect(normalize_text("") == "", "normalize empty");

  const auto sample = [](const std::string& id, std::size_t errors, std::size_t ref_words) {
    SampleWer s{id, kConditionMix, {}};
    s.detail.substitutions = errors;
    s.detail.ref_words = ref_words;
    s.detail.wer = static_cast<double>(errors) / static_cast<double>(ref_words);
    return s;
  };
  const auto pooled = aggregate({sample("a", 1, 4), sample("b", 3, 6)}, {{"a", "en"}, {"b", "en"}});
  checks.expect(pooled.row("en", "mix").detail.wer == 0.4, "pooled (1,4)+(3,6) != 4/10");
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<SampleWer> samples;
    std::map<std::string, std::string> subsets;
    std::size_t errors = 0, total = 0;
    for (std::int64_t i = 0, n = rng.uniform_int(1, 12); i < n; ++i) {
      const auto id = "s" + std::to_string(i);
      subsets[id] = vocab[static_cast<std::size_t>(rng.uniform_int(0, 2))];
      const auto r = static_cast<std::size_t>(rng.uniform_int(1, 9));
      const auto e = static_cast<std::size_t>(rng.uniform_int(0, 9));
      samples.push_back(sample(id, e, r));
      errors += e;
      total += r;
    }
    const auto report = aggregate(samples, subsets);
    const auto& overall = report.row(kOverallSubset, kConditionMix).detail;
    std::size_t subset_words = 0, subset_errors = 0;
    for (const auto& [key, row] : report.pooled) {
      if (key.first == kOverallSubset) continue;
      subset_words += row.detail.ref_words;
      subset_errors += row.detail.errors();
    }
    checks.expect(overall.errors() == errors && overall.ref_words == total &&
                      subset_words == total && subset_errors == errors &&
                      overall.wer == static_cast<double>(errors) / static_cast<double>(total),
                  "pooled identity trial " + std::to_string(trial));
  }
  return checks.outcome("200 pairs match enumeration, normalization examples exact, pooled identity "
                        "on 50 random partitions");
}

struct GridRun {
  bool done = false;
  fs::path root;
  ExperimentSpec spec;
  std::optional<EvalSummary> summary;
  double seconds = 0.0;
};

/// The strategies the end-to-end grid trains.
const std::vector<std::string> kTrendStrategies{"voc", "mix", "random", "both", "cns-L2-1.0"};

ExperimentSpec trend_spec(const fs::path& root) {
  auto spec = default_experiment_spec();
  spec.output_dir = root;
  std::vector<TrainPlan> grid;
  for (const auto& name : kTrendStrategies) grid.push_back(spec.finetune_plan(name));
  spec.finetune = grid;
  return spec;
}

// 7. End-to-end trend.
Outcome trend(GridRun& run, std::size_t jobs) {
  run.spec = trend_spec(run.root);
  fs::remove_all(run.root);
  const auto t0 = std::chrono::steady_clock::now();
  run.summary = cmd_grid(run.spec, RunLayout(run.root), jobs);
  run.seconds = seconds_since(t0);
  run.done = true;
  const auto& s = *run.summary;
  const auto& seeds = run.spec.seeds;

  const CellId pre{};
  const auto med = [&](const std::string& strategy, const char* condition) {
    std::vector<double> v;
    for (auto seed : seeds) v.push_back(s.wer({strategy, seed}, kOverallSubset, condition));
    return median(v);
  };
  const double pre_mix = s.wer(pre, kOverallSubset, kConditionMix);
  const double pre_voc = s.wer(pre, kOverallSubset, kConditionVoc);

  Checks checks;
  std::ostringstream detail;
  detail << std::fixed << std::setprecision(4);
  detail << "pretrained mix " << pre_mix << " voc " << pre_voc << ";";

  // (a) Every strategy beats the pretrained model on the domains it trains on.
  for (const auto& name : kTrendStrategies) {
    const auto strategy = run.spec.finetune_plan(name).loss.strategy;
    const double m = med(name, kConditionMix), v = med(name, kConditionVoc);
    detail << " " << name << " mix " << m << " voc " << v << ";";
    if (strategy != Strategy::Voc) checks.expect(m < pre_mix, "(a) " + name + " mix " + fmt(m));
    if (strategy != Strategy::Mix) checks.expect(v < pre_voc, "(a) " + name + " voc " + fmt(v));
  }

  // (b) cns-L2-1.0 no worse than both on mixtures, by median and per seed.
  std::size_t wins = 0;
  for (auto seed : seeds) {
    wins += s.wer({"cns-L2-1.0", seed}, kOverallSubset, kConditionMix) <=
            s.wer({"both", seed}, kOverallSubset, kConditionMix);
  }
  const auto needed = seeds.size() - seeds.size() / 5;
  checks.expect(med("cns-L2-1.0", kConditionMix) <= med("both", kConditionMix),
                "(b) cns median mix above both");
  checks.expect(wins >= needed, "(b) cns <= both in " + std::to_string(wins) + "/" +
                                    std::to_string(seeds.size()) + " seeds");
  detail << " cns<=both on mix in " << wins << "/" << seeds.size() << " seeds;";

  // (c) mix-only is worse than voc-only on vocals.
  checks.expect(med("mix", kConditionVoc) > med("voc", kConditionVoc), "(c) mix voc <= voc voc");

  checks.expect(seeds.size() >= 5, "fewer than 5 seeds");
  checks.expect(run.seconds <= 900.0, "grid took " + fmt(run.seconds, 4) + " s");
  detail << std::setprecision(1) << " grid " << run.seconds << " s on " << jobs << " job(s)";
  const auto out = checks.outcome(detail.str());
  return out.pass ? out : Outcome{false, out.detail + " | " + detail.str()};
}

ExperimentSpec tiny_spec(const fs::path& root) {
  auto spec = default_experiment_spec();
  spec.output_dir = root;
  spec.seeds = {1, 2};
  spec.model.hidden_dim = 8;
  spec.model.mlp_dim = 16;
  spec.model.encoder_layers = 1;
  spec.model.decoder_layers = 1;
  spec.sizes = {32, 16, 4, 8};
  spec.pretrain.total_steps = 10;
  spec.pretrain.batch_size = 4;
  for (auto& p : spec.finetune) {
    p.total_steps = 6;
    p.batch_size = 4;
  }
  return spec;
}

// 8. Determinism.
Outcome determinism(GridRun& full, const fs::path& work, std::size_t jobs) {
  Checks checks;
  const auto compare = [&](const std::map<std::string, std::string>& a,
                           const std::map<std::string, std::string>& b, const std::string& tag) {
    checks.expect(a.size() == b.size(), tag + ": file sets differ");
    for (const auto& [name, bytes] : a) {
      const auto it = b.find(name);
      checks.expect(it != b.end() && it->second == bytes, tag + ": " + name + " differs");
    }
  };

  // Full tiny grid, every strategy: rerun in place and in a second
  // directory with parallel jobs.
  const auto tiny_a = work / "tiny-a", tiny_b = work / "tiny-b";
  fs::remove_all(tiny_a);
  fs::remove_all(tiny_b);
  cmd_grid(tiny_spec(tiny_a), RunLayout(tiny_a), 1);
  const auto first = snapshot(tiny_a);
  cmd_grid(tiny_spec(tiny_a), RunLayout(tiny_a), 1);
  compare(first, snapshot(tiny_a), "tiny rerun");
  cmd_grid(tiny_spec(tiny_b), RunLayout(tiny_b), std::max<std::size_t>(jobs, 2));
  auto parallel = snapshot(tiny_b);
  parallel["spec.json"] = first.at("spec.json");  // differs only in output_dir
  compare(first, parallel, "tiny parallel");

  // One full-size cell and the pretrained model, rerun against the
  // artifacts of the end-to-end grid.
  if (!full.done) {
    full.spec = trend_spec(full.root);
    fs::remove_all(full.root);
    const RunLayout out(full.root);
    cmd_gen_data(full.spec, out);
    cmd_pretrain(full.spec, out);
  }
  const RunLayout out(full.root);
  const CellId cell{"cns-L2-1.0", full.spec.seeds.front()};
  if (!fs::exists(out.transcripts(cell))) {
    cmd_finetune(full.spec, out, cell.strategy, cell.seed);
    cmd_decode(full.spec, out, cell);
  }
  const auto before_cell = snapshot(out.cell_dir(cell));
  const auto before_pre = read_file(out.checkpoint(CellId{}));
  const auto before_pre_log = read_file(out.metrics(CellId{}));
  cmd_pretrain(full.spec, out);
  checks.expect(read_file(out.checkpoint(CellId{})) == before_pre, "pretrained checkpoint differs");
  checks.expect(read_file(out.metrics(CellId{})) == before_pre_log, "pretrain metrics differ");
  cmd_finetune(full.spec, out, cell.strategy, cell.seed);
  cmd_decode(full.spec, out, cell);
  auto after_cell = snapshot(out.cell_dir(cell));
  // report.csv is written by eval; compare it when the grid produced one.
  if (before_cell.count("report.csv")) {
    std::map<std::string, std::string> eval_before;
    for (const auto& e : fs::directory_iterator(out.eval_dir())) {
      eval_before[e.path().filename().string()] = read_file(e.path());
    }
    cmd_eval(full.spec, out);
    after_cell = snapshot(out.cell_dir(cell));
    std::map<std::string, std::string> eval_after;
    for (const auto& e : fs::directory_iterator(out.eval_dir())) {
      eval_after[e.path().filename().string()] = read_file(e.path());
    }
    compare(eval_before, eval_after, "full eval");
  }
  compare(before_cell, after_cell, "full cell " + cell.label());
  return checks.outcome("tiny " + std::to_string(first.size()) +
                        "-file grid identical on rerun and with parallel jobs; full-size "
                        "pretrain and " +
                        cell.label() + " reproduced byte-for-byte");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  std::vector<int> only;
  std::string workdir = (fs::temp_directory_path() / "dualtune-acceptance").string();
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
  app.add_option("--criteria", only, "Run only these criteria (1-8)")->check(CLI::Range(1, 8));
  app.add_option("--workdir", workdir, "Scratch directory for grid runs");
  app.add_option("--jobs", jobs, "Worker threads for the grids")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  const std::set<int> selected(only.begin(), only.end());
  const fs::path work(workdir);
  fs::create_directories(work);
  GridRun grid;
  grid.root = work / "trend";

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient correctness", gradients},
      {"LoRA identities", lora_identities},
      {"loss algebra", loss_algebra},
      {"schedule", schedule},
      {"Adam oracle", adam_oracle},
      {"WER oracle", wer_oracle},
      {"end-to-end trend", [&] { return trend(grid, jobs); }},
      {"determinism", [&] { return determinism(grid, work, jobs); }},
  };
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    all = all && o.pass;
    std::cout << "criterion " << id << " " << (o.pass ? "PASS" : "FAIL") << " "
              << criteria[i].first << ": " << o.detail << " [" << std::fixed
              << std::setprecision(1) << seconds_since(t0) << " s]" << std::endl;
  }
  return all ? 0 : 1;
}
