#include <doctest.h>

#include <map>
#include <string>
#include <vector>

#include "../support/oracles.hpp"
#include "dualtune/evaluation/comparison.hpp"
#include "dualtune/evaluation/wer.hpp"

using namespace dualtune;

namespace {

std::vector<std::string> random_words(Rng& rng, std::size_t max_len) {
  static const std::vector<std::string> vocab{"la", "love", "amor", "sol", "you"};
  std::vector<std::string> out(static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(max_len))));
  for (auto& w : out) w = vocab[static_cast<std::size_t>(rng.uniform_int(0, 4))];
  return out;
}

std::string join(const std::vector<std::string>& words) {
  std::string s;
  for (const auto& w : words) s += (s.empty() ? "" : " ") + w;
  return s;
}

SampleWer sample(const std::string& id, const std::string& condition, std::size_t errors,
                 std::size_t ref_words) {
  SampleWer s{id, condition, {}};
  s.detail.substitutions = errors;
  s.detail.ref_words = ref_words;
  s.detail.wer = static_cast<double>(errors) / static_cast<double>(ref_words);
  return s;
}

}  // namespace

TEST_CASE("normalization examples") {
  CHECK(normalize_text("Hello,  WORLD!") == "hello world");
  CHECK(normalize_text("don't  stop") == "dont stop");
  CHECK(normalize_text("") == "");
  CHECK(normalize_text("  \t spaced\nout  ") == "spaced out");
  CHECK(normalize_text("«Olá» — você?") == "olá você");
  CHECK(normalize_text("perché…") == "perché");
  CHECK(split_words(" a  b ") == std::vector<std::string>{"a", "b"});
}

TEST_CASE("normalization is idempotent") {
  const std::vector<std::string> inputs{"Hello,  WORLD!", "don't  stop", "ÀÉÎ õü!!", "a-b c",
                                        " ...  ", "L'amore è (tutto)"};
  for (const auto& s : inputs) {
    const auto once = normalize_text(s);
    CHECK(normalize_text(once) == once);
  }
}

TEST_CASE("wer examples") {
  CHECK(wer("la la la", "la la la").wer == 0.0);
  const auto del = wer("a b c", "");
  CHECK(del.deletions == 3);
  CHECK(del.wer == 1.0);
  const auto sub = wer("a b c", "a x c");
  CHECK(sub.substitutions == 1);
  CHECK(sub.errors() == 1);
  CHECK(sub.wer == doctest::Approx(1.0 / 3.0));
  const auto ins = wer("", "x y");
  CHECK(ins.insertions == 2);
  CHECK(ins.empty_reference);
  CHECK(ins.ref_words == 0);
  CHECK(ins.wer == 2.0);
  const auto none = wer("", "");
  CHECK(none.wer == 0.0);
  CHECK(none.errors() == 0);
  // Normalization applies before alignment.
  CHECK(wer("Hello, world", "hello WORLD!").wer == 0.0);
}

TEST_CASE("dynamic programming matches exhaustive edit-script enumeration") {
  Rng rng(31);
  for (int i = 0; i < 200; ++i) {
    const auto ref = random_words(rng, 5);
    const auto hyp = random_words(rng, 5);
    const auto dp = word_alignment(ref, hyp);
    const auto brute = oracle::brute_force_edits(ref, hyp);
    INFO(join(ref) << " | " << join(hyp));
    CHECK(dp.errors() == brute.cost);
    CHECK(dp.substitutions == brute.subs);
    CHECK(dp.deletions == brute.dels);
    CHECK(dp.insertions == brute.ins);
    CHECK(dp.ref_words == ref.size());
    CHECK(word_alignment(ref, ref).errors() == 0);
    const auto swapped = word_alignment(hyp, ref);
    CHECK(swapped.errors() == dp.errors());
    CHECK(swapped.deletions == dp.insertions);
    CHECK(swapped.insertions == dp.deletions);
  }
}

TEST_CASE("pooled aggregation") {
  const std::map<std::string, std::string> subsets{{"a", "en"}, {"b", "en"}, {"c", "it"}};
  const std::vector<SampleWer> samples{sample("a", "mix", 1, 4), sample("b", "mix", 3, 6),
                                       sample("c", "mix", 2, 5), sample("a", "voc", 0, 4)};
  const auto report = aggregate(samples, subsets);
  CHECK(report.row("en", "mix").detail.wer == doctest::Approx(0.4));
  CHECK(report.row("en", "mix").detail.errors() == 4);
  CHECK(report.row("it", "mix").detail.wer == samples[2].detail.wer);
  const auto& overall = report.row("overall", "mix");
  CHECK(overall.detail.ref_words ==
        report.row("en", "mix").detail.ref_words + report.row("it", "mix").detail.ref_words);
  CHECK(overall.detail.wer == doctest::Approx(6.0 / 15.0));
  CHECK(report.row("overall", "voc").detail.wer == 0.0);
  CHECK_THROWS(report.row("pt", "mix"));

  CHECK_THROWS_AS(aggregate({sample("a", "vocals", 1, 4)}, subsets), std::invalid_argument);
  CHECK_THROWS_AS(aggregate({sample("zzz", "mix", 1, 4)}, subsets), std::invalid_argument);

  const auto csv = report_csv(report);
  CHECK(csv.rfind("subset,condition,S,D,I,ref_words,wer\n", 0) == 0);
  CHECK(csv.find("en,mix,4,0,0,10,") != std::string::npos);
}

TEST_CASE("pooled overall equals the word-weighted mean over random partitions") {
  Rng rng(32);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<SampleWer> samples;
    std::map<std::string, std::string> subsets;
    std::size_t errors = 0, words = 0;
    const auto n = rng.uniform_int(1, 12);
    for (std::int64_t i = 0; i < n; ++i) {
      const auto id = "s" + std::to_string(i);
      subsets[id] = std::vector<std::string>{"en", "it", "pt"}[static_cast<std::size_t>(
          rng.uniform_int(0, 2))];
      const auto ref = static_cast<std::size_t>(rng.uniform_int(1, 9));
      const auto err = static_cast<std::size_t>(rng.uniform_int(0, 9));
      samples.push_back(sample(id, "mix", err, ref));
      errors += err;
      words += ref;
    }
    const auto report = aggregate(samples, subsets);
    CHECK(report.row("overall", "mix").detail.wer ==
          doctest::Approx(static_cast<double>(errors) / static_cast<double>(words)));
    std::size_t subset_words = 0;
    for (const auto& [key, row] : report.pooled) {
      if (key.first != "overall") subset_words += row.detail.ref_words;
    }
    CHECK(subset_words == words);
  }
}

TEST_CASE("median") {
  CHECK(median({3.0}) == 3.0);
  CHECK(median({5.0, 1.0, 3.0}) == 3.0);
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
  CHECK_THROWS(median({}));
}

TEST_CASE("comparison table layout") {
  ComparisonRow pre{"pretrained (no finetune)", "-", "-", {}};
  pre.wer = {{{"en", "mix"}, 0.5},      {{"overall", "mix"}, 0.45}, {{"en", "voc"}, 0.2},
             {{"overall", "voc"}, 0.25}, {{"it", "mix"}, 0.4},       {{"it", "voc"}, 0.3}};
  ComparisonRow cns{"cns-L2-1.0", "L2", "1.0", pre.wer};
  cns.wer[{"overall", "mix"}] = 0.123456;
  const std::vector<ComparisonRow> rows{pre, cns};
  using Col = std::pair<std::string, std::string>;
  CHECK(comparison_columns(rows) ==
        std::vector<Col>{{"en", "mix"}, {"overall", "mix"}, {"en", "voc"}, {"overall", "voc"},
                         {"it", "mix"}, {"it", "voc"}});
  const auto md = comparison_markdown(rows);
  CHECK(md.find("| pretrained (no finetune) | - | - | 50.00 | 45.00 | 20.00 | 25.00 |") !=
        std::string::npos);
  CHECK(md.find("12.35") != std::string::npos);
  const auto csv = comparison_csv(rows);
  CHECK(csv.rfind("strategy,cns_kind,w,en_mix,overall_mix,en_voc,overall_voc,it_mix,it_voc\n",
                  0) == 0);
  CHECK(csv.find("cns-L2-1.0,L2,1.0,") != std::string::npos);
}
