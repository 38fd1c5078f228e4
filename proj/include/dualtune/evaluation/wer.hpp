#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dualtune {

/// Lowercases, strips every Unicode punctuation character (apostrophes
/// included, so "don't" -> "dont"), collapses whitespace runs, and trims.
std::string normalize_text(std::string_view text);

std::vector<std::string> split_words(std::string_view text);

struct WerDetail {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t ref_words = 0;
  /// (S + D + I) / ref_words; when ref_words == 0 this holds the raw error
  /// count and `empty_reference` is set.
  double wer = 0.0;
  bool empty_reference = false;

  std::size_t errors() const { return substitutions + deletions + insertions; }
};

/// Word-level Levenshtein alignment with unit costs. Among minimum-cost
/// alignments the one with the most substitutions is reported. Both inputs
/// are normalized first.
WerDetail wer(std::string_view reference, std::string_view hypothesis);

/// Same alignment on pre-split word lists (no normalization).
WerDetail word_alignment(const std::vector<std::string>& ref, const std::vector<std::string>& hyp);

inline constexpr const char* kConditionMix = "mix";
inline constexpr const char* kConditionVoc = "voc";
inline constexpr const char* kOverallSubset = "overall";

struct SampleWer {
  std::string id;
  std::string condition;  // "mix" or "voc"
  WerDetail detail;
};

struct PooledRow {
  std::string subset;
  std::string condition;
  WerDetail detail;
};

/// Pooled (micro-averaged) error counts per (subset, condition), plus an
/// "overall" subset over every sample.
struct WerReport {
  std::vector<SampleWer> samples;
  std::map<std::pair<std::string, std::string>, PooledRow> pooled;

  const PooledRow& row(const std::string& subset, const std::string& condition) const;
};

/// `subset_of` maps sample id -> subset tag (the language). Unknown
/// conditions or untagged samples are rejected with std::invalid_argument.
WerReport aggregate(const std::vector<SampleWer>& samples,
                    const std::map<std::string, std::string>& subset_of);

/// CSV with header subset,condition,S,D,I,ref_words,wer.
std::string report_csv(const WerReport& report);

}  // namespace dualtune
