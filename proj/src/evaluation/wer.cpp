#include "dualtune/evaluation/wer.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace dualtune {

std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  const auto* bytes = reinterpret_cast<const std::uint8_t*>(text.data());
  const auto length = static_cast<std::int32_t>(text.size());
  std::int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(bytes, i, length, c);
    if (c < 0) continue;  // malformed byte sequence
    if (u_ispunct(c)) continue;
    if (u_isUWhiteSpace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    c = u_tolower(c);
    std::uint8_t buf[U8_MAX_LENGTH];
    std::int32_t n = 0;
    UBool error = false;
    U8_APPEND(buf, n, U8_MAX_LENGTH, c, error);
    if (!error) out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
  }
  return out;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && text[i] == ' ') ++i;
    std::size_t j = i;
    while (j < text.size() && text[j] != ' ') ++j;
    if (j > i) words.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return words;
}

namespace {

struct Cell {
  std::size_t cost = 0;
  std::size_t subs = 0;
  std::size_t dels = 0;
  std::size_t ins = 0;
};

// Lower cost wins; on equal cost, more substitutions wins.
bool better(const Cell& a, const Cell& b) {
  if (a.cost != b.cost) return a.cost < b.cost;
  return a.subs > b.subs;
}

}  // namespace

WerDetail word_alignment(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
  const auto n = ref.size(), m = hyp.size();
  std::vector<Cell> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = {j, 0, 0, j};
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = {i, 0, i, 0};
    for (std::size_t j = 1; j <= m; ++j) {
      Cell diag = prev[j - 1];
      if (ref[i - 1] != hyp[j - 1]) {
        ++diag.cost;
        ++diag.subs;
      }
      Cell del = prev[j];
      ++del.cost;
      ++del.dels;
      Cell ins = cur[j - 1];
      ++ins.cost;
      ++ins.ins;
      Cell best = diag;
      if (better(del, best)) best = del;
      if (better(ins, best)) best = ins;
      cur[j] = best;
    }
    std::swap(prev, cur);
  }
  const Cell& end = prev[m];
  WerDetail d;
  d.substitutions = end.subs;
  d.deletions = end.dels;
  d.insertions = end.ins;
  d.ref_words = n;
  if (n > 0) {
    d.wer = static_cast<double>(d.errors()) / static_cast<double>(n);
  } else {
    d.empty_reference = true;
    d.wer = static_cast<double>(d.errors());
  }
  return d;
}

WerDetail wer(std::string_view reference, std::string_view hypothesis) {
  return word_alignment(split_words(normalize_text(reference)),
                        split_words(normalize_text(hypothesis)));
}

const PooledRow& WerReport::row(const std::string& subset, const std::string& condition) const {
  auto it = pooled.find({subset, condition});
  if (it == pooled.end()) {
    throw std::out_of_range("no pooled row for (" + subset + ", " + condition + ")");
  }
  return it->second;
}

WerReport aggregate(const std::vector<SampleWer>& samples,
                    const std::map<std::string, std::string>& subset_of) {
  WerReport report;
  report.samples = samples;
  const auto accumulate = [&report](const std::string& subset, const std::string& condition,
                                    const WerDetail& d) {
    auto& row = report.pooled[{subset, condition}];
    row.subset = subset;
    row.condition = condition;
    row.detail.substitutions += d.substitutions;
    row.detail.deletions += d.deletions;
    row.detail.insertions += d.insertions;
    row.detail.ref_words += d.ref_words;
  };
  for (const auto& s : samples) {
    if (s.condition != kConditionMix && s.condition != kConditionVoc) {
      throw std::invalid_argument("sample " + s.id + ": unknown condition '" + s.condition +
                                  "' (expected mix or voc)");
    }
    auto it = subset_of.find(s.id);
    if (it == subset_of.end()) {
      throw std::invalid_argument("sample " + s.id + " has no subset tag");
    }
    accumulate(it->second, s.condition, s.detail);
    accumulate(kOverallSubset, s.condition, s.detail);
  }
  for (auto& [key, row] : report.pooled) {
    auto& d = row.detail;
    d.empty_reference = d.ref_words == 0;
    d.wer = d.ref_words ? static_cast<double>(d.errors()) / static_cast<double>(d.ref_words)
                        : static_cast<double>(d.errors());
  }
  return report;
}

std::string report_csv(const WerReport& report) {
  std::ostringstream os;
  os << "subset,condition,S,D,I,ref_words,wer\n";
  for (const auto& [key, row] : report.pooled) {
    char wer[32];
    std::snprintf(wer, sizeof wer, "%.6f", row.detail.wer);
    os << row.subset << ',' << row.condition << ',' << row.detail.substitutions << ','
       << row.detail.deletions << ',' << row.detail.insertions << ',' << row.detail.ref_words
       << ',' << wer << '\n';
  }
  return os.str();
}

}  // namespace dualtune
