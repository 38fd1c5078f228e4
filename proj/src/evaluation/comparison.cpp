#include "dualtune/evaluation/comparison.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

namespace dualtune {

std::vector<std::pair<std::string, std::string>> comparison_columns(
    const std::vector<ComparisonRow>& rows) {
  std::set<std::string> subsets;
  for (const auto& r : rows) {
    for (const auto& [key, v] : r.wer) subsets.insert(key.first);
  }
  std::vector<std::pair<std::string, std::string>> cols;
  const bool has_en = subsets.count("en") > 0;
  for (const char* cond : {kConditionMix, kConditionVoc}) {
    if (has_en) cols.emplace_back("en", cond);
    if (subsets.count(kOverallSubset)) cols.emplace_back(kOverallSubset, cond);
  }
  for (const char* cond : {kConditionMix, kConditionVoc}) {
    for (const auto& s : subsets) {
      if (s != "en" && s != kOverallSubset) cols.emplace_back(s, cond);
    }
  }
  return cols;
}

namespace {

std::string column_title(const std::pair<std::string, std::string>& col) {
  std::string subset = col.first == kOverallSubset ? "Overall" : col.first;
  if (col.first != kOverallSubset) {
    for (auto& c : subset) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return subset + (col.second == kConditionMix ? " Mix" : " Voc");
}

std::string fmt(const char* pattern, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

}  // namespace

std::string comparison_markdown(const std::vector<ComparisonRow>& rows) {
  const auto cols = comparison_columns(rows);
  std::ostringstream os;
  os << "| WER | L_CNS | w |";
  for (const auto& c : cols) os << ' ' << column_title(c) << " |";
  os << "\n|---|---|---|";
  for (std::size_t i = 0; i < cols.size(); ++i) os << "---:|";
  os << '\n';
  for (const auto& r : rows) {
    os << "| " << r.label << " | " << r.cns_kind << " | " << r.weight << " |";
    for (const auto& c : cols) {
      auto it = r.wer.find(c);
      os << ' ' << (it == r.wer.end() ? std::string("n/a") : fmt("%.2f", 100.0 * it->second))
         << " |";
    }
    os << '\n';
  }
  return os.str();
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  const auto cols = comparison_columns(rows);
  std::ostringstream os;
  os << "strategy,cns_kind,w";
  for (const auto& c : cols) os << ',' << c.first << '_' << c.second;
  os << '\n';
  for (const auto& r : rows) {
    os << r.label << ',' << r.cns_kind << ',' << r.weight;
    for (const auto& c : cols) {
      auto it = r.wer.find(c);
      os << ',' << (it == r.wer.end() ? std::string() : fmt("%.6f", it->second));
    }
    os << '\n';
  }
  return os.str();
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of no values");
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace dualtune
