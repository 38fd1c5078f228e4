#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dualtune/evaluation/wer.hpp"

namespace dualtune {

/// One strategy's row in the cross-strategy comparison table.
struct ComparisonRow {
  std::string label;      // e.g. "pretrained (no finetune)", "voc", "cns-L2-1.0"
  std::string cns_kind;   // "-" for non-consistency rows
  std::string weight;     // "-" likewise
  std::map<std::pair<std::string, std::string>, double> wer;  // (subset, condition) -> WER
};

/// Column order: EN Mix, Overall Mix, EN Voc, Overall Voc, then every other
/// subset's Mix columns followed by its Voc columns. Subsets absent from all
/// rows are skipped.
std::vector<std::pair<std::string, std::string>> comparison_columns(
    const std::vector<ComparisonRow>& rows);

/// Markdown table with WER in percent, two decimals.
std::string comparison_markdown(const std::vector<ComparisonRow>& rows);

/// CSV: strategy,cns_kind,w,<subset>_<condition>... with WER as fractions.
std::string comparison_csv(const std::vector<ComparisonRow>& rows);

/// Median of the values (mean of the middle pair for even counts).
double median(std::vector<double> values);

}  // namespace dualtune
