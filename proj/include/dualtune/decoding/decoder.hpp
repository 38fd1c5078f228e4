#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "dualtune/model/transcriber.hpp"
#include "dualtune/numerics/tensor.hpp"

namespace dualtune {

/// Decoding never receives the input's domain; vocal and mixture inputs go
/// through the same path.
struct DecodeConfig {
  std::size_t max_tokens = 32;     // including BOS
  std::size_t window_frames = 64;  // long-form window length

  void validate(const ModelConfig& model) const;
};

/// BOS, then argmax tokens (lowest id wins ties) until EOS or max_tokens.
/// Returns the full sequence including BOS and, if emitted, EOS.
std::vector<int> greedy_decode(const TranscriberModel& model, const num::Tensor& features,
                               const DecodeConfig& cfg);

/// [begin, end) frame ranges of consecutive non-overlapping windows covering
/// [0, frames); the last window may be short.
std::vector<std::pair<std::size_t, std::size_t>> window_partition(std::size_t frames,
                                                                  std::size_t window_frames);

/// Greedy-decodes each window and joins the detokenized texts with single
/// spaces, in window order.
std::string longform_decode(const TranscriberModel& model, const num::Tensor& features,
                            const DecodeConfig& cfg);

/// One transcript line: {"id": ..., "condition": "mix"|"voc", "hyp": ...}.
struct TranscriptEntry {
  std::string id;
  std::string condition;
  std::string hypothesis;
};

void write_transcripts(const std::filesystem::path& path, const std::vector<TranscriptEntry>& rows);
std::vector<TranscriptEntry> read_transcripts(const std::filesystem::path& path);

}  // namespace dualtune
