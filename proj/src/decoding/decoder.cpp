#include "dualtune/decoding/decoder.hpp"

#include <fstream>

#include <json.hpp>

#include "dualtune/common/json_fields.hpp"
#include "dualtune/model/config.hpp"
#include "dualtune/numerics/ops.hpp"
#include "dualtune/synthdata/tokenizer.hpp"

namespace dualtune {

using nlohmann::json;
using num::Tensor;

void DecodeConfig::validate(const ModelConfig& model) const {
  if (window_frames < 1 || window_frames > model.max_audio_frames) {
    throw ConfigError("decode: window_frames must lie in [1, " +
                      std::to_string(model.max_audio_frames) + "]");
  }
  if (max_tokens < 2 || max_tokens > model.max_token_len) {
    throw ConfigError("decode: max_tokens must lie in [2, " +
                      std::to_string(model.max_token_len) + "]");
  }
}

std::vector<int> greedy_decode(const TranscriberModel& model, const Tensor& features,
                               const DecodeConfig& cfg) {
  cfg.validate(model.config());
  num::NoGradGuard no_grad;
  const auto mode = ForwardMode::eval();
  const auto encoded = model.encode(features, mode);
  std::vector<int> out{tokens::kBos};
  while (out.size() < cfg.max_tokens) {
    const Tensor logits = model.decoder_forward(encoded, out, mode);
    const auto vocab = logits.cols();
    const auto last = logits.values().subspan((logits.rows() - 1) * vocab, vocab);
    std::size_t best = 0;
    for (std::size_t v = 1; v < vocab; ++v) {
      if (last[v] > last[best]) best = v;
    }
    out.push_back(static_cast<int>(best));
    if (static_cast<int>(best) == tokens::kEos) break;
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> window_partition(std::size_t frames,
                                                                  std::size_t window_frames) {
  if (window_frames == 0) throw num::ContractError("window_frames must be >= 1");
  std::vector<std::pair<std::size_t, std::size_t>> windows;
  for (std::size_t begin = 0; begin < frames; begin += window_frames) {
    windows.emplace_back(begin, std::min(frames, begin + window_frames));
  }
  return windows;
}

std::string longform_decode(const TranscriberModel& model, const Tensor& features,
                            const DecodeConfig& cfg) {
  if (!features.defined() || features.rank() != 2 || features.rows() == 0) {
    throw num::ContractError("longform_decode: need at least one frame");
  }
  std::string text;
  const auto input = features.detach();
  for (const auto& [begin, end] : window_partition(features.rows(), cfg.window_frames)) {
    const auto ids = greedy_decode(model, num::slice_rows(input, begin, end), cfg);
    if (begin != 0) text.push_back(' ');
    text += detokenize(ids);
  }
  return text;
}

void write_transcripts(const std::filesystem::path& path, const std::vector<TranscriptEntry>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write transcripts " + path.string());
  for (const auto& r : rows) {
    out << json{{"id", r.id}, {"condition", r.condition}, {"hyp", r.hypothesis}}.dump() << '\n';
  }
}

std::vector<TranscriptEntry> read_transcripts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("transcripts not found: " + path.string());
  std::vector<TranscriptEntry> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = json::parse(line);
    TranscriptEntry e;
    FieldReader r(j, path.filename().string());
    r.require("id", e.id);
    r.require("condition", e.condition);
    r.require("hyp", e.hypothesis);
    r.finish();
    rows.push_back(std::move(e));
  }
  return rows;
}

}  // namespace dualtune
