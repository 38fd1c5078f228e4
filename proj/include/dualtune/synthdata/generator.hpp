#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dualtune/numerics/tensor.hpp"

namespace dualtune {

/// Parameters of the synthetic paired-audio generator.
///
/// A sample's lyrics come from a per-language toy lexicon. Vocal features
/// render each character through a fixed embedding table for
/// `frames_per_token` frames, plus a per-sample timbre offset and per-frame
/// jitter. The mixture adds a gain-scaled "accompaniment": an independent
/// token stream with its own rhythm rendered through a second table.
struct GenConfig {
  std::vector<std::pair<std::string, double>> languages = {{"en", 0.6}, {"it", 0.2}, {"pt", 0.2}};
  std::size_t words_min = 1;
  std::size_t words_max = 3;
  std::size_t lines_min = 1;
  std::size_t lines_max = 2;
  std::size_t frames_per_token = 3;
  std::size_t max_frames = 64;
  double jitter = 0.3;
  double timbre = 0.0;
  double gain_lo = 0.0;
  double gain_hi = 0.0;
  std::size_t distractor_vocab = 12;
  std::size_t distractor_min_frames = 2;
  std::size_t distractor_max_frames = 6;
  std::uint64_t embedding_seed = 7;
  std::uint64_t distractor_seed = 11;
  std::uint64_t corpus_seed = 2024;

  void validate() const;
  bool operator==(const GenConfig&) const = default;
};

nlohmann::json gen_config_to_json(const GenConfig& cfg);
GenConfig gen_config_from_json(const nlohmann::json& j);

/// Built-in lexicon for a language tag ("en", "it", "pt").
const std::vector<std::string>& lexicon(const std::string& language);

struct PairedSample {
  std::uint64_t seed = 0;
  std::string language;
  std::string text;
  std::vector<int> tokens;  // BOS ... EOS
  num::Tensor vocal;        // [frames x feature_dim]
  num::Tensor mixture;      // same shape
  double gain = 0.0;

  std::size_t frames() const { return vocal.rows(); }
};

/// Deterministic in (seed, cfg). `feature_dim` must match the model.
PairedSample generate_sample(std::uint64_t seed, const GenConfig& cfg, std::size_t feature_dim);

/// Renders a given text with the vocal table only (no timbre, jitter or
/// accompaniment); used for long-form tests.
num::Tensor render_clean(const std::string& text, const GenConfig& cfg, std::size_t feature_dim);

}  // namespace dualtune
