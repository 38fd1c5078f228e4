#include "dualtune/synthdata/generator.hpp"

#include <cmath>
#include <map>
#include <tuple>

#include "dualtune/common/json_fields.hpp"
#include "dualtune/numerics/rng.hpp"
#include "dualtune/synthdata/preprocess.hpp"
#include "dualtune/synthdata/tokenizer.hpp"

namespace dualtune {

using nlohmann::json;
using num::Tensor;

void GenConfig::validate() const {
  const auto fail = [](const std::string& what) { throw ConfigError("gen: " + what); };
  if (languages.empty()) fail("at least one language is required");
  double total = 0.0;
  for (const auto& [tag, w] : languages) {
    lexicon(tag);
    if (!(w > 0.0)) fail("language weight for '" + tag + "' must be positive");
    total += w;
  }
  if (!std::isfinite(total)) fail("language weights must be finite");
  if (words_min < 1 || words_min > words_max) fail("need 1 <= words_min <= words_max");
  if (lines_min < 1 || lines_min > lines_max) fail("need 1 <= lines_min <= lines_max");
  if (frames_per_token < 1) fail("frames_per_token must be >= 1");
  if (max_frames < frames_per_token * 8) fail("max_frames too small for one word");
  if (!(jitter >= 0.0) || !(timbre >= 0.0)) fail("jitter and timbre must be >= 0");
  if (!(gain_lo >= 0.0) || !(gain_lo <= gain_hi)) fail("need 0 <= gain_lo <= gain_hi");
  if (distractor_vocab < 1) fail("distractor_vocab must be >= 1");
  if (distractor_min_frames < 1 || distractor_min_frames > distractor_max_frames) {
    fail("need 1 <= distractor_min_frames <= distractor_max_frames");
  }
}

json gen_config_to_json(const GenConfig& c) {
  json langs = json::object();
  for (const auto& [tag, w] : c.languages) langs[tag] = w;
  return json{{"languages", langs},
              {"words_min", c.words_min},
              {"words_max", c.words_max},
              {"lines_min", c.lines_min},
              {"lines_max", c.lines_max},
              {"frames_per_token", c.frames_per_token},
              {"max_frames", c.max_frames},
              {"jitter", c.jitter},
              {"timbre", c.timbre},
              {"gain_lo", c.gain_lo},
              {"gain_hi", c.gain_hi},
              {"distractor_vocab", c.distractor_vocab},
              {"distractor_min_frames", c.distractor_min_frames},
              {"distractor_max_frames", c.distractor_max_frames},
              {"embedding_seed", c.embedding_seed},
              {"distractor_seed", c.distractor_seed},
              {"corpus_seed", c.corpus_seed}};
}

GenConfig gen_config_from_json(const json& j) {
  GenConfig c;
  FieldReader r(j, "gen");
  if (const auto* langs = r.child("languages")) {
    if (!langs->is_object()) throw ConfigError("gen.languages: expected {tag: weight}");
    c.languages.clear();
    for (const auto& [tag, w] : langs->items()) c.languages.emplace_back(tag, w.get<double>());
  }
  r.get("words_min", c.words_min);
  r.get("words_max", c.words_max);
  r.get("lines_min", c.lines_min);
  r.get("lines_max", c.lines_max);
  r.get("frames_per_token", c.frames_per_token);
  r.get("max_frames", c.max_frames);
  r.get("jitter", c.jitter);
  r.get("timbre", c.timbre);
  r.get("gain_lo", c.gain_lo);
  r.get("gain_hi", c.gain_hi);
  r.get("distractor_vocab", c.distractor_vocab);
  r.get("distractor_min_frames", c.distractor_min_frames);
  r.get("distractor_max_frames", c.distractor_max_frames);
  r.get("embedding_seed", c.embedding_seed);
  r.get("distractor_seed", c.distractor_seed);
  r.get("corpus_seed", c.corpus_seed);
  r.finish();
  c.validate();
  return c;
}

const std::vector<std::string>& lexicon(const std::string& language) {
  static const std::map<std::string, std::vector<std::string>> kLexicons = {
      {"en",
       {"love", "you", "baby", "night", "heart", "fire", "dream", "dance", "oh", "yeah",
        "me", "my", "the", "sky", "rain", "home", "time", "feel", "know", "go"}},
      {"it",
       {"amore", "cuore", "notte", "sole", "mare", "vita", "luna", "cielo", "bella", "ciao",
        "canto", "sempre", "dolce", "fiore", "tempo", "mio", "tu", "per", "non", "oh"}},
      {"pt",
       {"amor", "vida", "noite", "sol", "mar", "lua", "beijo", "meu", "voce", "sonho",
        "flor", "tempo", "danca", "sempre", "ai", "bem", "so", "la", "cantar", "mundo"}},
  };
  auto it = kLexicons.find(language);
  if (it == kLexicons.end()) throw ConfigError("no lexicon for language '" + language + "'");
  return it->second;
}

namespace {

const std::vector<double>& gaussian_table(std::uint64_t seed, std::size_t rows,
                                          std::size_t cols) {
  thread_local std::map<std::tuple<std::uint64_t, std::size_t, std::size_t>, std::vector<double>>
      cache;
  auto [it, inserted] = cache.try_emplace({seed, rows, cols});
  if (inserted) {
    Rng rng(seed);
    it->second.resize(rows * cols);
    for (auto& v : it->second) v = rng.normal();
  }
  return it->second;
}

std::string pick_language(const GenConfig& cfg, Rng& rng) {
  double total = 0.0;
  for (const auto& [tag, w] : cfg.languages) total += w;
  double u = rng.uniform() * total;
  for (const auto& [tag, w] : cfg.languages) {
    if (u < w) return tag;
    u -= w;
  }
  return cfg.languages.back().first;
}

std::string draw_text(const GenConfig& cfg, const std::string& language, Rng& rng) {
  const auto& words = lexicon(language);
  const std::size_t max_chars = cfg.max_frames / cfg.frames_per_token;
  const auto n_lines = static_cast<std::size_t>(rng.uniform_int(
      static_cast<std::int64_t>(cfg.lines_min), static_cast<std::int64_t>(cfg.lines_max)));
  std::vector<LyricLine> lines;
  for (std::size_t l = 0; l < n_lines; ++l) {
    const auto n_words = static_cast<std::size_t>(rng.uniform_int(
        static_cast<std::int64_t>(cfg.words_min), static_cast<std::int64_t>(cfg.words_max)));
    std::string line;
    for (std::size_t w = 0; w < n_words; ++w) {
      const auto& word = words[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(words.size()) - 1))];
      const std::size_t added = line.empty() ? word.size() : line.size() + 1 + word.size();
      if (added > max_chars) continue;
      line = line.empty() ? word : line + " " + word;
    }
    lines.push_back({line, line.size() * cfg.frames_per_token});
  }
  // A joining space costs frames too; budget for it when packing lines.
  std::vector<LyricLine> padded = lines;
  for (std::size_t i = 1; i < padded.size(); ++i) padded[i].frames += cfg.frames_per_token;
  const auto segments = merge_segments(padded, cfg.max_frames);
  std::string text;
  for (auto idx : segments.front().lines) {
    if (!text.empty()) text.push_back(' ');
    text += lines[idx].text;
  }
  return clean_lyrics(text);
}

}  // namespace

PairedSample generate_sample(std::uint64_t seed, const GenConfig& cfg, std::size_t feature_dim) {
  Rng rng(seed);
  PairedSample s;
  s.seed = seed;
  s.language = pick_language(cfg, rng);
  s.text = draw_text(cfg, s.language, rng);
  s.tokens = tokenize(s.text);

  const auto chars = char_ids(s.text);
  const std::size_t frames = chars.size() * cfg.frames_per_token;
  const auto f = feature_dim;
  const auto& vocal_table = gaussian_table(cfg.embedding_seed, kVocabSize, f);
  const auto& accomp_table = gaussian_table(cfg.distractor_seed, cfg.distractor_vocab, f);

  std::vector<double> timbre(f);
  for (auto& v : timbre) v = cfg.timbre * rng.normal();
  std::vector<double> vocal(frames * f);
  for (std::size_t t = 0; t < frames; ++t) {
    const auto id = static_cast<std::size_t>(chars[t / cfg.frames_per_token]);
    for (std::size_t j = 0; j < f; ++j) {
      vocal[t * f + j] = vocal_table[id * f + j] + timbre[j] + cfg.jitter * rng.normal();
    }
  }

  s.gain = rng.uniform(cfg.gain_lo, cfg.gain_hi);
  std::vector<double> mixture = vocal;
  std::size_t t = 0;
  while (t < frames) {
    const auto id = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(cfg.distractor_vocab) - 1));
    const auto len = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(cfg.distractor_min_frames),
                        static_cast<std::int64_t>(cfg.distractor_max_frames)));
    for (std::size_t k = 0; k < len && t < frames; ++k, ++t) {
      for (std::size_t j = 0; j < f; ++j) mixture[t * f + j] += s.gain * accomp_table[id * f + j];
    }
  }

  s.vocal = Tensor::from({frames, f}, std::move(vocal));
  s.mixture = Tensor::from({frames, f}, std::move(mixture));
  return s;
}

Tensor render_clean(const std::string& text, const GenConfig& cfg, std::size_t feature_dim) {
  const auto chars = char_ids(text);
  const auto f = feature_dim;
  const auto& table = gaussian_table(cfg.embedding_seed, kVocabSize, f);
  const std::size_t frames = chars.size() * cfg.frames_per_token;
  std::vector<double> v(frames * f);
  for (std::size_t t = 0; t < frames; ++t) {
    const auto id = static_cast<std::size_t>(chars[t / cfg.frames_per_token]);
    std::copy_n(table.begin() + static_cast<std::ptrdiff_t>(id * f), f,
                v.begin() + static_cast<std::ptrdiff_t>(t * f));
  }
  return Tensor::from({frames, f}, std::move(v));
}

}  // namespace dualtune
