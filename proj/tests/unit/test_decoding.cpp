#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "../support/oracles.hpp"
#include "dualtune/decoding/decoder.hpp"
#include "dualtune/numerics/ops.hpp"
#include "dualtune/synthdata/tokenizer.hpp"

using namespace dualtune;
using num::Tensor;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.feature_dim = 6;
  c.hidden_dim = 8;
  c.num_heads = 2;
  c.encoder_layers = 1;
  c.decoder_layers = 1;
  c.mlp_dim = 12;
  c.max_audio_frames = 10;
  c.max_token_len = 8;
  return c;
}

DecodeConfig small_decode() { return DecodeConfig{8, 10}; }

Tensor features(Rng& rng, std::size_t frames) {
  return oracle::random_tensor(rng, {frames, 6}, 1.0, false);
}

/// Zeroes the output projection and sets its bias, so every step's logits
/// equal `bias` regardless of input.
void force_logits(TranscriberModel& model, const std::vector<double>& bias) {
  auto w = model.base_parameter("dec.out.weight");
  for (auto& v : w.mutable_values()) v = 0.0;
  auto b = model.base_parameter("dec.out.bias");
  std::copy(bias.begin(), bias.end(), b.mutable_values().begin());
}

}  // namespace

TEST_CASE("forced EOS stops after one step") {
  TranscriberModel model(small_config(), 1);
  auto eos = model.base_parameter("dec.out.bias");
  eos.mutable_values()[tokens::kEos] += 1000.0;
  Rng rng(1);
  CHECK(greedy_decode(model, features(rng, 7), small_decode()) ==
        std::vector<int>{tokens::kBos, tokens::kEos});
}

TEST_CASE("argmax ties go to the lowest token id and max_tokens bounds the output") {
  TranscriberModel model(small_config(), 1);
  std::vector<double> bias(kVocabSize, 0.0);
  bias[9] = bias[6] = bias[20] = 5.0;
  force_logits(model, bias);
  Rng rng(2);
  const auto out = greedy_decode(model, features(rng, 4), small_decode());
  REQUIRE(out.size() == 8);
  CHECK(out.front() == tokens::kBos);
  for (std::size_t i = 1; i < out.size(); ++i) CHECK(out[i] == 6);
  auto shorter = small_decode();
  shorter.max_tokens = 3;
  CHECK(greedy_decode(model, features(rng, 4), shorter).size() == 3);
}

TEST_CASE("greedy decode is deterministic and leaves the model untouched") {
  TranscriberModel model(small_config(), 3);
  model.attach_adapters(LoraConfig{}, 4);
  const auto digest = model.base_digest();
  Rng rng(3);
  for (int i = 0; i < 10; ++i) {
    const auto x = features(rng, static_cast<std::size_t>(rng.uniform_int(1, 10)));
    const auto a = greedy_decode(model, x, small_decode());
    const auto b = greedy_decode(model, x, small_decode());
    CHECK(a == b);
    CHECK(a.front() == tokens::kBos);
    CHECK(a.size() <= 8);
    for (std::size_t k = 1; k + 1 < a.size(); ++k) CHECK(a[k] != tokens::kEos);
  }
  CHECK(model.base_digest() == digest);
  for (const auto& p : model.trainable_parameters(Phase::Finetune)) CHECK_FALSE(p.has_grad());
}

TEST_CASE("decode config validation") {
  const auto cfg = small_config();
  CHECK_NOTHROW(small_decode().validate(cfg));
  CHECK_THROWS(DecodeConfig{9, 10}.validate(cfg));
  CHECK_THROWS(DecodeConfig{8, 11}.validate(cfg));
  CHECK_THROWS(DecodeConfig{1, 10}.validate(cfg));
  CHECK_THROWS(DecodeConfig{8, 0}.validate(cfg));
  TranscriberModel model(cfg, 1);
  Rng rng(4);
  CHECK_THROWS(greedy_decode(model, features(rng, 4), DecodeConfig{8, 11}));
}

TEST_CASE("window partition covers every frame exactly once") {
  using Ranges = std::vector<std::pair<std::size_t, std::size_t>>;
  CHECK(window_partition(10, 10) == Ranges{{0, 10}});
  CHECK(window_partition(20, 10) == Ranges{{0, 10}, {10, 20}});
  CHECK(window_partition(23, 10) == Ranges{{0, 10}, {10, 20}, {20, 23}});
  CHECK(window_partition(3, 10) == Ranges{{0, 3}});
  CHECK(window_partition(0, 10).empty());
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const auto frames = static_cast<std::size_t>(rng.uniform_int(0, 300));
    const auto window = static_cast<std::size_t>(rng.uniform_int(1, 64));
    const auto parts = window_partition(frames, window);
    std::size_t next = 0;
    for (const auto& [b, e] : parts) {
      CHECK(b == next);
      CHECK(e > b);
      CHECK(e - b <= window);
      if (e != frames) CHECK(e - b == window);
      next = e;
    }
    CHECK(next == frames);
  }
}

TEST_CASE("long-form decoding matches manual per-window greedy decodes") {
  TranscriberModel model(small_config(), 7);
  const auto cfg = small_decode();
  Rng rng(6);
  SUBCASE("single window equals greedy then detokenize") {
    const auto x = features(rng, 9);
    CHECK(longform_decode(model, x, cfg) == detokenize(greedy_decode(model, x, cfg)));
  }
  SUBCASE("inputs beyond the model context are split and joined") {
    for (std::size_t frames : {20, 27, 35}) {
      const auto x = features(rng, frames);
      std::string expect;
      for (std::size_t begin = 0; begin < frames; begin += 10) {
        const auto end = std::min<std::size_t>(begin + 10, frames);
        if (begin > 0) expect += ' ';
        expect += detokenize(greedy_decode(model, num::slice_rows(x, begin, end), cfg));
      }
      CHECK(longform_decode(model, x, cfg) == expect);
    }
    CHECK_THROWS(greedy_decode(model, features(rng, 20), cfg));
  }
}

TEST_CASE("transcript files round trip") {
  const auto path = std::filesystem::temp_directory_path() / "dualtune-test-transcripts.jsonl";
  const std::vector<TranscriptEntry> rows{
      {"test-00000", "mix", "la la"}, {"test-00000", "voc", ""}, {"test-00001", "mix", "amore"}};
  write_transcripts(path, rows);
  const auto back = read_transcripts(path);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].id == rows[i].id);
    CHECK(back[i].condition == rows[i].condition);
    CHECK(back[i].hypothesis == rows[i].hypothesis);
  }
  std::ofstream(path) << "{\"id\": \"x\", \"condition\": \"mix\"}\n";
  CHECK_THROWS(read_transcripts(path));
  std::filesystem::remove(path);
  CHECK_THROWS(read_transcripts(path));
}
