#pragma once

// Corpus files are JSON lines, one sample per line:
//
//   {"id": "test-00017", "split": "test", "seed": 1234, "lang": "en",
//    "text": "love you", "frames": 24, "gain": 0.71, "params": {GenConfig}}
//
// Features are not stored; materialize() regenerates them from seed and
// params and checks that the regenerated lyrics match "text".

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dualtune/synthdata/generator.hpp"

namespace dualtune {

struct CorpusRecord {
  std::string id;
  std::string split;
  std::uint64_t seed = 0;
  std::string language;
  std::string text;
  std::size_t frames = 0;
  double gain = 0.0;
  GenConfig params;
};

/// Seed of sample `index` in split `split_index` under `corpus_seed`.
/// Distinct splits draw from disjoint derived streams.
std::uint64_t sample_seed(std::uint64_t corpus_seed, std::uint64_t split_index,
                          std::uint64_t index);

std::vector<CorpusRecord> generate_split(const GenConfig& cfg, const std::string& split,
                                         std::uint64_t split_index, std::size_t count,
                                         std::size_t feature_dim);

void write_corpus(const std::filesystem::path& path, const std::vector<CorpusRecord>& records);
std::vector<CorpusRecord> read_corpus(const std::filesystem::path& path);

PairedSample materialize(const CorpusRecord& record, std::size_t feature_dim);
std::vector<PairedSample> materialize_all(const std::vector<CorpusRecord>& records,
                                          std::size_t feature_dim);

/// SHA-256 over the serialized features and lyrics of every sample.
std::string corpus_digest(const std::vector<PairedSample>& samples);

}  // namespace dualtune
