#include "dualtune/synthdata/corpus.hpp"

#include <cstdio>
#include <fstream>

#include "dualtune/common/digest.hpp"
#include "dualtune/common/json_fields.hpp"
#include "dualtune/numerics/rng.hpp"

namespace dualtune {

using nlohmann::json;

std::uint64_t sample_seed(std::uint64_t corpus_seed, std::uint64_t split_index,
                          std::uint64_t index) {
  return derive_seed(derive_seed(corpus_seed, split_index), index);
}

std::vector<CorpusRecord> generate_split(const GenConfig& cfg, const std::string& split,
                                         std::uint64_t split_index, std::size_t count,
                                         std::size_t feature_dim) {
  cfg.validate();
  std::vector<CorpusRecord> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto seed = sample_seed(cfg.corpus_seed, split_index, i);
    const auto s = generate_sample(seed, cfg, feature_dim);
    char id[64];
    std::snprintf(id, sizeof id, "%s-%05zu", split.c_str(), i);
    out.push_back({id, split, seed, s.language, s.text, s.frames(), s.gain, cfg});
  }
  return out;
}

void write_corpus(const std::filesystem::path& path, const std::vector<CorpusRecord>& records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write corpus file " + path.string());
  for (const auto& r : records) {
    json j{{"id", r.id},     {"split", r.split}, {"seed", r.seed},   {"lang", r.language},
           {"text", r.text}, {"frames", r.frames}, {"gain", r.gain}, {"params", gen_config_to_json(r.params)}};
    out << j.dump() << '\n';
  }
  if (!out) throw ConfigError("failed writing corpus file " + path.string());
}

std::vector<CorpusRecord> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("corpus file not found: " + path.string());
  std::vector<CorpusRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto context = path.filename().string() + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ConfigError(context + ": " + e.what());
    }
    CorpusRecord r;
    FieldReader f(j, context);
    f.require("id", r.id);
    f.require("split", r.split);
    f.require("seed", r.seed);
    f.require("lang", r.language);
    f.require("text", r.text);
    f.require("frames", r.frames);
    f.require("gain", r.gain);
    const auto* params = f.child("params");
    if (!params) throw ConfigError(context + ": missing field 'params'");
    r.params = gen_config_from_json(*params);
    f.finish();
    records.push_back(std::move(r));
  }
  return records;
}

PairedSample materialize(const CorpusRecord& record, std::size_t feature_dim) {
  auto s = generate_sample(record.seed, record.params, feature_dim);
  if (s.text != record.text || s.language != record.language || s.frames() != record.frames) {
    throw ConfigError("corpus record " + record.id +
                      " does not regenerate (expected \"" + record.text + "\", got \"" +
                      s.text + "\")");
  }
  return s;
}

std::vector<PairedSample> materialize_all(const std::vector<CorpusRecord>& records,
                                          std::size_t feature_dim) {
  std::vector<PairedSample> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(materialize(r, feature_dim));
  return out;
}

std::string corpus_digest(const std::vector<PairedSample>& samples) {
  Sha256 sha;
  for (const auto& s : samples) {
    sha.update(s.seed);
    sha.update(s.language);
    sha.update(s.text);
    sha.update(s.vocal.values());
    sha.update(s.mixture.values());
  }
  return sha.finish();
}

}  // namespace dualtune
