#include "dualtune/model/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dualtune/common/json_fields.hpp"

namespace dualtune {

using nlohmann::json;
using num::Tensor;

namespace {

constexpr std::array<char, 8> kMagic = {'D', 'T', 'C', 'K', 'P', 'T', '\0', '\0'};

void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

std::uint64_t get_u64(const std::string& in, std::size_t& pos, std::size_t width) {
  if (pos + width > in.size()) throw CheckpointError("checkpoint truncated");
  std::uint64_t v = 0;
  for (std::size_t b = 0; b < width; ++b) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + b])) << (8 * b);
  }
  pos += width;
  return v;
}

struct Entry {
  std::string name;
  Tensor tensor;
};

}  // namespace

json model_config_to_json(const ModelConfig& c) {
  return json{{"feature_dim", c.feature_dim},       {"hidden_dim", c.hidden_dim},
              {"num_heads", c.num_heads},           {"encoder_layers", c.encoder_layers},
              {"decoder_layers", c.decoder_layers}, {"mlp_dim", c.mlp_dim},
              {"vocab_size", c.vocab_size},         {"max_audio_frames", c.max_audio_frames},
              {"max_token_len", c.max_token_len}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  FieldReader r(j, "model");
  r.get("feature_dim", c.feature_dim);
  r.get("hidden_dim", c.hidden_dim);
  r.get("num_heads", c.num_heads);
  r.get("encoder_layers", c.encoder_layers);
  r.get("decoder_layers", c.decoder_layers);
  r.get("mlp_dim", c.mlp_dim);
  r.get("vocab_size", c.vocab_size);
  r.get("max_audio_frames", c.max_audio_frames);
  r.get("max_token_len", c.max_token_len);
  r.finish();
  try {
    c.validate();
  } catch (const num::ContractError& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  return c;
}

json lora_config_to_json(const LoraConfig& c) {
  return json{{"rank", c.rank}, {"alpha", c.alpha}, {"dropout", c.dropout}};
}

LoraConfig lora_config_from_json(const json& j) {
  LoraConfig c;
  FieldReader r(j, "lora");
  r.get("rank", c.rank);
  r.get("alpha", c.alpha);
  r.get("dropout", c.dropout);
  r.finish();
  try {
    c.validate();
  } catch (const num::ContractError& e) {
    throw ConfigError(std::string("lora: ") + e.what());
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const TranscriberModel& model,
                     const SeedLineage& seeds) {
  std::vector<Entry> entries;
  for (const auto& p : model.base_parameters()) entries.push_back({p.name, p.tensor});
  for (const auto& [id, a] : model.adapters()) {
    entries.push_back({"lora:" + id + ".A", a.a});
    entries.push_back({"lora:" + id + ".B", a.b});
  }

  json header;
  header["format"] = "dualtune-checkpoint";
  header["version"] = kCheckpointVersion;
  header["model"] = model_config_to_json(model.config());
  header["init_seed"] = model.init_seed();
  header["lora"] = model.lora_config() ? lora_config_to_json(*model.lora_config()) : json();
  header["seed_lineage"] = seeds;
  json table = json::array();
  for (const auto& e : entries) table.push_back({{"name", e.name}, {"shape", e.tensor.shape()}});
  header["tensors"] = table;
  const std::string header_text = header.dump();

  std::string blob(kMagic.begin(), kMagic.end());
  for (int b = 0; b < 4; ++b) blob.push_back(static_cast<char>((kCheckpointVersion >> (8 * b)) & 0xFF));
  put_u64(blob, header_text.size());
  blob += header_text;
  for (const auto& e : entries) {
    for (double v : e.tensor.values()) put_u64(blob, std::bit_cast<std::uint64_t>(v));
  }

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string blob = ss.str();

  if (blob.size() < kMagic.size() || !std::equal(kMagic.begin(), kMagic.end(), blob.begin())) {
    throw CheckpointError(path.string() + " is not a checkpoint file");
  }
  std::size_t pos = kMagic.size();
  const auto version = get_u64(blob, pos, 4);
  if (version != kCheckpointVersion) {
    throw CheckpointError(path.string() + ": unsupported checkpoint version " +
                          std::to_string(version));
  }
  const auto header_len = get_u64(blob, pos, 8);
  if (pos + header_len > blob.size()) throw CheckpointError(path.string() + ": truncated header");
  json header;
  try {
    header = json::parse(blob.substr(pos, header_len));
  } catch (const json::exception& e) {
    throw CheckpointError(path.string() + ": bad header: " + e.what());
  }
  pos += header_len;

  Checkpoint ck{TranscriberModel(model_config_from_json(header.at("model")),
                                 header.at("init_seed").get<std::uint64_t>()),
                header.at("seed_lineage").get<SeedLineage>()};
  std::optional<LoraConfig> lora;
  if (!header.at("lora").is_null()) lora = lora_config_from_json(header.at("lora"));

  std::map<std::string, LoraAdapter> adapters;
  for (const auto& item : header.at("tensors")) {
    const auto name = item.at("name").get<std::string>();
    const auto shape = item.at("shape").get<num::Shape>();
    std::vector<double> values(num::numel(shape));
    for (auto& v : values) v = std::bit_cast<double>(get_u64(blob, pos, 8));

    if (name.rfind("lora:", 0) == 0) {
      if (!lora) throw CheckpointError(path.string() + ": adapter tensor without LoRA config");
      const auto target = name.substr(5, name.size() - 7);
      const bool is_a = name.ends_with(".A");
      auto& adapter = adapters[target];
      adapter.rank = lora->rank;
      adapter.alpha = lora->alpha;
      adapter.dropout = lora->dropout;
      (is_a ? adapter.a : adapter.b) = Tensor::from(shape, std::move(values), true);
      continue;
    }
    Tensor dst = ck.model.base_parameter(name);
    if (dst.shape() != shape) {
      throw CheckpointError(path.string() + ": shape mismatch for " + name);
    }
    std::copy(values.begin(), values.end(), dst.mutable_values().begin());
  }
  if (pos != blob.size()) throw CheckpointError(path.string() + ": trailing bytes");
  for (auto& [target, adapter] : adapters) {
    if (!adapter.a.defined() || !adapter.b.defined()) {
      throw CheckpointError(path.string() + ": incomplete adapter " + target);
    }
    ck.model.set_adapter(target, std::move(adapter), *lora);
  }
  ck.model.set_phase(ck.model.has_adapters() ? Phase::Finetune : Phase::Pretrain);
  return ck;
}

}  // namespace dualtune
