#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>

#include "hpgan/error.hpp"
#include "hpgan/training.hpp"

namespace hpgan {

namespace {

constexpr std::array<char, 8> kMagic{'H', 'P', 'G', 'A', 'N', 'C', 'K', 'P'};

template <class UInt>
void put_le(std::string& out, UInt v) {
  for (std::size_t i = 0; i < sizeof(UInt); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

template <class UInt>
UInt get_le(const std::string& in, std::size_t& pos) {
  if (in.size() - pos < sizeof(UInt)) throw CheckpointError("checkpoint truncated");
  UInt v = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    v |= static_cast<UInt>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  pos += sizeof(UInt);
  return v;
}

}  // namespace

void save_checkpoint(const Models& models, const std::optional<NormStats>& normalization,
                     const std::filesystem::path& path) {
  nlohmann::json tensors = nlohmann::json::array();
  std::size_t count = 0;
  const auto params = models.all_parameters();
  for (const Parameter* p : params) {
    tensors.push_back({{"name", p->name}, {"shape", p->shape()}});
    count += p->value.numel();
  }
  nlohmann::json header{{"version", kCheckpointVersion},
                        {"config", to_json(models.config)},
                        {"normalization", normalization ? to_json(*normalization) : nlohmann::json(nullptr)},
                        {"tensors", tensors},
                        {"value_count", count}};
  const std::string header_text = header.dump();

  std::string blob(kMagic.begin(), kMagic.end());
  put_le<std::uint32_t>(blob, kCheckpointVersion);
  put_le<std::uint64_t>(blob, header_text.size());
  blob += header_text;
  blob.reserve(blob.size() + 8 * count);
  for (const Parameter* p : params) {
    for (double v : p->value.data()) put_le<std::uint64_t>(blob, std::bit_cast<std::uint64_t>(v));
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint '" + path.string() + "'");
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw CheckpointError("write failed for checkpoint '" + path.string() + "'");
}

void save_checkpoint(const TrainRun& run, const std::filesystem::path& path,
                     const std::optional<NormStats>& normalization) {
  save_checkpoint(run.models, normalization, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
  const std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (blob.size() < kMagic.size() || std::memcmp(blob.data(), kMagic.data(), kMagic.size()) != 0) {
    throw CheckpointError("'" + path.string() + "' is not an hpgan checkpoint");
  }
  std::size_t pos = kMagic.size();
  const auto version = get_le<std::uint32_t>(blob, pos);
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  const auto header_len = get_le<std::uint64_t>(blob, pos);
  if (blob.size() - pos < header_len) throw CheckpointError("checkpoint truncated inside header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(blob.substr(pos, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint header: ") + e.what());
  }
  pos += header_len;

  ModelConfig config;
  std::optional<NormStats> normalization;
  std::vector<std::pair<std::string, Shape>> tensors;
  std::size_t count = 0;
  try {
    if (header.at("version").get<std::uint32_t>() != version) throw CheckpointError("header version mismatch");
    config = config_from_json(header.at("config"));
    if (!header.at("normalization").is_null()) normalization = norm_stats_from_json(header.at("normalization"));
    for (const auto& t : header.at("tensors")) {
      tensors.emplace_back(t.at("name").get<std::string>(), t.at("shape").get<Shape>());
    }
    count = header.at("value_count").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint header: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint config invalid: ") + e.what());
  } catch (const DataError& e) {
    throw CheckpointError(std::string("checkpoint normalisation invalid: ") + e.what());
  }

  if (blob.size() - pos != 8 * count) {
    throw CheckpointError("checkpoint payload holds " + std::to_string(blob.size() - pos) + " bytes, expected " +
                          std::to_string(8 * count));
  }

  Rng unused(0);
  Checkpoint ckpt{build_models(config, unused), normalization};
  auto params = ckpt.models.all_parameters();
  if (params.size() != tensors.size()) throw CheckpointError("checkpoint tensor list does not match its config");
  std::size_t total = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->name != tensors[i].first || params[i]->shape() != tensors[i].second) {
      throw CheckpointError("checkpoint tensor '" + tensors[i].first + "' " + shape_str(tensors[i].second) +
                            " does not match model layer '" + params[i]->name + "' " +
                            shape_str(params[i]->shape()));
    }
    total += params[i]->value.numel();
  }
  if (total != count) throw CheckpointError("checkpoint value_count disagrees with tensor shapes");

  for (Parameter* p : params) {
    for (double& v : p->value.mutable_data()) v = std::bit_cast<double>(get_le<std::uint64_t>(blob, pos));
  }
  return ckpt;
}

}  // namespace hpgan
