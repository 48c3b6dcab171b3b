#include "fgnn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "fgnn/config.hpp"
#include "fgnn/errors.hpp"

namespace fgnn {

namespace {

constexpr char kMagic[8] = {'F', 'G', 'N', 'N', 'C', 'K', 'P', 'T'};
constexpr int kFormatVersion = 1;

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::uint64_t fnv1a(const char* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

void put_doubles(std::string& out, std::span<const double> values) {
  for (const double v : values) put_u64(out, std::bit_cast<std::uint64_t>(v));
}

std::string hex(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TrainingConfig& config,
                     const ModelParams& params, const AdamState* adam) {
  const auto named = params.parameters();
  if (adam != nullptr && adam->first_moment.size() != named.size()) {
    throw ContractError("Adam state does not match the model's parameter list");
  }
  std::string payload;
  nlohmann::ordered_json tensors = nlohmann::ordered_json::array();
  std::size_t offset = 0;
  for (const auto& p : named) {
    tensors.push_back({{"name", p.name}, {"shape", p.tensor.shape()}, {"offset", offset}});
    put_doubles(payload, p.tensor.values());
    offset += p.tensor.size();
  }
  if (adam != nullptr) {
    for (const auto& m : adam->first_moment) put_doubles(payload, m);
    for (const auto& v : adam->second_moment) put_doubles(payload, v);
  }

  nlohmann::ordered_json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["dtype"] = "float64-le";
  manifest["item_count"] = params.config.item_count;
  manifest["config"] = to_key_values(config);
  manifest["gru_gate_order"] = {"reset", "update", "candidate"};
  manifest["tensors"] = tensors;
  manifest["parameter_count"] = offset;
  if (adam != nullptr) {
    manifest["adam"] = {{"step", adam->step}};
  } else {
    manifest["adam"] = nullptr;
  }
  manifest["payload_bytes"] = payload.size();
  manifest["payload_fnv1a64"] = hex(fnv1a(payload.data(), payload.size()));

  const std::string text = manifest.dump();
  std::string bytes(kMagic, sizeof(kMagic));
  put_u64(bytes, text.size());
  bytes += text;
  bytes += payload;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IntegrityError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IntegrityError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IntegrityError("checkpoint " + path.string() + " cannot be opened");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto fail = [&](const std::string& section, const std::string& what) {
    return IntegrityError("checkpoint " + path.string() + ": " + section + ": " + what);
  };

  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw fail("header", "missing magic or truncated");
  }
  const std::uint64_t manifest_len =
      get_u64(reinterpret_cast<const unsigned char*>(bytes.data()) + 8);
  if (manifest_len > bytes.size() - 16) throw fail("manifest", "truncated");

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.begin() + 16,
                                     bytes.begin() + 16 + static_cast<std::ptrdiff_t>(manifest_len));
  } catch (const nlohmann::json::exception& e) {
    throw fail("manifest", e.what());
  }

  Checkpoint ck;
  std::size_t payload_bytes = 0;
  std::string checksum;
  std::vector<std::pair<std::string, ad::Shape>> entries;
  std::optional<std::uint64_t> adam_step;
  std::size_t item_count = 0;
  try {
    if (manifest.at("format_version").get<int>() != kFormatVersion) {
      throw fail("manifest", "unsupported format version");
    }
    KeyValues kv;
    for (const auto& [k, v] : manifest.at("config").items()) kv[k] = v.get<std::string>();
    ck.config = apply_key_values(kv);
    item_count = manifest.at("item_count").get<std::size_t>();
    for (const auto& t : manifest.at("tensors")) {
      entries.emplace_back(t.at("name").get<std::string>(), t.at("shape").get<ad::Shape>());
    }
    if (!manifest.at("adam").is_null()) {
      adam_step = manifest.at("adam").at("step").get<std::uint64_t>();
    }
    payload_bytes = manifest.at("payload_bytes").get<std::size_t>();
    checksum = manifest.at("payload_fnv1a64").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw fail("manifest", e.what());
  } catch (const UsageError& e) {
    throw fail("manifest", e.what());
  }

  const std::size_t payload_start = 16 + manifest_len;
  if (bytes.size() - payload_start != payload_bytes) {
    throw fail("payload", "expected " + std::to_string(payload_bytes) + " bytes, found " +
                              std::to_string(bytes.size() - payload_start));
  }
  if (hex(fnv1a(bytes.data() + payload_start, payload_bytes)) != checksum) {
    throw fail("checksum", "payload checksum mismatch");
  }

  Rng rng(0);
  ck.params = make_model(ck.config.model_config(item_count), 0.0, rng);
  auto named = ck.params.parameters();
  if (named.size() != entries.size()) {
    throw fail("manifest", "lists " + std::to_string(entries.size()) +
                               " tensors, architecture has " + std::to_string(named.size()));
  }
  const auto* cursor = reinterpret_cast<const unsigned char*>(bytes.data()) + payload_start;
  const auto* end = cursor + payload_bytes;
  const auto read_into = [&](std::span<double> dst, const std::string& section) {
    if (static_cast<std::size_t>(end - cursor) < dst.size() * 8) {
      throw fail(section, "payload too short");
    }
    for (auto& v : dst) {
      v = std::bit_cast<double>(get_u64(cursor));
      cursor += 8;
    }
  };
  for (std::size_t i = 0; i < named.size(); ++i) {
    const std::string section = "tensor " + entries[i].first;
    if (named[i].name != entries[i].first || named[i].tensor.shape() != entries[i].second) {
      throw fail(section, "expected " + named[i].name + " " +
                              ad::to_string(named[i].tensor.shape()) + ", found " +
                              ad::to_string(entries[i].second));
    }
    read_into(named[i].tensor.mutable_values(), section);
  }
  if (adam_step) {
    AdamState state = make_adam_state(named);
    state.step = *adam_step;
    for (auto& m : state.first_moment) read_into(m, "adam first moment");
    for (auto& v : state.second_moment) read_into(v, "adam second moment");
    ck.adam = std::move(state);
  }
  if (cursor != end) throw fail("payload", "trailing bytes after last tensor");
  return ck;
}

}  // namespace fgnn
