#include "fgnn/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

#include "fgnn/errors.hpp"

namespace fgnn {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double to_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) {
    throw UsageError("config key '" + key + "': '" + value + "' is not a number");
  }
  return out;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) {
    throw UsageError("config key '" + key + "': '" + value +
                     "' is not a non-negative integer");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw UsageError("config key '" + key + "': '" + value + "' is not a boolean");
}

// Round-trippable shortest representation.
std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

template <typename Parse>
auto wrap(const std::string& key, Parse parse) {
  try {
    return parse();
  } catch (const UsageError& e) {
    throw UsageError("config key '" + key + "': " + e.what());
  }
}

}  // namespace

KeyValues parse_key_values(std::istream& in) {
  KeyValues out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw UsageError("config line " + std::to_string(line_no) + ": empty key");
    }
    if (!out.emplace(key, value).second) {
      throw UsageError("config line " + std::to_string(line_no) + ": key '" + key +
                       "' given twice");
    }
  }
  return out;
}

KeyValues load_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path);
  return parse_key_values(in);
}

TrainingConfig apply_key_values(const KeyValues& values, TrainingConfig c) {
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"lr", [&](auto& k, auto& v) { c.lr = to_double(k, v); }},
      {"decay_factor", [&](auto& k, auto& v) { c.decay_factor = to_double(k, v); }},
      {"decay_every_epochs", [&](auto& k, auto& v) { c.decay_every_epochs = to_unsigned(k, v); }},
      {"schedule", [&](auto& k, auto& v) { c.schedule = wrap(k, [&] { return parse_schedule(v); }); }},
      {"l2", [&](auto& k, auto& v) { c.l2 = to_double(k, v); }},
      {"batch_size", [&](auto& k, auto& v) { c.batch_size = to_unsigned(k, v); }},
      {"epochs", [&](auto& k, auto& v) { c.epochs = to_unsigned(k, v); }},
      {"seed", [&](auto& k, auto& v) { c.seed = to_unsigned(k, v); }},
      {"beta1", [&](auto& k, auto& v) { c.beta1 = to_double(k, v); }},
      {"beta2", [&](auto& k, auto& v) { c.beta2 = to_double(k, v); }},
      {"eps", [&](auto& k, auto& v) { c.eps = to_double(k, v); }},
      {"init_stddev", [&](auto& k, auto& v) { c.init_stddev = to_double(k, v); }},
      {"dim", [&](auto& k, auto& v) { c.dim = to_unsigned(k, v); }},
      {"layers", [&](auto& k, auto& v) { c.layers = to_unsigned(k, v); }},
      {"heads", [&](auto& k, auto& v) { c.heads = to_unsigned(k, v); }},
      {"steps", [&](auto& k, auto& v) { c.steps = to_unsigned(k, v); }},
      {"combine", [&](auto& k, auto& v) { c.combine = wrap(k, [&] { return parse_head_combine(v); }); }},
      {"readout", [&](auto& k, auto& v) { c.readout = wrap(k, [&] { return parse_readout_kind(v); }); }},
      {"edge_weight_norm", [&](auto& k, auto& v) { c.edge_weight_norm = wrap(k, [&] { return parse_edge_weight_norm(v); }); }},
      {"selfloop_clamp", [&](auto& k, auto& v) { c.selfloop_clamp = to_bool(k, v); }},
  };
  for (const auto& [key, value] : values) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw UsageError("unknown config key '" + key + "'");
    it->second(key, value);
  }
  c.validate();
  return c;
}

KeyValues to_key_values(const TrainingConfig& c) {
  return {
      {"lr", format_double(c.lr)},
      {"decay_factor", format_double(c.decay_factor)},
      {"decay_every_epochs", std::to_string(c.decay_every_epochs)},
      {"schedule", to_string(c.schedule)},
      {"l2", format_double(c.l2)},
      {"batch_size", std::to_string(c.batch_size)},
      {"epochs", std::to_string(c.epochs)},
      {"seed", std::to_string(c.seed)},
      {"beta1", format_double(c.beta1)},
      {"beta2", format_double(c.beta2)},
      {"eps", format_double(c.eps)},
      {"init_stddev", format_double(c.init_stddev)},
      {"dim", std::to_string(c.dim)},
      {"layers", std::to_string(c.layers)},
      {"heads", std::to_string(c.heads)},
      {"steps", std::to_string(c.steps)},
      {"combine", to_string(c.combine)},
      {"readout", to_string(c.readout)},
      {"edge_weight_norm", to_string(c.edge_weight_norm)},
      {"selfloop_clamp", c.selfloop_clamp ? "true" : "false"},
  };
}

std::string format_key_values(const KeyValues& values) {
  std::string out;
  for (const auto& [k, v] : values) out += k + "=" + v + "\n";
  return out;
}

}  // namespace fgnn
