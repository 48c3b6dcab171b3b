#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "fgnn/train.hpp"

namespace fgnn {

// Ordered key -> raw value pairs.
using KeyValues = std::map<std::string, std::string>;

// Parses "key = value" lines. '#' starts a comment; blank lines are ignored.
// Throws UsageError with the line number on malformed input or repeated keys.
KeyValues parse_key_values(std::istream& in);
KeyValues load_key_values(const std::string& path);

// Applies `values` on top of `base`. Every key must be a TrainingConfig field;
// unknown keys and unparsable values raise UsageError naming the key.
TrainingConfig apply_key_values(const KeyValues& values, TrainingConfig base = {});

KeyValues to_key_values(const TrainingConfig& config);

// "key=value\n" lines in key order.
std::string format_key_values(const KeyValues& values);

}  // namespace fgnn
