#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "gipa/trainer.hpp"

namespace gipa {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat `key = value` text, one entry per line, `#` starts a comment.
// Unknown keys, duplicate keys and malformed values are rejected; keys not
// mentioned keep their TrainConfig defaults. The result is validated.
TrainConfig parse_config(const std::string& text);
TrainConfig load_config(const std::filesystem::path& path);

// Every key with its current value, in the same grammar.
std::string format_config(const TrainConfig& cfg);

}  // namespace gipa
