#pragma once

#include <string>
#include <string_view>

#include "crdrn/engine.hpp"

namespace crdrn {

// Flat "key = value" config text. '#' starts a comment, blank lines are
// skipped, unknown keys are rejected with a ConfigError naming the key.
ExperimentConfig parse_config(std::string_view text);

// Canonical form: every key once, fixed order. serialize(parse(x)) is a
// fixed point.
std::string serialize_config(const ExperimentConfig& cfg);

ExperimentConfig load_config_file(const std::string& path);  // throws on I/O failure

// Writes via a temp file plus rename so readers never observe a torn file.
void write_file_atomic(const std::string& path, std::string_view content);

}  // namespace crdrn
