#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "signedrec/pipeline.hpp"
#include "signedrec/synth.hpp"

namespace signedrec {

// `key = value` lines; `#` starts a comment. Later keys override earlier ones.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::istream& in);
KeyValues read_config_file(const std::filesystem::path& path);

// Unknown keys and malformed values raise ValidationError.
void apply_config(const KeyValues& kv, ExperimentConfig& cfg);
void apply_config(const KeyValues& kv, SynthConfig& cfg);

// Snapshot that round-trips through parse_key_values + apply_config.
KeyValues to_key_values(const ExperimentConfig& cfg);
KeyValues to_key_values(const SynthConfig& cfg);

void write_key_values(const KeyValues& kv, std::ostream& out);

}  // namespace signedrec
