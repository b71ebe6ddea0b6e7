#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "condmem/types.hpp"

namespace condmem {

inline constexpr const char* kToolVersion = "0.1.0";

using Settings = std::vector<std::pair<std::string, std::string>>;

/// Flat `key = value` text with dotted section prefixes; `#` starts a comment.
///
/// `ensemble.<field>` assigns both ensembles at once. Unknown keys and
/// unparsable values throw InvalidConfig naming the key; the assembled
/// configuration is validated before it is returned.
RunConfig parse_config(std::string_view text, RunConfig base = {});

/// Settings in the file override `base`.
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Applies one setting in place. Throws InvalidConfig.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

/// Canonical ordered settings; parse_config over them reproduces the config exactly.
/// `shards` and `threads` change how a run executes, not its result; they are
/// left out when include_execution is false.
Settings to_settings(const RunConfig& config, bool include_execution = true);

bool is_execution_setting(std::string_view key);

/// Canonical multi-line `key = value` form.
std::string format_config(const RunConfig& config);

/// FNV-1a 64 over the canonical form without execution settings, as 16 hex digits.
std::string config_hash(const RunConfig& config);

/// Header line shared by every output file.
std::string output_header(const RunConfig& config);

std::string format_double(double value);

}  // namespace condmem
