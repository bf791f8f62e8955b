#pragma once

// Command-line and config-file handling. Precedence: flags over file values
// over defaults. The config file is UTF-8 text, one `key = value` per line,
// `#` starts a comment; keys are the long flag names with '-' or '_'.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "itconv/harness.hpp"

namespace itconv {

struct CliOptions {
  SimConfig config;
  int workers = 1;
  std::optional<std::string> config_file;
  bool help = false;
  std::string help_text;
};

// `args` excludes the program name. Throws UsageError naming the offending
// flag or config-file line.
CliOptions parse_config(std::span<const std::string> args);
CliOptions parse_config(int argc, const char* const* argv);

// Applies the contents of a config file on top of `options`.
void apply_config_text(std::string_view text, CliOptions& options, const std::string& origin);

// Canonical `key = value` rendering of every SimConfig field; parsing it back
// reproduces the config exactly.
std::string render_config(const SimConfig& config);
std::vector<std::pair<std::string, std::string>> config_entries(const SimConfig& config);

}  // namespace itconv
