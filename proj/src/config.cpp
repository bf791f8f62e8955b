#include "itconv/config.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "itconv/error.hpp"

namespace itconv {
namespace {

const std::vector<std::string>& value_keys() {
  static const std::vector<std::string> keys{"n_sim", "n_cases",  "rho",  "p_miss",  "checkpoints",
                                             "t_max", "m",        "seed", "out_dir", "workers"};
  return keys;
}

std::string dashed(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

std::string canonical_key(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
T parse_integer(const std::string& text, const std::string& where) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty())
    throw UsageError(where + ": expected an integer, got '" + text + "'");
  return value;
}

double parse_real(const std::string& text, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw UsageError(where + ": expected a number, got '" + text + "'");
  }
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

bool parse_bool(const std::string& text, const std::string& where) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw UsageError(where + ": expected true or false, got '" + text + "'");
}

struct ParseState {
  CliOptions& options;
  bool checkpoints_set = false;
};

void apply_setting(ParseState& state, const std::string& raw_key, const std::string& value,
                   const std::string& where) {
  const std::string key = canonical_key(raw_key);
  SimConfig& c = state.options.config;
  if (key == "n_sim") {
    c.n_sim = parse_integer<int>(value, where);
    if (c.n_sim < 1) throw UsageError(where + ": must be at least 1");
  } else if (key == "n_cases") {
    c.n_cases = parse_integer<int>(value, where);
  } else if (key == "rho") {
    c.rho = parse_real(value, where);
  } else if (key == "p_miss") {
    c.p_miss.clear();
    for (const auto& item : split_list(value)) {
      const double p = parse_real(item, where);
      if (!(p >= 0.0 && p < 1.0))
        throw UsageError(where + ": proportion " + item + " outside [0, 1)");
      c.p_miss.push_back(p);
    }
  } else if (key == "checkpoints") {
    c.checkpoints.clear();
    for (const auto& item : split_list(value)) c.checkpoints.push_back(parse_integer<int>(item, where));
    state.checkpoints_set = true;
  } else if (key == "t_max") {
    c.t_max = parse_integer<int>(value, where);
  } else if (key == "m") {
    c.m = parse_integer<int>(value, where);
  } else if (key == "seed") {
    c.seed = parse_integer<std::uint64_t>(value, where);
  } else if (key == "out_dir") {
    c.out_dir = value;
  } else if (key == "emit_traces") {
    c.emit_traces = parse_bool(value, where);
  } else if (key == "workers") {
    state.options.workers = parse_integer<int>(value, where);
    if (state.options.workers < 0) throw UsageError(where + ": must be >= 0");
  } else {
    throw UsageError(where + ": unknown key '" + raw_key + "'");
  }
}

void apply_text(std::string_view text, ParseState& state, const std::string& origin) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    const std::string where = origin + ":" + std::to_string(line_no);
    if (eq == std::string::npos) throw UsageError(where + ": expected 'key = value'");
    const std::string key = trim(std::string_view(content).substr(0, eq));
    const std::string value = trim(std::string_view(content).substr(eq + 1));
    apply_setting(state, key, value, where + " (" + key + ")");
  }
}

void finish(ParseState& state) {
  SimConfig& c = state.options.config;
  if (!state.checkpoints_set) {
    // Defaults beyond a shortened t_max are dropped rather than rejected.
    std::erase_if(c.checkpoints, [&](int t) { return t > c.t_max; });
  }
  try {
    c.validate();
  } catch (const DomainError& e) {
    throw UsageError(std::string("invalid configuration: ") + e.what());
  }
}

}  // namespace

void apply_config_text(std::string_view text, CliOptions& options, const std::string& origin) {
  ParseState state{options};
  apply_text(text, state, origin);
}

CliOptions parse_config(std::span<const std::string> args) {
  CliOptions options;
  ParseState state{options};

  CLI::App app{"Chained-equations imputation convergence simulation"};
  app.name("itconv");
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> flags;
  const std::map<std::string, std::string> help{
      {"n_sim", "Simulation repetitions"},
      {"n_cases", "Rows per simulated dataset"},
      {"rho", "Pairwise correlation of the population"},
      {"p_miss", "Comma-separated proportions of incomplete cases"},
      {"checkpoints", "Comma-separated early-stopping iterations"},
      {"t_max", "Iterations per chain"},
      {"m", "Chains (imputations)"},
      {"seed", "Master seed"},
      {"out_dir", "Output directory"},
      {"workers", "Worker threads (0 = all cores)"},
  };
  for (const auto& key : value_keys())
    flags[key] = app.add_option("--" + dashed(key), values[key], help.at(key));
  bool emit_traces = false;
  auto* emit_flag = app.add_flag("--emit-traces", emit_traces, "Also write trace.csv (large)");
  std::string config_path;
  auto* config_flag = app.add_option("--config", config_path, "key = value config file");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    options.help = true;
    options.help_text = app.help();
    return options;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  if (config_flag->count() > 0) {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw UsageError("--config: cannot read '" + config_path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    options.config_file = config_path;
    apply_text(buffer.str(), state, config_path);
  }
  for (const auto& key : value_keys())
    if (flags[key]->count() > 0) apply_setting(state, key, values[key], "--" + dashed(key));
  if (emit_flag->count() > 0) options.config.emit_traces = emit_traces;

  finish(state);
  return options;
}

CliOptions parse_config(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return parse_config(args);
}

std::vector<std::pair<std::string, std::string>> config_entries(const SimConfig& c) {
  auto join_reals = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
    return s;
  };
  std::string cps;
  for (std::size_t i = 0; i < c.checkpoints.size(); ++i)
    cps += (i ? "," : "") + std::to_string(c.checkpoints[i]);
  return {
      {"n_sim", std::to_string(c.n_sim)},
      {"n_cases", std::to_string(c.n_cases)},
      {"rho", format_double(c.rho)},
      {"p_miss", join_reals(c.p_miss)},
      {"checkpoints", cps},
      {"t_max", std::to_string(c.t_max)},
      {"m", std::to_string(c.m)},
      {"seed", std::to_string(c.seed)},
      {"out_dir", c.out_dir},
      {"emit_traces", c.emit_traces ? "true" : "false"},
  };
}

std::string render_config(const SimConfig& config) {
  std::string out;
  for (const auto& [k, v] : config_entries(config)) out += k + " = " + v + "\n";
  return out;
}

}  // namespace itconv
