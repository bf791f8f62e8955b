#pragma once

// Plot-ready CSV serialization and the run manifest.
//
// Every CSV starts with a `# schema=1` comment line followed by a mandatory
// header row; fields are comma separated, lines end in LF, numbers carry 17
// significant digits and undefined values are empty fields.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "itconv/harness.hpp"

namespace itconv {

inline constexpr const char* kArtifactVersion = "0.1.0";
inline constexpr int kCsvSchema = 1;

std::string format_number(double value);
std::string format_number(const std::optional<double>& value);

std::string summary_csv(std::span<const ConditionSummary> summaries);
std::string repetitions_csv(std::span<const RepetitionRecord> records);
// Long format: rep, p_miss, chain, iteration, statistic, variable, value.
void write_trace_csv(std::ostream& out, std::span<const ConditionTrace> traces,
                     const std::vector<std::string>& variable_names);
std::string trace_csv(std::span<const ConditionTrace> traces,
                      const std::vector<std::string>& variable_names);

std::string sha256_hex(std::string_view bytes);

struct OutputFile {
  std::string name;
  std::uintmax_t bytes = 0;
  std::string sha256;
};

struct RunManifest {
  std::string version = kArtifactVersion;
  SimConfig config;
  int workers = 1;
  std::string started_at;  // ISO 8601 UTC
  std::string finished_at;
  double theta_true = 0.0;
  double lambda1_true = 0.0;
  std::optional<ParameterCorrelation> correlation;
  struct Failures {
    double p_miss;
    int checkpoint;
    int n_failed;
  };
  std::vector<Failures> failures;
  std::vector<OutputFile> outputs;

  std::string to_json() const;
};

std::string utc_timestamp();

// Writes summary.csv, repetitions.csv, trace.csv (when config.emit_traces)
// and finally manifest.json into `out_dir`. Each file goes to a temporary
// name first and is renamed into place; on failure every file written by
// this call is removed and IoError is thrown.
RunManifest emit_outputs(const SimulationResult& result, const SimConfig& config,
                         const std::string& out_dir, RunManifest manifest);

}  // namespace itconv
