#pragma once

// Simulation study driver: repetitions x missingness conditions x
// early-stopping checkpoints, with performance measures and aggregation.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "itconv/analysis.hpp"
#include "itconv/diagnostics.hpp"
#include "itconv/engine.hpp"

namespace itconv {

struct SimConfig {
  int n_sim = 1000;
  int n_cases = 200;
  double rho = 0.5;
  std::vector<double> p_miss{0.05, 0.25, 0.50, 0.75, 0.95};
  std::vector<int> checkpoints{1, 2, 3, 5, 7, 10, 15, 20, 30, 50, 100};
  int t_max = 100;
  int m = 5;
  std::uint64_t seed = 20200713;
  std::string out_dir = "itconv-out";
  bool emit_traces = false;

  // Throws DomainError naming the offending field.
  void validate() const;

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

// Four variables: x1, x2, x3 and the outcome y.
inline constexpr std::size_t kSimulationVariables = 4;

struct ParameterDiagnostics {
  Diagnostic ac;
  Diagnostic rhat;
};

struct RepetitionRecord {
  int rep = 0;  // 1-based
  double p_miss = 0.0;
  int checkpoint = 0;
  bool ok = true;
  std::string failure;  // empty when ok
  PooledEstimate pooled;
  RepetitionOutcome outcome;
  std::vector<double> coefficient_qbar;  // pooled slope of every predictor, x1 first
  ParameterDiagnostics theta;   // diagnostics of the theta_hat monitor
  ParameterDiagnostics lambda;  // diagnostics of the lambda1 monitor
};

struct ConditionTrace {
  int rep = 0;
  double p_miss = 0.0;
  ChainTrace trace;
};

struct RepetitionResult {
  std::vector<RepetitionRecord> records;  // p_miss-major, then checkpoint
  std::vector<ConditionTrace> traces;     // only when requested
};

// Regression slope of y on x1 in the configured population.
double simulation_truth(const SimConfig& config);

// One dataset shared by every missingness condition; one long chain run per
// condition, read out at each checkpoint. Streams are keyed by (seed, rep_id)
// and the bit pattern of p_miss, so the result does not depend on which other
// repetitions or conditions run alongside. Per-condition failures become
// failed records instead of exceptions.
RepetitionResult run_repetition(const SimConfig& config, int rep_id, bool keep_traces = false);

struct SummaryStat {
  std::optional<double> mean;
  std::optional<double> sd;  // divisor n - 1; needs two defined values
  int n_defined = 0;
};

struct ConditionSummary {
  double p_miss = 0.0;
  int checkpoint = 0;
  std::optional<double> pct_bias;  // undefined when theta == 0 or every rep failed
  std::optional<double> coverage;
  std::optional<double> mean_ci_width;
  SummaryStat ac_theta, rhat_theta, ac_lambda, rhat_lambda;
  int n_reps = 0;  // repetitions run for this cell
  int n_failed = 0;
};

// Aggregates by mean (and sd) across repetitions for every (p_miss,
// checkpoint) cell, in config order. Records are consumed in rep order.
std::vector<ConditionSummary> summarize(std::span<const RepetitionRecord> records,
                                        const SimConfig& config, double theta_true);

struct SimulationOptions {
  int workers = 1;  // 0 = hardware concurrency
  bool keep_traces = false;
  std::ostream* progress = nullptr;
};

struct SimulationResult {
  double theta_true = 0.0;
  double lambda1_true = 0.0;
  std::vector<RepetitionRecord> records;  // rep-major
  std::vector<ConditionSummary> summaries;
  std::vector<ConditionTrace> traces;
};

SimulationResult run_simulation(const SimConfig& config, const SimulationOptions& options = {});

struct ParameterCorrelation {
  std::optional<double> rho_ac;
  std::optional<double> rho_rhat;
  int n_ac = 0;
  int n_rhat = 0;
};

// Spearman correlation between the theta_hat and lambda1 diagnostics over all
// cells where both are defined. Throws DegenerateInput with fewer than three
// paired cells for either diagnostic.
ParameterCorrelation correlate_parameters(std::span<const RepetitionRecord> records);

}  // namespace itconv
