#pragma once

// Chained-equations imputation with Bayesian normal linear draws, run as m
// independent chains with per-sweep monitored statistics.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "itconv/matrix.hpp"
#include "itconv/rng.hpp"

namespace itconv {

struct ImputationState {
  DataMatrix completed;
  MissingMask mask;
  int iteration = 0;
  std::size_t chain_id = 1;  // 1-based
};

struct EngineOptions {
  // Added to the diagonal of X'X as ridge * diag(X'X).
  double ridge = 1e-5;
  // Re-check observed cells against the source data after every sweep.
  bool verify_observed = false;
};

// Fills every masked cell with a uniform draw (with replacement) from the
// observed cells of its column. Throws TooFewObserved when a column with
// missing cells has fewer than two observed values.
ImputationState initialize(RngStream& rng, const DataMatrix& data, const MissingMask& mask);

// One Bayesian normal linear draw for column j given every other column plus
// an intercept. Only masked cells of column j change; a column without
// masked cells is left untouched.
void impute_variable(RngStream& rng, ImputationState& state, std::size_t j,
                     const EngineOptions& options = {});

enum class Monitor : std::uint8_t {
  ImputedMean,      // per variable, over masked cells
  ImputedVariance,  // per variable, over masked cells (n - 1 divisor)
  ThetaHat,         // x1 coefficient of the completed-data regression
  Lambda1,          // leading eigenvalue of the completed-data covariance
};

const char* to_string(Monitor kind);

struct MonitorColumn {
  Monitor kind;
  std::optional<std::size_t> variable;  // set for per-variable kinds

  friend bool operator==(const MonitorColumn&, const MonitorColumn&) = default;
};

// Expands monitor kinds into trace columns for a dataset with `n_vars` columns.
std::vector<MonitorColumn> expand_monitors(const std::vector<Monitor>& kinds, std::size_t n_vars);

inline std::vector<Monitor> all_monitors() {
  return {Monitor::ImputedMean, Monitor::ImputedVariance, Monitor::ThetaHat, Monitor::Lambda1};
}

// Values of the monitored columns for one completed dataset. Undefined values
// (e.g. imputed-cell variance with fewer than two masked cells) are NaN.
std::vector<double> evaluate_monitors(const std::vector<MonitorColumn>& columns,
                                      const DataMatrix& completed, const MissingMask& mask);

// Per chain, per iteration (1-based), per monitor column.
class ChainTrace {
 public:
  ChainTrace() = default;
  ChainTrace(std::size_t chains, std::vector<MonitorColumn> columns);

  std::size_t chains() const noexcept { return rows_.size(); }
  const std::vector<MonitorColumn>& columns() const noexcept { return columns_; }
  // Iterations recorded; identical for every chain once a run completes.
  int iterations() const;
  std::size_t entry_count() const;

  void append(std::size_t chain, std::vector<double> values);

  double value(std::size_t chain, int iteration, std::size_t column) const;
  std::optional<std::size_t> find(Monitor kind, std::optional<std::size_t> variable = {}) const;

  // One row per chain, iterations 1..t.
  std::vector<std::vector<double>> draws(std::size_t column, int t) const;

  // Copy restricted to iterations 1..t.
  ChainTrace truncated(int t) const;

  friend bool operator==(const ChainTrace&, const ChainTrace&) = default;

 private:
  std::vector<MonitorColumn> columns_;
  std::vector<std::vector<std::vector<double>>> rows_;  // [chain][iteration - 1][column]
};

struct ChainRunOptions {
  std::size_t m = 5;
  int t_max = 10;
  std::vector<Monitor> monitors = all_monitors();
  EngineOptions engine;
};

// Called after each full sweep with the chain index (0-based) and iteration.
using SweepObserver =
    std::function<void(std::size_t chain, int iteration, const DataMatrix& completed)>;

struct ChainRun {
  std::vector<ImputationState> finals;
  ChainTrace trace;
};

// Runs m chains for t_max sweeps each. Every chain draws its initialization
// from stream (origin.repetition, origin.condition, chain, Initialize, 0) and
// sweep t from (..., chain, Sweep, t), so a shorter run is an exact prefix of
// a longer one. Throws ImputationError annotated with chain/iteration/variable.
ChainRun run_chains(std::uint64_t seed, const StreamId& origin, const DataMatrix& data,
                    const MissingMask& mask, const ChainRunOptions& options,
                    const SweepObserver& observer = {});

}  // namespace itconv
