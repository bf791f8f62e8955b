#pragma once

// Non-convergence identifiers over multi-chain traces: lag-k autocorrelation
// and (rank-normalized, split) potential scale reduction factor.

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "itconv/engine.hpp"

namespace itconv {

enum class DiagStatus : std::uint8_t {
  Ok,
  InsufficientDraws,
  Degenerate,  // zero within-chain variation or non-finite draws
};

const char* to_string(DiagStatus status);

struct Diagnostic {
  DiagStatus status = DiagStatus::InsufficientDraws;
  double value = std::numeric_limits<double>::quiet_NaN();

  bool defined() const noexcept { return status == DiagStatus::Ok; }
  std::optional<double> get() const {
    return defined() ? std::optional<double>(value) : std::nullopt;
  }

  static Diagnostic ok(double v) { return {DiagStatus::Ok, v}; }
  static Diagnostic insufficient() { return {DiagStatus::InsufficientDraws}; }
  static Diagnostic degenerate() { return {DiagStatus::Degenerate}; }

  friend bool operator==(const Diagnostic& a, const Diagnostic& b) {
    return a.status == b.status && (a.status != DiagStatus::Ok || a.value == b.value);
  }
};

using Chains = std::vector<std::vector<double>>;

// Mean over chains of
//   sum_{s<=t-k} (x_s - xbar)(x_{s+k} - xbar) / sum_s (x_s - xbar)^2.
// Insufficient when t < lag + 2; degenerate when any chain is constant.
Diagnostic autocorrelation(std::span<const std::vector<double>> chains, int lag = 1);

// Replaces every value by Phi^-1((r - 3/8) / (S + 1/4)), r its mid-rank among
// all S pooled values. Shape is preserved.
Chains rank_normalize(std::span<const std::vector<double>> chains);

enum class RhatMethod : std::uint8_t {
  RankNormalizedSplit,  // default
  Split,                // split chains, raw draws
  Classic,              // whole chains, raw draws
};

// Split methods drop the first draw when t is odd. Insufficient when t < 4,
// degenerate when the within-chain variance is zero. Throws DomainError for
// fewer than two chains or ragged input.
Diagnostic rhat(std::span<const std::vector<double>> chains,
                RhatMethod method = RhatMethod::RankNormalizedSplit);

struct DiagnosticOptions {
  int lag = 1;
  RhatMethod method = RhatMethod::RankNormalizedSplit;
  // Reporting thresholds only; they never change a computed value.
  double rhat_threshold = 1.01;
  double ac_threshold = 0.1;
};

struct DiagnosticResult {
  MonitorColumn statistic{Monitor::ThetaHat, std::nullopt};
  int checkpoint = 0;
  Diagnostic ac;
  Diagnostic rhat;

  // True when a defined value exceeds its threshold.
  bool ac_flagged(const DiagnosticOptions& o) const { return ac.defined() && ac.value > o.ac_threshold; }
  bool rhat_flagged(const DiagnosticOptions& o) const {
    return rhat.defined() && rhat.value > o.rhat_threshold;
  }
};

// Each checkpoint t sees iterations 1..t only. Throws DomainError when a
// checkpoint lies outside 1..iterations.
std::vector<DiagnosticResult> diagnose(const ChainTrace& trace, std::size_t column,
                                       std::span<const int> checkpoints,
                                       const DiagnosticOptions& options = {});

std::vector<DiagnosticResult> diagnose(const ChainTrace& trace, Monitor kind,
                                       std::span<const int> checkpoints,
                                       const DiagnosticOptions& options = {});

}  // namespace itconv
