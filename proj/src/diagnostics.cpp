#include "itconv/diagnostics.hpp"

#include <algorithm>

#include "itconv/error.hpp"
#include "itconv/numkit.hpp"

namespace itconv {

const char* to_string(DiagStatus status) {
  switch (status) {
    case DiagStatus::Ok: return "ok";
    case DiagStatus::InsufficientDraws: return "insufficient";
    case DiagStatus::Degenerate: return "degenerate";
  }
  return "unknown";
}

namespace {

std::size_t common_length(std::span<const std::vector<double>> chains) {
  if (chains.empty()) throw DomainError("diagnostics: no chains");
  const std::size_t t = chains.front().size();
  for (const auto& c : chains)
    if (c.size() != t) throw DomainError("diagnostics: chains differ in length");
  return t;
}

bool all_finite(std::span<const std::vector<double>> chains) {
  for (const auto& c : chains)
    for (double v : c)
      if (!std::isfinite(v)) return false;
  return true;
}

double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

}  // namespace

Diagnostic autocorrelation(std::span<const std::vector<double>> chains, int lag) {
  if (lag < 1) throw DomainError("autocorrelation: lag must be positive");
  const std::size_t t = common_length(chains);
  const auto k = static_cast<std::size_t>(lag);
  if (t < k + 2) return Diagnostic::insufficient();
  if (!all_finite(chains)) return Diagnostic::degenerate();

  double total = 0.0;
  for (const auto& chain : chains) {
    const auto [lo, hi] = std::minmax_element(chain.begin(), chain.end());
    if (*lo == *hi) return Diagnostic::degenerate();
    const double mean = mean_of(chain);
    double den = 0.0;
    for (double v : chain) den += (v - mean) * (v - mean);
    double num = 0.0;
    for (std::size_t s = 0; s + k < t; ++s) num += (chain[s] - mean) * (chain[s + k] - mean);
    total += num / den;
  }
  return Diagnostic::ok(total / static_cast<double>(chains.size()));
}

Chains rank_normalize(std::span<const std::vector<double>> chains) {
  const std::size_t t = common_length(chains);
  std::vector<double> pooled;
  pooled.reserve(chains.size() * t);
  for (const auto& c : chains) pooled.insert(pooled.end(), c.begin(), c.end());
  if (pooled.size() < 4) throw DomainError("rank_normalize: need at least 4 draws");

  const auto ranks = mid_ranks(pooled);
  const double s = static_cast<double>(pooled.size());
  Chains out(chains.size(), std::vector<double>(t));
  std::size_t idx = 0;
  for (auto& c : out)
    for (double& v : c) v = normal_quantile((ranks[idx++] - 0.375) / (s + 0.25));
  return out;
}

Diagnostic rhat(std::span<const std::vector<double>> chains, RhatMethod method) {
  if (chains.size() < 2) throw DomainError("rhat: need at least two chains");
  const std::size_t t = common_length(chains);
  if (t < 4) return Diagnostic::insufficient();
  if (!all_finite(chains)) return Diagnostic::degenerate();

  Chains segments;
  if (method == RhatMethod::Classic) {
    segments.assign(chains.begin(), chains.end());
  } else {
    const std::size_t first = t % 2;  // drop the first draw when t is odd
    const std::size_t half = (t - first) / 2;
    for (const auto& c : chains) {
      segments.emplace_back(c.begin() + static_cast<std::ptrdiff_t>(first),
                            c.begin() + static_cast<std::ptrdiff_t>(first + half));
      segments.emplace_back(c.begin() + static_cast<std::ptrdiff_t>(first + half), c.end());
    }
    if (method == RhatMethod::RankNormalizedSplit) segments = rank_normalize(segments);
  }

  const auto n_seg = static_cast<double>(segments.size());
  const auto n = static_cast<double>(segments.front().size());
  std::vector<double> means;
  double w = 0.0;
  for (const auto& seg : segments) {
    const double mu = mean_of(seg);
    means.push_back(mu);
    double ss = 0.0;
    for (double v : seg) ss += (v - mu) * (v - mu);
    w += ss / (n - 1.0);
  }
  w /= n_seg;
  if (!(w > 0.0)) return Diagnostic::degenerate();
  const double grand = mean_of(means);
  double between = 0.0;
  for (double mu : means) between += (mu - grand) * (mu - grand);
  between *= n / (n_seg - 1.0);
  const double var_plus = (n - 1.0) / n * w + between / n;
  return Diagnostic::ok(std::sqrt(var_plus / w));
}

std::vector<DiagnosticResult> diagnose(const ChainTrace& trace, std::size_t column,
                                       std::span<const int> checkpoints,
                                       const DiagnosticOptions& options) {
  std::vector<DiagnosticResult> out;
  out.reserve(checkpoints.size());
  const int available = trace.iterations();
  for (int t : checkpoints) {
    if (t < 1 || t > available)
      throw DomainError("diagnose: checkpoint " + std::to_string(t) + " outside 1.." +
                        std::to_string(available));
    const Chains draws = trace.draws(column, t);
    DiagnosticResult res;
    res.statistic = trace.columns().at(column);
    res.checkpoint = t;
    res.ac = autocorrelation(draws, options.lag);
    res.rhat = rhat(draws, options.method);
    out.push_back(res);
  }
  return out;
}

std::vector<DiagnosticResult> diagnose(const ChainTrace& trace, Monitor kind,
                                       std::span<const int> checkpoints,
                                       const DiagnosticOptions& options) {
  const auto column = trace.find(kind);
  if (!column) throw DomainError(std::string("diagnose: trace has no scalar monitor ") + to_string(kind));
  return diagnose(trace, *column, checkpoints, options);
}

}  // namespace itconv
