#include "itconv/engine.hpp"

#include <cmath>
#include <limits>

#include "itconv/analysis.hpp"
#include "itconv/error.hpp"
#include "itconv/numkit.hpp"

namespace itconv {

ImputationState initialize(RngStream& rng, const DataMatrix& data, const MissingMask& mask) {
  if (mask.rows() != data.rows() || mask.cols() != data.cols())
    throw DomainError("initialize: mask shape does not match data");
  ImputationState state{data, mask, 0, 1};
  std::vector<double> observed;
  for (std::size_t c = 0; c < data.cols(); ++c) {
    if (mask.missing_in_column(c) == 0) continue;
    observed.clear();
    for (std::size_t r = 0; r < data.rows(); ++r)
      if (!mask.missing(r, c)) observed.push_back(data(r, c));
    if (observed.size() < 2)
      throw TooFewObserved("initialize: column '" + data.names()[c] + "' has " +
                           std::to_string(observed.size()) + " observed values, need 2");
    for (std::size_t r = 0; r < data.rows(); ++r)
      if (mask.missing(r, c)) state.completed(r, c) = observed[rng.below(observed.size())];
  }
  return state;
}

void impute_variable(RngStream& rng, ImputationState& state, std::size_t j,
                     const EngineOptions& options) {
  DataMatrix& d = state.completed;
  const MissingMask& mask = state.mask;
  const std::size_t p = d.cols();
  if (j >= p) throw DomainError("impute_variable: column out of range");
  const std::size_t n_mis = mask.missing_in_column(j);
  if (n_mis == 0) return;

  const std::size_t q = p;  // intercept + (p - 1) other columns
  const std::size_t n_obs = d.rows() - n_mis;
  if (n_obs <= q)
    throw DegenerateResidual("impute_variable: " + std::to_string(n_obs) +
                             " observed rows for " + std::to_string(q) + " parameters");

  auto design_row = [&](std::size_t r, std::vector<double>& x) {
    x[0] = 1.0;
    std::size_t k = 1;
    for (std::size_t c = 0; c < p; ++c)
      if (c != j) x[k++] = d(r, c);
  };

  SquareMatrix s(q);
  std::vector<double> xty(q, 0.0);
  std::vector<double> x(q);
  for (std::size_t r = 0; r < d.rows(); ++r) {
    if (mask.missing(r, j)) continue;
    design_row(r, x);
    const double y = d(r, j);
    for (std::size_t a = 0; a < q; ++a) {
      xty[a] += x[a] * y;
      for (std::size_t b = 0; b <= a; ++b) s(a, b) += x[a] * x[b];
    }
  }
  for (std::size_t a = 0; a < q; ++a) {
    s(a, a) += options.ridge * s(a, a);
    for (std::size_t b = 0; b < a; ++b) s(b, a) = s(a, b);
  }

  SquareMatrix v;
  SquareMatrix lv;
  try {
    v = inverse_spd(s);
    lv = cholesky(v);
  } catch (const NotPositiveDefinite& e) {
    double max_diag = 0.0, min_diag = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < q; ++a) {
      max_diag = std::max(max_diag, s(a, a));
      min_diag = std::min(min_diag, s(a, a));
    }
    throw SingularSystem("impute_variable: X'X + ridge not positive definite for column '" +
                         d.names()[j] + "' (diag range [" + std::to_string(min_diag) + ", " +
                         std::to_string(max_diag) + "]; " + e.what() + ")");
  }
  const std::vector<double> beta_hat = multiply(v, xty);

  double rss = 0.0;
  for (std::size_t r = 0; r < d.rows(); ++r) {
    if (mask.missing(r, j)) continue;
    design_row(r, x);
    double fit = 0.0;
    for (std::size_t a = 0; a < q; ++a) fit += x[a] * beta_hat[a];
    const double e = d(r, j) - fit;
    rss += e * e;
  }

  const double g = draw_chi_square(rng, static_cast<int>(n_obs - q));
  const double sigma_star = std::sqrt(rss / g);
  std::vector<double> z(q);
  for (double& e : z) e = rng.std_normal();
  std::vector<double> beta_star = beta_hat;
  for (std::size_t a = 0; a < q; ++a) {
    double s_az = 0.0;
    for (std::size_t b = 0; b <= a; ++b) s_az += lv(a, b) * z[b];
    beta_star[a] += sigma_star * s_az;
  }

  for (std::size_t r = 0; r < d.rows(); ++r) {
    if (!mask.missing(r, j)) continue;
    design_row(r, x);
    double fit = 0.0;
    for (std::size_t a = 0; a < q; ++a) fit += x[a] * beta_star[a];
    d(r, j) = fit + sigma_star * rng.std_normal();
  }
}

const char* to_string(Monitor kind) {
  switch (kind) {
    case Monitor::ImputedMean: return "imputed_mean";
    case Monitor::ImputedVariance: return "imputed_variance";
    case Monitor::ThetaHat: return "theta_hat";
    case Monitor::Lambda1: return "lambda1";
  }
  return "unknown";
}

std::vector<MonitorColumn> expand_monitors(const std::vector<Monitor>& kinds, std::size_t n_vars) {
  std::vector<MonitorColumn> cols;
  for (Monitor k : kinds) {
    if (k == Monitor::ImputedMean || k == Monitor::ImputedVariance) {
      for (std::size_t v = 0; v < n_vars; ++v) cols.push_back({k, v});
    } else {
      cols.push_back({k, std::nullopt});
    }
  }
  return cols;
}

std::vector<double> evaluate_monitors(const std::vector<MonitorColumn>& columns,
                                      const DataMatrix& completed, const MissingMask& mask) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> out;
  out.reserve(columns.size());
  for (const auto& col : columns) {
    switch (col.kind) {
      case Monitor::ImputedMean:
      case Monitor::ImputedVariance: {
        const std::size_t c = *col.variable;
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t r = 0; r < completed.rows(); ++r)
          if (mask.missing(r, c)) {
            sum += completed(r, c);
            ++n;
          }
        if (col.kind == Monitor::ImputedMean) {
          out.push_back(n > 0 ? sum / static_cast<double>(n) : nan);
          break;
        }
        if (n < 2) {
          out.push_back(nan);
          break;
        }
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t r = 0; r < completed.rows(); ++r)
          if (mask.missing(r, c)) ss += (completed(r, c) - mean) * (completed(r, c) - mean);
        out.push_back(ss / static_cast<double>(n - 1));
        break;
      }
      case Monitor::ThetaHat:
        try {
          out.push_back(fit_ols(completed).estimate);
        } catch (const SingularDesign&) {
          out.push_back(nan);
        }
        break;
      case Monitor::Lambda1:
        out.push_back(leading_eigenvalue(covariance_matrix(completed)).value);
        break;
    }
  }
  return out;
}

ChainTrace::ChainTrace(std::size_t chains, std::vector<MonitorColumn> columns)
    : columns_(std::move(columns)), rows_(chains) {}

int ChainTrace::iterations() const {
  return rows_.empty() ? 0 : static_cast<int>(rows_.front().size());
}

std::size_t ChainTrace::entry_count() const {
  std::size_t n = 0;
  for (const auto& chain : rows_)
    for (const auto& it : chain) n += it.size();
  return n;
}

void ChainTrace::append(std::size_t chain, std::vector<double> values) {
  if (chain >= rows_.size()) throw DomainError("ChainTrace: chain out of range");
  if (values.size() != columns_.size()) throw DomainError("ChainTrace: column count mismatch");
  rows_[chain].push_back(std::move(values));
}

double ChainTrace::value(std::size_t chain, int iteration, std::size_t column) const {
  return rows_.at(chain).at(static_cast<std::size_t>(iteration - 1)).at(column);
}

std::optional<std::size_t> ChainTrace::find(Monitor kind, std::optional<std::size_t> variable) const {
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (columns_[i].kind == kind && columns_[i].variable == variable) return i;
  return std::nullopt;
}

std::vector<std::vector<double>> ChainTrace::draws(std::size_t column, int t) const {
  if (column >= columns_.size()) throw DomainError("ChainTrace: column out of range");
  std::vector<std::vector<double>> out(rows_.size());
  for (std::size_t c = 0; c < rows_.size(); ++c) {
    if (t > static_cast<int>(rows_[c].size())) throw DomainError("ChainTrace: iteration out of range");
    out[c].reserve(static_cast<std::size_t>(t));
    for (int i = 0; i < t; ++i) out[c].push_back(rows_[c][static_cast<std::size_t>(i)][column]);
  }
  return out;
}

ChainTrace ChainTrace::truncated(int t) const {
  ChainTrace out(rows_.size(), columns_);
  for (std::size_t c = 0; c < rows_.size(); ++c) {
    const auto keep = std::min(rows_[c].size(), static_cast<std::size_t>(std::max(t, 0)));
    out.rows_[c].assign(rows_[c].begin(), rows_[c].begin() + static_cast<std::ptrdiff_t>(keep));
  }
  return out;
}

ChainRun run_chains(std::uint64_t seed, const StreamId& origin, const DataMatrix& data,
                    const MissingMask& mask, const ChainRunOptions& options,
                    const SweepObserver& observer) {
  if (options.m < 2) throw DomainError("run_chains: need at least two chains");
  if (options.t_max < 1) throw DomainError("run_chains: need at least one iteration");

  ChainRun run;
  run.trace = ChainTrace(options.m, expand_monitors(options.monitors, data.cols()));
  run.finals.reserve(options.m);

  for (std::size_t chain = 0; chain < options.m; ++chain) {
    const std::uint64_t chain_key = chain + 1;
    RngStream init_rng(seed, {origin.repetition, origin.condition, chain_key, Purpose::Initialize, 0});
    ImputationState state;
    try {
      state = initialize(init_rng, data, mask);
    } catch (const Error& e) {
      throw ImputationError(e.what(), chain_key, 0, 0);
    }
    state.chain_id = chain_key;

    for (int t = 1; t <= options.t_max; ++t) {
      RngStream sweep_rng(seed, {origin.repetition, origin.condition, chain_key, Purpose::Sweep,
                                 static_cast<std::uint64_t>(t)});
      for (std::size_t j = 0; j < data.cols(); ++j) {
        try {
          impute_variable(sweep_rng, state, j, options.engine);
        } catch (const Error& e) {
          throw ImputationError(e.what(), chain_key, t, j);
        }
      }
      state.iteration = t;
      if (options.engine.verify_observed) {
        for (std::size_t r = 0; r < data.rows(); ++r)
          for (std::size_t c = 0; c < data.cols(); ++c)
            if (!mask.missing(r, c) && state.completed(r, c) != data(r, c))
              throw ImputationError("observed cell changed", chain_key, t, c);
      }
      run.trace.append(chain, evaluate_monitors(run.trace.columns(), state.completed, mask));
      if (observer) observer(chain, t, state.completed);
    }
    run.finals.push_back(std::move(state));
  }
  return run;
}

}  // namespace itconv
