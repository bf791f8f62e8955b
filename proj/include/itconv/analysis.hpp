#pragma once

// Complete-data regression and Rubin's rules.

#include <cstddef>
#include <span>
#include <vector>

#include "itconv/matrix.hpp"

namespace itconv {

struct CompletedAnalysis {
  double estimate = 0.0;  // coefficient of the estimand predictor
  double variance = 0.0;  // its sampling variance s^2 [(X'X)^-1]_kk
  std::size_t n_obs = 0;
  std::size_t n_params = 0;  // intercept included
  std::vector<double> coefficients;  // intercept first, then predictors in column order
  std::vector<double> variances;     // diagonal of s^2 (X'X)^-1

  double residual_df() const { return static_cast<double>(n_obs) - static_cast<double>(n_params); }
};

// OLS of the last column on an intercept plus every other column. The
// estimand is the predictor at `estimand` (0 = first column). Throws
// SingularDesign when X'X is not positive definite or n <= n_params.
CompletedAnalysis fit_ols(const DataMatrix& completed, std::size_t estimand = 0);

struct PooledEstimate {
  std::size_t m = 0;
  double qbar = 0.0;
  double ubar = 0.0;
  double b = 0.0;
  double t_var = 0.0;
  double r = 0.0;       // relative increase in variance due to nonresponse
  double lambda = 0.0;  // proportion of variance attributable to missingness
  double df_old = 0.0;  // large-sample df; +inf when b == 0
  double df_obs = 0.0;
  double df = 0.0;      // Barnard-Rubin adjusted
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool degenerate_between = false;  // b == 0, df falls back to df_obs

  double se() const;
};

// Pools scalar estimates q with sampling variances u. nu_com is the
// complete-data residual degrees of freedom.
PooledEstimate pool_estimates(std::span<const double> q, std::span<const double> u,
                              double nu_com, double level = 0.95);

// Throws DomainError for m < 2 or analyses of differing shape.
PooledEstimate pool_rubin(std::span<const CompletedAnalysis> analyses, double level = 0.95);

struct RepetitionOutcome {
  double error = 0.0;  // qbar - theta
  bool covered = false;
  double ci_width = 0.0;
};

RepetitionOutcome evaluate_repetition(const PooledEstimate& pooled, double theta_true);

}  // namespace itconv
