#include "itconv/analysis.hpp"

#include <cmath>
#include <limits>

#include "itconv/error.hpp"
#include "itconv/numkit.hpp"

namespace itconv {

CompletedAnalysis fit_ols(const DataMatrix& completed, std::size_t estimand) {
  const std::size_t n = completed.rows();
  const std::size_t p = completed.cols();
  if (p < 1) throw SingularDesign("fit_ols: no columns");
  const std::size_t outcome = p - 1;
  const std::size_t k = p;  // intercept + (p - 1) predictors
  if (estimand + 1 >= p) throw DomainError("fit_ols: estimand is not a predictor column");
  if (n <= k) throw SingularDesign("fit_ols: need more rows than parameters");

  SquareMatrix xtx(k);
  std::vector<double> xty(k, 0.0);
  std::vector<double> x(k);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = completed.row(r);
    x[0] = 1.0;
    for (std::size_t c = 0; c < outcome; ++c) x[c + 1] = row[c];
    const double y = row[outcome];
    for (std::size_t i = 0; i < k; ++i) {
      xty[i] += x[i] * y;
      for (std::size_t j = 0; j <= i; ++j) xtx(i, j) += x[i] * x[j];
    }
  }
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < i; ++j) xtx(j, i) = xtx(i, j);

  SquareMatrix inv;
  try {
    inv = inverse_spd(xtx);
  } catch (const NotPositiveDefinite& e) {
    throw SingularDesign(std::string("fit_ols: singular design: ") + e.what());
  }

  CompletedAnalysis out;
  out.n_obs = n;
  out.n_params = k;
  out.coefficients = multiply(inv, xty);

  double rss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = completed.row(r);
    double fit = out.coefficients[0];
    for (std::size_t c = 0; c < outcome; ++c) fit += out.coefficients[c + 1] * row[c];
    const double e = row[outcome] - fit;
    rss += e * e;
  }
  const double s2 = rss / static_cast<double>(n - k);
  out.variances.resize(k);
  for (std::size_t i = 0; i < k; ++i) out.variances[i] = s2 * inv(i, i);
  out.estimate = out.coefficients[estimand + 1];
  out.variance = out.variances[estimand + 1];
  return out;
}

double PooledEstimate::se() const { return std::sqrt(t_var); }

PooledEstimate pool_estimates(std::span<const double> q, std::span<const double> u,
                              double nu_com, double level) {
  const std::size_t m = q.size();
  if (m < 2) throw DomainError("pool: need at least two analyses");
  if (u.size() != m) throw DomainError("pool: estimate/variance count mismatch");
  if (!(nu_com > 0.0)) throw DomainError("pool: complete-data df must be positive");
  if (!(level > 0.0 && level < 1.0)) throw DomainError("pool: level must lie in (0, 1)");

  const double md = static_cast<double>(m);
  PooledEstimate p;
  p.m = m;
  // Deviations from the first estimate keep identical inputs exact.
  double dbar = 0.0, du = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    dbar += q[i] - q[0];
    du += u[i] - u[0];
  }
  dbar /= md;
  p.qbar = q[0] + dbar;
  p.ubar = u[0] + du / md;
  for (std::size_t i = 0; i < m; ++i) {
    const double d = q[i] - q[0] - dbar;
    p.b += d * d;
  }
  p.b /= md - 1.0;

  const double inflated_b = (1.0 + 1.0 / md) * p.b;
  p.t_var = p.ubar + inflated_b;
  p.r = p.ubar > 0.0 ? inflated_b / p.ubar : std::numeric_limits<double>::infinity();
  p.lambda = p.t_var > 0.0 ? inflated_b / p.t_var : 0.0;
  p.df_obs = (nu_com + 1.0) / (nu_com + 3.0) * nu_com * (1.0 - p.lambda);
  if (p.b == 0.0) {
    p.degenerate_between = true;
    p.r = 0.0;
    p.df_old = std::numeric_limits<double>::infinity();
    p.df = p.df_obs;
  } else {
    p.df_old = (md - 1.0) / (p.lambda * p.lambda);
    p.df = p.df_obs > 0.0 ? p.df_old * p.df_obs / (p.df_old + p.df_obs) : p.df_old;
  }
  const double half = t_quantile(0.5 + 0.5 * level, p.df) * std::sqrt(p.t_var);
  p.ci_low = p.qbar - half;
  p.ci_high = p.qbar + half;
  return p;
}

PooledEstimate pool_rubin(std::span<const CompletedAnalysis> analyses, double level) {
  if (analyses.size() < 2) throw DomainError("pool_rubin: need at least two analyses");
  std::vector<double> q, u;
  for (const auto& a : analyses) {
    if (a.n_obs != analyses[0].n_obs || a.n_params != analyses[0].n_params)
      throw DomainError("pool_rubin: analyses differ in shape");
    q.push_back(a.estimate);
    u.push_back(a.variance);
  }
  return pool_estimates(q, u, analyses[0].residual_df(), level);
}

RepetitionOutcome evaluate_repetition(const PooledEstimate& pooled, double theta_true) {
  RepetitionOutcome out;
  out.error = pooled.qbar - theta_true;
  out.covered = pooled.ci_low <= theta_true && theta_true <= pooled.ci_high;
  out.ci_width = pooled.ci_high - pooled.ci_low;
  return out;
}

}  // namespace itconv
