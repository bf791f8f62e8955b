#include "itconv/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "itconv/error.hpp"

namespace itconv {

SquareMatrix cholesky(const SquareMatrix& a) {
  const std::size_t n = a.dim();
  if (n == 0) throw DomainError("cholesky: empty matrix");
  SquareMatrix l(n);
  for (std::size_t j = 0; j < n; ++j) {
    double pivot = a(j, j);
    for (std::size_t k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
    if (!(pivot > 0.0)) throw NotPositiveDefinite(j, pivot);
    const double diag = std::sqrt(pivot);
    l(j, j) = diag;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / diag;
    }
  }
  return l;
}

std::vector<double> cholesky_solve(const SquareMatrix& lower, std::span<const double> b) {
  const std::size_t n = lower.dim();
  if (b.size() != n) throw DomainError("cholesky_solve: dimension mismatch");
  std::vector<double> x(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    double s = x[i];
    for (std::size_t k = 0; k < i; ++k) s -= lower(i, k) * x[k];
    x[i] = s / lower(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= lower(k, ii) * x[k];
    x[ii] = s / lower(ii, ii);
  }
  return x;
}

std::vector<double> solve_spd(const SquareMatrix& a, std::span<const double> b) {
  if (b.size() != a.dim()) throw DomainError("solve_spd: dimension mismatch");
  return cholesky_solve(cholesky(a), b);
}

SquareMatrix inverse_spd(const SquareMatrix& a) {
  const SquareMatrix l = cholesky(a);
  const std::size_t n = a.dim();
  SquareMatrix inv(n);
  std::vector<double> unit(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    unit[j] = 1.0;
    const auto col = cholesky_solve(l, unit);
    unit[j] = 0.0;
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
  }
  // Symmetrize exactly.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = 0.5 * (inv(i, j) + inv(j, i));
      inv(i, j) = v;
      inv(j, i) = v;
    }
  return inv;
}

namespace {

struct PowerRun {
  EigenEstimate estimate;
  bool stalled = false;
};

PowerRun power_run(const SquareMatrix& a, std::vector<double> v,
                   const PowerIterationOptions& options) {
  const std::size_t n = a.dim();
  auto normalize = [](std::vector<double>& x) {
    double s = 0.0;
    for (double e : x) s += e * e;
    const double norm = std::sqrt(s);
    if (norm > 0.0)
      for (double& e : x) e /= norm;
    return norm;
  };
  normalize(v);

  PowerRun run;
  double previous = std::numeric_limits<double>::quiet_NaN();
  double previous_delta = std::numeric_limits<double>::infinity();
  std::vector<double> w(n);
  for (int k = 1; k <= options.max_iter; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += a(i, j) * v[j];
      w[i] = s;
    }
    double rayleigh = 0.0;
    for (std::size_t i = 0; i < n; ++i) rayleigh += v[i] * w[i];
    run.estimate.value = rayleigh;
    run.estimate.iterations = k;

    const double norm = normalize(w);
    if (norm == 0.0) {
      // v lies in the null space.
      run.estimate.converged = true;
      run.stalled = true;
      return run;
    }
    // Residual of the current pair; zero means v is already an eigenvector.
    double residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = w[i] * norm - rayleigh * v[i];
      residual += r * r;
    }
    if (std::sqrt(residual) <= 1e-14 * std::max(std::abs(rayleigh), 1e-300)) {
      run.estimate.converged = true;
      run.stalled = k == 1;
      return run;
    }
    v.swap(w);

    if (k > 1) {
      const double delta = std::abs(rayleigh - previous);
      const double scale = options.tol * std::abs(rayleigh);
      if (delta <= scale) {
        // Geometric tail estimate of the remaining error.
        const double ratio = delta / previous_delta;
        const bool tail_ok = !(ratio < 1.0) || delta * ratio / (1.0 - ratio) <= scale;
        if (tail_ok) {
          run.estimate.converged = true;
          return run;
        }
      }
      previous_delta = delta;
    }
    previous = rayleigh;
  }
  return run;
}

}  // namespace

EigenEstimate leading_eigenvalue(const SquareMatrix& a, const PowerIterationOptions& options) {
  const std::size_t n = a.dim();
  if (n == 0) throw DomainError("leading_eigenvalue: empty matrix");
  if (!(options.tol > 0.0)) throw DomainError("leading_eigenvalue: tol must be positive");

  PowerRun first = power_run(a, std::vector<double>(n, 1.0), options);
  if (!first.stalled || n == 1) return first.estimate;

  std::vector<double> perturbed(n);
  for (std::size_t i = 0; i < n; ++i)
    perturbed[i] = 1.0 + 0.5 * std::sin(1.0 + static_cast<double>(i) * 2.399963229728653);
  PowerRun second = power_run(a, std::move(perturbed), options);
  if (second.estimate.value > first.estimate.value) {
    second.estimate.iterations += first.estimate.iterations;
    return second.estimate;
  }
  first.estimate.converged = first.estimate.converged && second.estimate.converged;
  first.estimate.iterations += second.estimate.iterations;
  return first.estimate;
}

double leading_eigenvalue_or_throw(const SquareMatrix& a, const PowerIterationOptions& options) {
  const EigenEstimate e = leading_eigenvalue(a, options);
  if (!e.converged)
    throw Error("leading_eigenvalue: no convergence after " + std::to_string(e.iterations) +
                " iterations (last estimate " + std::to_string(e.value) + ")");
  return e.value;
}

SquareMatrix covariance_matrix(const DataMatrix& data) {
  const std::size_t n = data.rows();
  const std::size_t p = data.cols();
  if (n < 2) throw TooFewRows("covariance_matrix: need at least 2 rows");
  std::vector<double> mean(p, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < p; ++c) mean[c] += data(r, c);
  for (double& m : mean) m /= static_cast<double>(n);

  SquareMatrix cov(p);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = data.row(r);
    for (std::size_t i = 0; i < p; ++i) {
      const double di = row[i] - mean[i];
      for (std::size_t j = 0; j <= i; ++j) cov(i, j) += di * (row[j] - mean[j]);
    }
  }
  const double divisor = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      cov(i, j) /= divisor;
      cov(j, i) = cov(i, j);
    }
  return cov;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0, 1)");
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        ((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
             6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
           1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
         1.3314166789178437745e+2) * r + 3.3871328727963666080e+0;
    const double den =
        ((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
             3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
           5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
         4.2313330701600911252e+1) * r + 1.0;
    return q * num / den;
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        ((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
             2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
           3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
         4.63033784615654529590e+0) * r + 1.42343711074968357734e+0;
    const double den =
        ((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
             1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
           6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
         2.05319162663775882187e+0) * r + 1.0;
    value = num / den;
  } else {
    r -= 5.0;
    const double num =
        ((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
             1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
           2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
         5.46378491116411436990e+0) * r + 6.65790464350110377720e+0;
    const double den =
        ((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
             1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
           1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
         5.99832206555887937690e-1) * r + 1.0;
    value = num / den;
  }
  return q < 0.0 ? -value : value;
}

namespace {

// Continued fraction for I_x(a, b) (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  const int max_iter = 200 + static_cast<int>(10.0 * std::sqrt(std::max(a, b)));
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iter; ++m) {
    const double md = m;
    const double m2 = 2.0 * md;
    double aa = md * (b - md) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + md) * (qab + md) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) return h;
  }
  throw Error("incomplete_beta: continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x, double y) {
  if (!(a > 0.0 && b > 0.0)) throw DomainError("incomplete_beta: a, b must be positive");
  if (x < 0.0 || x > 1.0) throw DomainError("incomplete_beta: x must lie in [0, 1]");
  if (x == 0.0) return 0.0;
  if (y == 0.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log(y);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, y) / b;
}

double incomplete_beta(double a, double b, double x) { return incomplete_beta(a, b, x, 1.0 - x); }

double t_cdf(double t, double df) {
  if (!(df > 0.0)) throw DomainError("t_cdf: df must be positive");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double t2 = t * t;
  const double x = df / (df + t2);
  const double y = t2 / (df + t2);
  const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, x, y);
  return t > 0.0 ? 1.0 - tail : tail;
}

double t_quantile(double p, double df) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("t_quantile: p must lie in (0, 1)");
  if (!(df > 0.0)) throw DomainError("t_quantile: df must be positive");
  if (p == 0.5) return 0.0;
  // Solve in the upper tail and reflect.
  const double target = p > 0.5 ? p : 1.0 - p;
  double lo = 0.0;
  double hi = 1.0;
  while (t_cdf(hi, df) < target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) break;
  }
  for (int i = 0; i < 400; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    const double f = t_cdf(mid, df);
    if (std::abs(f - target) < 1e-15) {
      lo = hi = mid;
      break;
    }
    if (f < target)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-13 * hi) break;
  }
  const double root = 0.5 * (lo + hi);
  return p > 0.5 ? root : -root;
}

double draw_std_normal(RngStream& rng) { return rng.std_normal(); }

double draw_chi_square(RngStream& rng, int df) {
  if (df < 1) throw DomainError("draw_chi_square: df must be a positive integer");
  double s = 0.0;
  for (int i = 0; i < df; ++i) {
    const double z = rng.std_normal();
    s += z * z;
  }
  return s;
}

DataMatrix draw_mvn(RngStream& rng, std::span<const double> mean, const SquareMatrix& cov,
                    std::size_t n) {
  const std::size_t p = cov.dim();
  if (mean.size() != p) throw DomainError("draw_mvn: mean/cov dimension mismatch");
  const SquareMatrix l = cholesky(cov);
  std::vector<std::string> names;
  for (std::size_t j = 0; j < p; ++j) names.push_back("v" + std::to_string(j + 1));
  DataMatrix out(n, std::move(names));
  std::vector<double> z(p);
  for (std::size_t r = 0; r < n; ++r) {
    for (double& e : z) e = rng.std_normal();
    for (std::size_t i = 0; i < p; ++i) {
      double s = mean[i];
      for (std::size_t k = 0; k <= i; ++k) s += l(i, k) * z[k];
      out(r, i) = s;
    }
  }
  return out;
}

std::vector<double> mid_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 (0-based) share ranks i+1..j.
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("correlation: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw DomainError("correlation: need at least 2 values");
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

std::optional<double> spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("spearman_rho: length mismatch");
  if (x.size() < 2) throw DomainError("spearman_rho: need at least 2 values");
  const auto rx = mid_ranks(x);
  const auto ry = mid_ranks(y);
  const double r = pearson_correlation(rx, ry);
  if (std::isnan(r)) return std::nullopt;
  return r;
}

}  // namespace itconv
