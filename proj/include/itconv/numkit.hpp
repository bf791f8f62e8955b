#pragma once

// Numeric kernels: SPD factorization and solves, power iteration, sample
// covariance, normal / Student-t distribution functions, random variates and
// rank correlation. Everything here is pure and reentrant.

#include <optional>
#include <span>
#include <vector>

#include "itconv/matrix.hpp"
#include "itconv/rng.hpp"

namespace itconv {

// Lower-triangular L with L * L^T == a. Reads only the lower triangle of a.
// Throws NotPositiveDefinite on the first pivot <= 0.
SquareMatrix cholesky(const SquareMatrix& a);

// Solves L * L^T x = b given the Cholesky factor.
std::vector<double> cholesky_solve(const SquareMatrix& lower, std::span<const double> b);

std::vector<double> solve_spd(const SquareMatrix& a, std::span<const double> b);

// Inverse of an SPD matrix through its Cholesky factor.
SquareMatrix inverse_spd(const SquareMatrix& a);

struct PowerIterationOptions {
  double tol = 1e-9;
  int max_iter = 10'000;
};

struct EigenEstimate {
  double value = 0.0;  // last Rayleigh quotient
  int iterations = 0;
  bool converged = false;
};

// Largest eigenvalue of a symmetric positive-semidefinite matrix.
//
// Power iteration with normalized iterates from the all-ones vector. When the
// start vector is already an eigenvector (the iteration stalls on its first
// step) a second run from a fixed perturbed vector guards against that
// eigenvector not being the dominant one; the larger estimate is returned.
// A non-converged result is flagged rather than thrown so batch monitors keep
// running; use leading_eigenvalue_or_throw for the strict form.
EigenEstimate leading_eigenvalue(const SquareMatrix& a,
                                 const PowerIterationOptions& options = {});
double leading_eigenvalue_or_throw(const SquareMatrix& a,
                                   const PowerIterationOptions& options = {});

// Unbiased (n - 1) sample covariance; exactly symmetric. Throws TooFewRows.
SquareMatrix covariance_matrix(const DataMatrix& data);

double normal_cdf(double x);
// Wichura's AS241 (PPND16); |error| ~ 1e-16 over (0, 1). Throws DomainError.
double normal_quantile(double p);

// Regularized incomplete beta I_x(a, b); y must equal 1 - x and is passed
// separately so callers can keep precision when x is close to 1.
double incomplete_beta(double a, double b, double x, double y);
double incomplete_beta(double a, double b, double x);

double t_cdf(double t, double df);
// Bracketing then bisection on t_cdf. Throws DomainError.
double t_quantile(double p, double df);

double draw_std_normal(RngStream& rng);
// Sum of df squared standard normals.
double draw_chi_square(RngStream& rng, int df);
// n rows of mean + L z with L = cholesky(cov). Columns are named v1..vp.
DataMatrix draw_mvn(RngStream& rng, std::span<const double> mean, const SquareMatrix& cov,
                    std::size_t n);

// Average ranks (1-based) with ties receiving their mid-rank.
std::vector<double> mid_ranks(std::span<const double> values);

double pearson_correlation(std::span<const double> x, std::span<const double> y);

// Pearson correlation of mid-ranks. nullopt when either input is constant.
// Throws DomainError on length mismatch or fewer than two values.
std::optional<double> spearman_rho(std::span<const double> x, std::span<const double> y);

}  // namespace itconv
