#pragma once

// Complete-data generation with an analytic regression truth, and MCAR
// amputation at an exact proportion of incomplete cases.

#include <cstddef>
#include <vector>

#include "itconv/matrix.hpp"
#include "itconv/rng.hpp"

namespace itconv {

// Equicorrelated multivariate normal population: predictors x1..x{p-1} and
// outcome y in the last column, zero means, unit variances.
struct PopulationSpec {
  std::size_t n_vars = 4;
  double rho = 0.5;
  std::size_t n_cases = 200;

  // Throws DomainError when the implied covariance is not positive definite.
  void validate() const;
  SquareMatrix covariance() const;
  std::vector<std::string> column_names() const;
};

struct PopulationTruth {
  std::vector<double> beta;  // slopes of y on x1..x{p-1}; no intercept (zero means)
  double lambda1 = 0.0;      // leading eigenvalue of the population covariance
};

PopulationTruth true_theta(const PopulationSpec& spec);

DataMatrix simulate_dataset(RngStream& rng, const PopulationSpec& spec);

// Selects exactly round(p_incomplete * rows) rows without replacement; in each
// selected row every cell is missing with probability 1/2, redrawn until the
// row has at least one missing and at least one observed cell. Only the shape
// is consulted, never the values. Throws DomainError for p outside [0, 1) or
// for fewer than two columns when p > 0.
MissingMask ampute_mcar(RngStream& rng, Shape shape, double p_incomplete);
inline MissingMask ampute_mcar(RngStream& rng, const DataMatrix& data, double p_incomplete) {
  return ampute_mcar(rng, shape_of(data), p_incomplete);
}

}  // namespace itconv
