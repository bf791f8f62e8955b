#include "itconv/datagen.hpp"

#include <cmath>
#include <numeric>

#include "itconv/error.hpp"
#include "itconv/numkit.hpp"

namespace itconv {

void PopulationSpec::validate() const {
  if (n_vars < 2) throw DomainError("population needs at least one predictor and an outcome");
  if (n_cases < 1) throw DomainError("population needs at least one case");
  const double lower = -1.0 / static_cast<double>(n_vars - 1);
  if (!(rho > lower && rho < 1.0))
    throw DomainError("rho must lie in (" + std::to_string(lower) + ", 1) for " +
                      std::to_string(n_vars) + " variables");
}

SquareMatrix PopulationSpec::covariance() const {
  return SquareMatrix::equicorrelation(n_vars, rho);
}

std::vector<std::string> PopulationSpec::column_names() const {
  std::vector<std::string> names;
  for (std::size_t j = 1; j < n_vars; ++j) names.push_back("x" + std::to_string(j));
  names.push_back("y");
  return names;
}

PopulationTruth true_theta(const PopulationSpec& spec) {
  spec.validate();
  const std::size_t q = spec.n_vars - 1;
  const SquareMatrix sigma = spec.covariance();
  SquareMatrix sxx(q);
  std::vector<double> sxy(q);
  for (std::size_t i = 0; i < q; ++i) {
    for (std::size_t j = 0; j < q; ++j) sxx(i, j) = sigma(i, j);
    sxy[i] = sigma(i, q);
  }
  PopulationTruth truth;
  truth.beta = solve_spd(sxx, sxy);
  truth.lambda1 = leading_eigenvalue_or_throw(sigma);
  return truth;
}

DataMatrix simulate_dataset(RngStream& rng, const PopulationSpec& spec) {
  spec.validate();
  const std::vector<double> mean(spec.n_vars, 0.0);
  DataMatrix data = draw_mvn(rng, mean, spec.covariance(), spec.n_cases);
  data.rename(spec.column_names());
  return data;
}

MissingMask ampute_mcar(RngStream& rng, Shape shape, double p_incomplete) {
  if (!(p_incomplete >= 0.0 && p_incomplete < 1.0))
    throw DomainError("p_incomplete must lie in [0, 1)");
  MissingMask mask(shape);
  const auto n_incomplete =
      static_cast<std::size_t>(std::llround(p_incomplete * static_cast<double>(shape.rows)));
  if (n_incomplete == 0) return mask;
  if (shape.cols < 2)
    throw DomainError("ampute_mcar: rows need at least two cells to be partially observed");

  // Partial Fisher-Yates: the first n_incomplete slots are the selected rows.
  std::vector<std::size_t> rows(shape.rows);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  for (std::size_t i = 0; i < n_incomplete; ++i) {
    const std::size_t k = i + static_cast<std::size_t>(rng.below(shape.rows - i));
    std::swap(rows[i], rows[k]);
  }
  for (std::size_t i = 0; i < n_incomplete; ++i) {
    const std::size_t r = rows[i];
    std::size_t n_missing = 0;
    do {
      n_missing = 0;
      for (std::size_t c = 0; c < shape.cols; ++c) {
        const bool miss = (rng.next_u64() >> 63) != 0;
        mask.set(r, c, miss);
        n_missing += miss ? 1 : 0;
      }
    } while (n_missing == 0 || n_missing == shape.cols);
  }
  return mask;
}

}  // namespace itconv
