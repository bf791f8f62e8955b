#include "itconv/matrix.hpp"

#include <cmath>

#include "itconv/error.hpp"

namespace itconv {

SquareMatrix SquareMatrix::identity(std::size_t dim) {
  SquareMatrix m(dim);
  for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
  return m;
}

SquareMatrix SquareMatrix::diagonal(std::span<const double> values) {
  SquareMatrix m(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
  return m;
}

SquareMatrix SquareMatrix::equicorrelation(std::size_t dim, double rho) {
  SquareMatrix m(dim, rho);
  for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
  return m;
}

bool SquareMatrix::is_symmetric() const noexcept {
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = i + 1; j < dim_; ++j)
      if ((*this)(i, j) != (*this)(j, i)) return false;
  return true;
}

SquareMatrix multiply(const SquareMatrix& a, const SquareMatrix& b) {
  if (a.dim() != b.dim()) throw DomainError("multiply: dimension mismatch");
  const std::size_t n = a.dim();
  SquareMatrix c(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < n; ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

SquareMatrix transpose(const SquareMatrix& a) {
  SquareMatrix t(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < a.dim(); ++j) t(j, i) = a(i, j);
  return t;
}

std::vector<double> multiply(const SquareMatrix& a, std::span<const double> x) {
  if (a.dim() != x.size()) throw DomainError("multiply: dimension mismatch");
  std::vector<double> y(a.dim(), 0.0);
  for (std::size_t i = 0; i < a.dim(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.dim(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

double frobenius_norm(const SquareMatrix& a) {
  double s = 0.0;
  for (double v : a.entries()) s += v * v;
  return std::sqrt(s);
}

DataMatrix::DataMatrix(std::size_t rows, std::vector<std::string> names, double fill)
    : rows_(rows), names_(std::move(names)), cells_(rows * names_.size(), fill) {}

void DataMatrix::rename(std::vector<std::string> names) {
  if (names.size() != names_.size()) throw DomainError("rename: column count mismatch");
  names_ = std::move(names);
}

std::vector<double> DataMatrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

std::size_t MissingMask::missing_in_row(std::size_t r) const {
  std::size_t n = 0;
  for (std::size_t c = 0; c < cols_; ++c) n += flags_[r * cols_ + c];
  return n;
}

std::size_t MissingMask::missing_in_column(std::size_t c) const {
  std::size_t n = 0;
  for (std::size_t r = 0; r < rows_; ++r) n += flags_[r * cols_ + c];
  return n;
}

std::size_t MissingMask::incomplete_rows() const {
  std::size_t n = 0;
  for (std::size_t r = 0; r < rows_; ++r) n += missing_in_row(r) > 0 ? 1 : 0;
  return n;
}

std::size_t MissingMask::total_missing() const {
  std::size_t n = 0;
  for (auto f : flags_) n += f;
  return n;
}

}  // namespace itconv
