#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace itconv {

// Dense square matrix, row-major.
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t dim, double fill = 0.0)
      : dim_(dim), entries_(dim * dim, fill) {}

  static SquareMatrix identity(std::size_t dim);
  static SquareMatrix diagonal(std::span<const double> values);
  // Unit diagonal, rho everywhere else.
  static SquareMatrix equicorrelation(std::size_t dim, double rho);

  std::size_t dim() const noexcept { return dim_; }

  double& operator()(std::size_t i, std::size_t j) { return entries_[i * dim_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * dim_ + j]; }

  std::span<const double> entries() const noexcept { return entries_; }

  bool is_symmetric() const noexcept;

  friend bool operator==(const SquareMatrix&, const SquareMatrix&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> entries_;
};

SquareMatrix multiply(const SquareMatrix& a, const SquareMatrix& b);
SquareMatrix transpose(const SquareMatrix& a);
std::vector<double> multiply(const SquareMatrix& a, std::span<const double> x);
double frobenius_norm(const SquareMatrix& a);

// n x p numeric rectangle with named columns, row-major.
class DataMatrix {
 public:
  DataMatrix() = default;
  DataMatrix(std::size_t rows, std::vector<std::string> names, double fill = 0.0);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  void rename(std::vector<std::string> names);

  double& operator()(std::size_t r, std::size_t c) { return cells_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return cells_[r * cols() + c]; }

  std::span<const double> row(std::size_t r) const {
    return {cells_.data() + r * cols(), cols()};
  }
  std::span<double> row(std::size_t r) { return {cells_.data() + r * cols(), cols()}; }
  std::vector<double> column(std::size_t c) const;

  std::span<const double> cells() const noexcept { return cells_; }

  friend bool operator==(const DataMatrix&, const DataMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::vector<std::string> names_;
  std::vector<double> cells_;
};

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;
};

inline Shape shape_of(const DataMatrix& d) { return {d.rows(), d.cols()}; }

// Cells flagged true are missing and must be imputed.
class MissingMask {
 public:
  MissingMask() = default;
  explicit MissingMask(Shape shape)
      : rows_(shape.rows), cols_(shape.cols), flags_(shape.rows * shape.cols, 0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  bool missing(std::size_t r, std::size_t c) const { return flags_[r * cols_ + c] != 0; }
  void set(std::size_t r, std::size_t c, bool is_missing) {
    flags_[r * cols_ + c] = is_missing ? 1 : 0;
  }

  std::size_t missing_in_row(std::size_t r) const;
  std::size_t missing_in_column(std::size_t c) const;
  std::size_t incomplete_rows() const;
  std::size_t total_missing() const;
  bool any() const { return total_missing() > 0; }

  friend bool operator==(const MissingMask&, const MissingMask&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> flags_;
};

}  // namespace itconv
