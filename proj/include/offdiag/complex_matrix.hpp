#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "offdiag/error.hpp"

namespace offdiag {

using cdouble = std::complex<double>;

/// Dense row-major complex matrix; the universal carrier for operators,
/// projections and corner blocks. Zero-dimensional shapes are legal (corner
/// blocks of a trivial complement are 0xk).
class ComplexMatrix {
public:
  ComplexMatrix() = default;
  ComplexMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, cdouble(0.0, 0.0)) {}

  static ComplexMatrix identity(std::size_t n);
  static ComplexMatrix diagonal(std::span<const cdouble> entries);
  static ComplexMatrix from_rows(std::initializer_list<std::initializer_list<cdouble>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool is_square() const { return rows_ == cols_; }

  cdouble& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const cdouble& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  cdouble* data() { return data_.data(); }
  const cdouble* data() const { return data_.data(); }
  cdouble* row(std::size_t i) { return data_.data() + i * cols_; }
  const cdouble* row(std::size_t i) const { return data_.data() + i * cols_; }

  ComplexMatrix adjoint() const;
  ComplexMatrix transpose() const;
  ComplexMatrix conjugate() const;

  /// Copy a contiguous block [r0, r0+nr) x [c0, c0+nc).
  ComplexMatrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
  void set_block(std::size_t r0, std::size_t c0, const ComplexMatrix& b);

  ComplexMatrix column(std::size_t j) const;
  /// Columns [c0, c1).
  ComplexMatrix columns(std::size_t c0, std::size_t c1) const;

  bool all_finite() const;
  void require_finite(const char* what) const;

  friend bool operator==(const ComplexMatrix& a, const ComplexMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cdouble> data_;
};

ComplexMatrix operator+(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix operator-(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix operator*(cdouble s, const ComplexMatrix& a);
inline ComplexMatrix operator*(double s, const ComplexMatrix& a) { return cdouble(s, 0.0) * a; }

/// a^H * b without materializing the adjoint.
ComplexMatrix adjoint_times(const ComplexMatrix& a, const ComplexMatrix& b);

/// Direct sum diag(blocks...).
ComplexMatrix direct_sum(std::span<const ComplexMatrix> blocks);

/// "cmtx v1" text format: header `cmtx <rows> <cols>`, then one `<re> <im>`
/// line per entry in row-major order, 17 significant digits (round-trip
/// exact). Readers reject wrong counts and malformed numbers.
ComplexMatrix read_cmtx(const std::string& path);
void write_cmtx(const std::string& path, const ComplexMatrix& m); // atomic: temp + rename

std::string format_cmtx(const ComplexMatrix& m);
ComplexMatrix parse_cmtx(const std::string& text);

} // namespace offdiag
