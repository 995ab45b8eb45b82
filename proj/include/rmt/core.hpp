#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rmt {

using cplx = std::complex<double>;
using Index = Eigen::Index;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RowMajorMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

// Raised when a requested computation would exceed a configured size cap.
class CapacityError : public std::runtime_error {
 public:
  CapacityError(const std::string& what, std::size_t required_bytes)
      : std::runtime_error(what + " (requires about " + std::to_string(required_bytes) + " bytes)"),
        required_bytes_(required_bytes) {}
  std::size_t required_bytes() const noexcept { return required_bytes_; }

 private:
  std::size_t required_bytes_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

// An ordered list of square complex matrices sharing one dimension.
class MatrixTuple {
 public:
  MatrixTuple() = default;

  explicit MatrixTuple(std::vector<Matrix> entries) : entries_(std::move(entries)) {
    for (const auto& m : entries_) {
      require(m.rows() == m.cols(), "MatrixTuple entries must be square");
      require(m.rows() == entries_.front().rows(), "MatrixTuple entries must share a dimension");
    }
  }

  MatrixTuple(std::initializer_list<Matrix> entries) : MatrixTuple(std::vector<Matrix>(entries)) {}

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  Index dim() const noexcept { return entries_.empty() ? 0 : entries_.front().rows(); }

  const Matrix& operator[](std::size_t j) const { return entries_[j]; }
  const Matrix& at(std::size_t j) const { return entries_.at(j); }
  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }
  const std::vector<Matrix>& entries() const noexcept { return entries_; }

  MatrixTuple adjoint() const {
    std::vector<Matrix> out;
    out.reserve(entries_.size());
    for (const auto& m : entries_) out.push_back(m.adjoint());
    return MatrixTuple(std::move(out));
  }

  MatrixTuple scaled(double s) const {
    std::vector<Matrix> out;
    out.reserve(entries_.size());
    for (const auto& m : entries_) out.push_back(s * m);
    return MatrixTuple(std::move(out));
  }

 private:
  std::vector<Matrix> entries_;
};

// Scalar tuple (a_1, ..., a_n) viewed as 1x1 matrices.
inline MatrixTuple scalar_tuple(const std::vector<cplx>& values) {
  std::vector<Matrix> out;
  out.reserve(values.size());
  for (auto v : values) out.push_back(Matrix::Constant(1, 1, v));
  return MatrixTuple(std::move(out));
}

inline Matrix matrix_unit(Index k, Index i, Index j) {
  Matrix m = Matrix::Zero(k, k);
  m(i, j) = 1.0;
  return m;
}

}  // namespace rmt
