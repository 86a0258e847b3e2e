#pragma once

#include <Eigen/Core>

#include "diact/tensor.hpp"

namespace diact::nn::detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using RowVectorMap = Eigen::Map<Eigen::RowVectorXd>;
using ConstRowVectorMap = Eigen::Map<const Eigen::RowVectorXd>;

inline MatrixMap as_matrix(Tensor& t) {
  return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}
inline ConstMatrixMap as_matrix(const Tensor& t) {
  return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}
inline MatrixMap as_matrix(Tensor& t, std::size_t rows, std::size_t cols) {
  return {t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}
inline ConstMatrixMap as_matrix(const Tensor& t, std::size_t rows, std::size_t cols) {
  return {t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}
inline RowVectorMap as_row(Tensor& t) { return {t.data(), static_cast<Eigen::Index>(t.size())}; }
inline ConstRowVectorMap as_row(const Tensor& t) { return {t.data(), static_cast<Eigen::Index>(t.size())}; }

}  // namespace diact::nn::detail
