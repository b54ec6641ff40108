#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>

namespace exmix {

// Observations are stored one per row so that a row is a contiguous d-vector.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::span<const double> row_span(const RowMatrix& m, Eigen::Index i) {
  return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
}

}  // namespace exmix
