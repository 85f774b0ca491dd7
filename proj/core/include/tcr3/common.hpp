#pragma once

// Shared aliases and small utilities used across the library.

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tcr3 {

// Row-major dynamic matrix. Row-major keeps per-token / per-pixel rows
// contiguous, which is the layout every module assumes.
template <typename T>
using MatX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// N x 3 point lists (one world/camera point per row).
template <typename T>
using MatX3 = Eigen::Matrix<T, Eigen::Dynamic, 3, Eigen::RowMajor>;

template <typename T>
using Vec3 = Eigen::Matrix<T, 3, 1>;

template <typename T>
using VecX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using MatXd = MatX<double>;
using MatXf = MatX<float>;

// Throws std::invalid_argument with `msg` when `cond` is false. Used for
// precondition checks on public entry points.
inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace tcr3
