#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <limits>

namespace cpo {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Point sets are stored one point per column.
template <typename Scalar>
using PointsX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vector = VectorX<double>;
using Points = PointsX<double>;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Metric { Euclidean };

template <typename Scalar>
struct Ball {
    VectorX<Scalar> center;
    Scalar radius{0};
};

} // namespace cpo
