#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>

namespace muygps {

using Index = std::int64_t;

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// n x p coordinates, one point per row, rows contiguous in memory.
using Locations = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::span<const double> point(const Locations& x, Index i) {
    return {x.data() + i * x.cols(), static_cast<std::size_t>(x.cols())};
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double t = a[j] - b[j];
        s += t * t;
    }
    return s;
}

}  // namespace muygps
