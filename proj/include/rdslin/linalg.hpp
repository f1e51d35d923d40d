#pragma once

#include <Eigen/Dense>

namespace rdslin {

/// Largest state dimension supported without heap allocation.
inline constexpr int kMaxDim = 6;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

/// Largest singular value.
[[nodiscard]] double spectral_norm(const Mat& m);

/// Ratio of extreme singular values; infinity for a singular matrix.
[[nodiscard]] double condition_number(const Mat& m);

/// Orthonormal columns spanning the range of a projector.
[[nodiscard]] Mat range_basis(const Mat& projector);

/// Givens rotation acting on coordinates (i, j) of R^d.
[[nodiscard]] Mat plane_rotation(int d, int i, int j, double angle);

/// Product of matrices kept as a normalized factor times exp(log_scale),
/// so long products neither overflow nor underflow.
class ScaledProduct {
public:
    explicit ScaledProduct(const Mat& start);

    /// this <- m * this
    void left_multiply(const Mat& m);
    /// log of the spectral norm of the represented product (-inf for zero)
    [[nodiscard]] double log_norm() const;

private:
    Mat factor_;
    double log_scale_ = 0.0;
};

}  // namespace rdslin
