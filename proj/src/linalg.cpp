#include "rdslin/linalg.hpp"

#include <cmath>
#include <limits>

namespace rdslin {

double spectral_norm(const Mat& m) {
    if (m.size() == 0) {
        return 0.0;
    }
    if (m.rows() == 2 && m.cols() == 2) {
        // Closed form for 2x2: sigma_max^2 = (S + sqrt(S^2 - 4 det^2)) / 2.
        const double a = m(0, 0), b = m(0, 1), c = m(1, 0), d = m(1, 1);
        const double s = a * a + b * b + c * c + d * d;
        const double det = a * d - b * c;
        const double disc = std::max(0.0, s * s - 4.0 * det * det);
        return std::sqrt(0.5 * (s + std::sqrt(disc)));
    }
    if (m.rows() == 3 && m.cols() == 3) {
        // Largest eigenvalue of the Gram matrix; the direct solver is closed form for 3x3.
        const Eigen::Matrix3d g = m.transpose() * m;
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es;
        es.computeDirect(g, Eigen::EigenvaluesOnly);
        return std::sqrt(std::max(0.0, es.eigenvalues()(2)));
    }
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues()(0);
}

double condition_number(const Mat& m) {
    if (m.size() == 0) {
        return 1.0;
    }
    Eigen::JacobiSVD<Mat> svd(m);
    const auto& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    if (smin <= 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return s(0) / smin;
}

Mat range_basis(const Mat& projector) {
    const int d = static_cast<int>(projector.rows());
    Eigen::JacobiSVD<Mat> svd(projector, Eigen::ComputeFullU);
    // Singular values of a nonzero projector are either 0 or >= 1.
    int rank = 0;
    for (int i = 0; i < d; ++i) {
        if (svd.singularValues()(i) > 0.5) {
            ++rank;
        }
    }
    return svd.matrixU().leftCols(rank);
}

Mat plane_rotation(int d, int i, int j, double angle) {
    Mat r = Mat::Identity(d, d);
    const double c = std::cos(angle), s = std::sin(angle);
    r(i, i) = c;
    r(j, j) = c;
    r(i, j) = -s;
    r(j, i) = s;
    return r;
}

ScaledProduct::ScaledProduct(const Mat& start) : factor_(start) {}

void ScaledProduct::left_multiply(const Mat& m) {
    factor_ = m * factor_;
    const double s = factor_.cwiseAbs().maxCoeff();
    if (s > 0.0 && (s > 1e64 || s < 1e-64)) {
        factor_ /= s;
        log_scale_ += std::log(s);
    }
}

double ScaledProduct::log_norm() const {
    const double n = spectral_norm(factor_);
    if (n <= 0.0) {
        return -std::numeric_limits<double>::infinity();
    }
    return std::log(n) + log_scale_;
}

}  // namespace rdslin
