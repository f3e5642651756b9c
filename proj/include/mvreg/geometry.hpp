#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Dense>

#include "mvreg/errors.hpp"

namespace mvreg {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

/// Points stored column-wise, one column per point.
template <typename Scalar>
using Cloud = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;

using Point3 = Vector3<double>;
using PointCloud = Cloud<double>;

/// Rotation plus translation: x -> R x + t.
template <typename Scalar>
struct RigidTransform {
    Matrix3<Scalar> R = Matrix3<Scalar>::Identity();
    Vector3<Scalar> t = Vector3<Scalar>::Zero();

    static RigidTransform Identity() { return {}; }

    /// Frobenius norm of R^T R - I.
    Scalar orthonormality_error() const {
        return (R.transpose() * R - Matrix3<Scalar>::Identity()).norm();
    }

    bool is_valid(Scalar tol = Scalar(1e-9)) const {
        return orthonormality_error() <= tol && std::abs(R.determinant() - Scalar(1)) <= tol &&
               R.allFinite() && t.allFinite();
    }

    template <typename T>
    RigidTransform<T> cast() const {
        return {R.template cast<T>(), t.template cast<T>()};
    }
};

using RigidTransformd = RigidTransform<double>;

template <typename Scalar, typename Derived>
Vector3<Scalar> apply(const RigidTransform<Scalar>& T, const Eigen::MatrixBase<Derived>& p) {
    return T.R * p + T.t;
}

/// Transforms every column of a cloud.
template <typename Scalar>
Cloud<Scalar> apply(const RigidTransform<Scalar>& T, const Cloud<Scalar>& cloud) {
    return (T.R * cloud).colwise() + T.t;
}

/// Nearest rotation in the Frobenius sense, with det = +1.
template <typename Scalar>
Matrix3<Scalar> project_to_rotation(const Matrix3<Scalar>& M) {
    Eigen::JacobiSVD<Matrix3<Scalar>> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Matrix3<Scalar> D = Matrix3<Scalar>::Identity();
    D(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? Scalar(-1) : Scalar(1);
    return svd.matrixU() * D * svd.matrixV().transpose();
}

inline constexpr double kReorthonormalizeThreshold = 1e-7;

/// Returns T2 * T1, i.e. apply T1 first.
template <typename Scalar>
RigidTransform<Scalar> compose(const RigidTransform<Scalar>& T2, const RigidTransform<Scalar>& T1) {
    RigidTransform<Scalar> out{T2.R * T1.R, T2.R * T1.t + T2.t};
    if (out.orthonormality_error() > Scalar(kReorthonormalizeThreshold)) {
        out.R = project_to_rotation(out.R);
    }
    return out;
}

template <typename Scalar>
RigidTransform<Scalar> invert(const RigidTransform<Scalar>& T) {
    Matrix3<Scalar> Rt = T.R.transpose();
    return {Rt, -(Rt * T.t)};
}

inline constexpr double kRankRatio = 1e-8;

/// Closed-form least-squares rigid motion mapping `source` columns onto
/// `target` columns (centroids, 3x3 cross-covariance SVD, reflection fix).
/// Throws DegenerateConfiguration with fewer than three pairs or when the
/// centered source has rank below two.
template <typename DerivedA, typename DerivedB>
RigidTransform<typename DerivedA::Scalar> estimate_rigid_transform(const Eigen::MatrixBase<DerivedA>& source,
                                                                   const Eigen::MatrixBase<DerivedB>& target) {
    using Scalar = typename DerivedA::Scalar;
    static_assert(DerivedA::RowsAtCompileTime == 3 && DerivedB::RowsAtCompileTime == 3,
                  "expected 3xN point matrices");
    const Eigen::Index n = source.cols();
    if (n != target.cols()) {
        throw InvalidArgument("estimate_rigid_transform: source/target size mismatch");
    }
    if (n < 3) {
        throw DegenerateConfiguration("estimate_rigid_transform: fewer than 3 pairs");
    }
    const Vector3<Scalar> mu_s = source.rowwise().mean();
    const Vector3<Scalar> mu_t = target.rowwise().mean();
    const Matrix3<Scalar> H = (source.colwise() - mu_s) * (target.colwise() - mu_t).transpose();

    // The source spread decides degeneracy, not H, which also vanishes when
    // the target collapses.
    const Matrix3<Scalar> S = (source.colwise() - mu_s) * (source.colwise() - mu_s).transpose();
    Eigen::JacobiSVD<Matrix3<Scalar>> spread(S);
    const auto& sv = spread.singularValues();
    // S holds squared singular values of the centered source.
    if (sv(0) <= Scalar(0) || std::sqrt(sv(1) / sv(0)) < Scalar(kRankRatio)) {
        throw DegenerateConfiguration("estimate_rigid_transform: source points are collinear");
    }

    Eigen::JacobiSVD<Matrix3<Scalar>> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Matrix3<Scalar>& U = svd.matrixU();
    const Matrix3<Scalar>& V = svd.matrixV();
    Matrix3<Scalar> D = Matrix3<Scalar>::Identity();
    if ((V * U.transpose()).determinant() < 0) D(2, 2) = Scalar(-1);

    RigidTransform<Scalar> T;
    T.R = V * D * U.transpose();
    T.t = mu_t - T.R * mu_s;
    return T;
}

/// Pair-list overload.
template <typename Scalar>
RigidTransform<Scalar> estimate_rigid_transform(const std::vector<std::pair<Vector3<Scalar>, Vector3<Scalar>>>& pairs) {
    Cloud<Scalar> src(3, static_cast<Eigen::Index>(pairs.size()));
    Cloud<Scalar> dst(3, static_cast<Eigen::Index>(pairs.size()));
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        src.col(static_cast<Eigen::Index>(i)) = pairs[i].first;
        dst.col(static_cast<Eigen::Index>(i)) = pairs[i].second;
    }
    return estimate_rigid_transform(src, dst);
}

/// Frobenius norm of the rotation difference.
template <typename Scalar>
Scalar rotation_error(const RigidTransform<Scalar>& a, const RigidTransform<Scalar>& b) {
    return (a.R - b.R).norm();
}

template <typename Scalar>
Scalar translation_error(const RigidTransform<Scalar>& a, const RigidTransform<Scalar>& b) {
    return (a.t - b.t).norm();
}

/// Axis-aligned bounding-box diagonal length.
template <typename Scalar>
Scalar bbox_diagonal(const Cloud<Scalar>& cloud) {
    if (cloud.cols() == 0) return Scalar(0);
    return (cloud.rowwise().maxCoeff() - cloud.rowwise().minCoeff()).norm();
}

}  // namespace mvreg
