#include "mvreg/descriptors.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace mvreg {

void ScaleSet::validate() const {
    if (radii.size() < 2) throw InvalidArgument("ScaleSet: need at least two radii");
    for (std::size_t l = 0; l < radii.size(); ++l) {
        if (!(radii[l] > 0.0) || !std::isfinite(radii[l])) throw InvalidArgument("ScaleSet: radii must be positive");
        if (l > 0 && !(radii[l - 1] < radii[l])) throw InvalidArgument("ScaleSet: radii must be strictly increasing");
    }
    if (normal_scale != kLargest && normal_scale >= radii.size()) throw InvalidArgument("ScaleSet: normal_scale out of range");
}

ScaleSet ScaleSet::from_resolution(double resolution, const std::vector<double>& multipliers) {
    ScaleSet s;
    for (double m : multipliers) s.radii.push_back(m * resolution);
    s.validate();
    return s;
}

Eigen::Matrix3d covariance_at_scale(const SpatialIndex& support, const Point3& center, double r) {
    if (!(r > 0.0)) throw InvalidArgument("covariance_at_scale: radius must be positive");
    const auto nbrs = support.radius_search(center, r);
    if (nbrs.size() < kMinNeighbors) throw SparseNeighborhood("covariance_at_scale: too few neighbors");
    const PointCloud& pts = support.points();
    Point3 mu = Point3::Zero();
    for (std::size_t j : nbrs) mu += pts.col(static_cast<Eigen::Index>(j));
    mu /= static_cast<double>(nbrs.size());
    Eigen::Matrix3d C = Eigen::Matrix3d::Zero();
    for (std::size_t j : nbrs) {
        const Point3 d = pts.col(static_cast<Eigen::Index>(j)) - mu;
        C.noalias() += d * d.transpose();
    }
    return C / static_cast<double>(nbrs.size());
}

Eigen::Matrix3d covariance_at_scale(const SpatialIndex& support, std::size_t point_idx, double r) {
    if (point_idx >= support.size()) throw InvalidArgument("covariance_at_scale: index out of range");
    return covariance_at_scale(support, Point3(support.points().col(static_cast<Eigen::Index>(point_idx))), r);
}

MultiScaleDescriptor compute_descriptor(const SpatialIndex& support, const Point3& center, const ScaleSet& scales,
                                        const Point3& orientation_center) {
    const std::size_t L = scales.size();
    MultiScaleDescriptor desc;
    desc.values.resize(static_cast<Eigen::Index>(3 * L));
    desc.sparse.assign(L, false);
    bool any_dense = false;
    std::vector<Eigen::Vector3d> normals(L, Eigen::Vector3d::UnitZ());

    for (std::size_t l = 0; l < L; ++l) {
        const auto base = static_cast<Eigen::Index>(3 * l);
        Eigen::Matrix3d C;
        try {
            C = covariance_at_scale(support, center, scales.radii[l]);
        } catch (const SparseNeighborhood&) {
            desc.values.segment<3>(base).setConstant(1.0 / 3.0);
            desc.sparse[l] = true;
            continue;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(C);
        // Ascending; clamp tiny negative round-off.
        Eigen::Vector3d ev = es.eigenvalues().cwiseMax(0.0);
        const double trace = ev.sum();
        if (!(trace > 0.0)) {
            desc.values.segment<3>(base).setConstant(1.0 / 3.0);
            desc.sparse[l] = true;
            continue;
        }
        desc.values(base) = ev(2) / trace;
        desc.values(base + 1) = ev(1) / trace;
        desc.values(base + 2) = ev(0) / trace;
        any_dense = true;
        normals[l] = es.eigenvectors().col(0).normalized();
    }
    if (!any_dense) throw DegeneratePoint("compute_descriptor: every scale is sparse");

    // Nearest dense scale to the requested one, preferring larger radii on ties.
    std::size_t pick = L;
    for (std::size_t gap = 0; pick == L; ++gap) {
        const std::size_t want = scales.normal_index();
        if (want + gap < L && !desc.sparse[want + gap]) pick = want + gap;
        else if (gap <= want && !desc.sparse[want - gap]) pick = want - gap;
    }
    desc.normal = normals[pick];

    const Point3 outward = center - orientation_center;
    const double s = desc.normal.dot(outward);
    if (s < 0.0) desc.normal = -desc.normal;
    return desc;
}

DescriptorList compute_all(const SpatialIndex& support, const PointCloud& keypoints, const ScaleSet& scales) {
    scales.validate();
    DescriptorList out(static_cast<std::size_t>(keypoints.cols()));
    if (keypoints.cols() == 0) return out;
    const Point3 centroid = keypoints.rowwise().mean();
    for (Eigen::Index i = 0; i < keypoints.cols(); ++i) {
        try {
            out[static_cast<std::size_t>(i)] = compute_descriptor(support, keypoints.col(i), scales, centroid);
        } catch (const DegeneratePoint&) {
        }
    }
    return out;
}

DescriptorList compute_all(const PointCloud& cloud, const ScaleSet& scales) {
    if (cloud.cols() == 0) throw EmptyCloud();
    return compute_all(SpatialIndex(cloud), cloud, scales);
}

double descriptor_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw InvalidArgument("descriptor_distance: length mismatch");
    return (a - b).norm();
}

double descriptor_distance(const std::optional<MultiScaleDescriptor>& a, const std::optional<MultiScaleDescriptor>& b) {
    if (!a || !b) throw NullDescriptor();
    return descriptor_distance(a->values, b->values);
}

double unsigned_angle(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
    const double c = std::abs(a.normalized().dot(b.normalized()));
    return std::acos(std::min(1.0, c));
}

}  // namespace mvreg
