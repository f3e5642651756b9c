#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "mvreg/geometry.hpp"
#include "mvreg/spatial_index.hpp"

namespace mvreg {

/// Support radii, strictly increasing, at least two.
struct ScaleSet {
    std::vector<double> radii;
    /// Scale whose smallest-eigenvalue eigenvector gives the normal.
    std::size_t normal_scale = kLargest;

    static constexpr std::size_t kLargest = static_cast<std::size_t>(-1);

    std::size_t size() const { return radii.size(); }
    double largest() const { return radii.back(); }
    std::size_t normal_index() const { return normal_scale == kLargest ? radii.size() - 1 : normal_scale; }
    /// Throws InvalidArgument unless L >= 2, radii are positive and increasing
    /// and normal_scale indexes a radius (or is kLargest).
    void validate() const;

    /// radii = multipliers * resolution.
    static ScaleSet from_resolution(double resolution, const std::vector<double>& multipliers = {5.0, 10.0, 20.0});
};

/// Minimum neighbor count for a usable covariance.
inline constexpr std::size_t kMinNeighbors = 4;

/// Normal plus per-scale trace-normalized eigenvalues (descending within each
/// scale, 3 entries per scale).
struct MultiScaleDescriptor {
    Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
    Eigen::VectorXd values;
    /// One flag per scale; a sparse scale contributes (1/3, 1/3, 1/3).
    std::vector<bool> sparse;
};

using DescriptorList = std::vector<std::optional<MultiScaleDescriptor>>;

/// Population covariance of the support points within r of `center`.
/// Throws SparseNeighborhood when fewer than kMinNeighbors points are found.
Eigen::Matrix3d covariance_at_scale(const SpatialIndex& support, const Point3& center, double r);

/// Same, centred on an indexed point (the point itself is part of its neighborhood).
Eigen::Matrix3d covariance_at_scale(const SpatialIndex& support, std::size_t point_idx, double r);

/// Descriptor at `center`. The normal comes from scales.normal_scale (the
/// nearest dense scale if that one is sparse) and is oriented away from
/// `orientation_center`. Throws DegeneratePoint when every
/// scale is sparse.
MultiScaleDescriptor compute_descriptor(const SpatialIndex& support, const Point3& center, const ScaleSet& scales,
                                        const Point3& orientation_center);

/// One descriptor per column of `keypoints`, neighborhoods taken from
/// `support`; points where every scale is sparse are left empty.
DescriptorList compute_all(const SpatialIndex& support, const PointCloud& keypoints, const ScaleSet& scales);

/// Keypoints and support are the same cloud.
DescriptorList compute_all(const PointCloud& cloud, const ScaleSet& scales);

/// Euclidean distance between eigenvalue vectors.
double descriptor_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
double descriptor_distance(const std::optional<MultiScaleDescriptor>& a, const std::optional<MultiScaleDescriptor>& b);

/// Angle between two directions, ignoring sign (radians in [0, pi/2]).
double unsigned_angle(const Eigen::Vector3d& a, const Eigen::Vector3d& b);

}  // namespace mvreg
