#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mvreg/geometry.hpp"

namespace mvreg {

/// Pairing of a data point with a model point.
struct Correspondence {
    std::size_t data_index = 0;
    std::size_t model_index = 0;
    double distance = 0.0;

    friend bool operator==(const Correspondence&, const Correspondence&) = default;
};

struct Neighbor {
    std::size_t index = 0;
    double distance = 0.0;
};

/// Exact k-d tree over a fixed point set. Immutable after construction;
/// concurrent queries are safe.
class SpatialIndex {
public:
    /// Copies the points. Throws EmptyCloud for an empty cloud and
    /// InvalidArgument on non-finite coordinates.
    explicit SpatialIndex(const PointCloud& points);

    std::size_t size() const { return static_cast<std::size_t>(points_.cols()); }
    const PointCloud& points() const { return points_; }
    const Point3& bbox_min() const { return bbox_min_; }
    const Point3& bbox_max() const { return bbox_max_; }

    /// Closest indexed point; equidistant candidates resolve to the smaller index.
    Neighbor nearest(const Point3& q) const;

    /// Closest point strictly farther than `min_distance` from q.
    /// Returns false when no such point exists.
    bool nearest_beyond(const Point3& q, double min_distance, Neighbor& out) const;

    /// Indices within distance <= r of q, ascending.
    std::vector<std::size_t> radius_search(const Point3& q, double r) const;

private:
    struct Node {
        // Leaf when axis < 0: [begin, end) into order_.
        std::int32_t axis = -1;
        double split = 0.0;
        std::uint32_t begin = 0;
        std::uint32_t end = 0;
        std::uint32_t left = 0;
        std::uint32_t right = 0;
    };

    std::uint32_t build(std::uint32_t begin, std::uint32_t end);
    void nearest_rec(std::uint32_t node, const Point3& q, double min_d2, std::size_t& best, double& best_d2) const;
    void radius_rec(std::uint32_t node, const Point3& q, double r2, std::vector<std::size_t>& out) const;

    PointCloud points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
    Point3 bbox_min_;
    Point3 bbox_max_;
};

/// Median over points of the distance to the nearest neighbor at a
/// different position. Throws TooFewPoints below two distinct points.
double estimate_resolution(const PointCloud& cloud);
double estimate_resolution(const SpatialIndex& index);

/// Keeps columns 0, f, 2f, ...
PointCloud downsample(const PointCloud& cloud, int frequency);

/// Indices kept by downsample(cloud, frequency) for a cloud of size n.
std::vector<std::size_t> downsample_indices(std::size_t n, int frequency);

}  // namespace mvreg
