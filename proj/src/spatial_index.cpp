#include "mvreg/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mvreg {

namespace {
constexpr std::uint32_t kLeafSize = 8;
}

SpatialIndex::SpatialIndex(const PointCloud& points) : points_(points) {
    if (points_.cols() == 0) throw EmptyCloud();
    if (!points_.allFinite()) throw InvalidArgument("SpatialIndex: non-finite coordinates");
    bbox_min_ = points_.rowwise().minCoeff();
    bbox_max_ = points_.rowwise().maxCoeff();
    order_.resize(size());
    std::iota(order_.begin(), order_.end(), 0u);
    nodes_.reserve(2 * size() / kLeafSize + 2);
    build(0, static_cast<std::uint32_t>(size()));
}

std::uint32_t SpatialIndex::build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    Node node;
    node.begin = begin;
    node.end = end;
    if (end - begin <= kLeafSize) {
        nodes_[id] = node;
        return id;
    }

    Point3 lo = points_.col(order_[begin]);
    Point3 hi = lo;
    for (std::uint32_t i = begin + 1; i < end; ++i) {
        lo = lo.cwiseMin(points_.col(order_[i]));
        hi = hi.cwiseMax(points_.col(order_[i]));
    }
    Eigen::Index axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (hi(axis) - lo(axis) <= 0.0) {
        // All coincident.
        nodes_[id] = node;
        return id;
    }

    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) { return points_(axis, a) < points_(axis, b); });
    node.axis = static_cast<std::int32_t>(axis);
    node.split = points_(axis, order_[mid]);
    node.left = build(begin, mid);
    node.right = build(mid, end);
    nodes_[id] = node;
    return id;
}

void SpatialIndex::nearest_rec(std::uint32_t id, const Point3& q, double min_d2, std::size_t& best,
                               double& best_d2) const {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
        for (std::uint32_t i = node.begin; i < node.end; ++i) {
            const std::uint32_t idx = order_[i];
            const double d2 = (points_.col(idx) - q).squaredNorm();
            if (d2 <= min_d2) continue;
            if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
                best_d2 = d2;
                best = idx;
            }
        }
        return;
    }
    // Left holds coordinates <= split, right >= split.
    const double diff = q(node.axis) - node.split;
    const std::uint32_t near = diff <= 0.0 ? node.left : node.right;
    const std::uint32_t far = diff <= 0.0 ? node.right : node.left;
    nearest_rec(near, q, min_d2, best, best_d2);
    // Ties must still be explored so the smaller index can win.
    if (diff * diff <= best_d2) nearest_rec(far, q, min_d2, best, best_d2);
}

Neighbor SpatialIndex::nearest(const Point3& q) const {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    double best_d2 = std::numeric_limits<double>::infinity();
    nearest_rec(0, q, -1.0, best, best_d2);
    return {best, std::sqrt(best_d2)};
}

bool SpatialIndex::nearest_beyond(const Point3& q, double min_distance, Neighbor& out) const {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    double best_d2 = std::numeric_limits<double>::infinity();
    nearest_rec(0, q, min_distance * min_distance, best, best_d2);
    if (best == std::numeric_limits<std::size_t>::max()) return false;
    out = {best, std::sqrt(best_d2)};
    return true;
}

void SpatialIndex::radius_rec(std::uint32_t id, const Point3& q, double r2, std::vector<std::size_t>& out) const {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
        for (std::uint32_t i = node.begin; i < node.end; ++i) {
            const std::uint32_t idx = order_[i];
            if ((points_.col(idx) - q).squaredNorm() <= r2) out.push_back(idx);
        }
        return;
    }
    const double diff = q(node.axis) - node.split;
    if (diff <= 0.0 || diff * diff <= r2) radius_rec(node.left, q, r2, out);
    if (diff >= 0.0 || diff * diff <= r2) radius_rec(node.right, q, r2, out);
}

std::vector<std::size_t> SpatialIndex::radius_search(const Point3& q, double r) const {
    std::vector<std::size_t> out;
    radius_rec(0, q, r * r, out);
    std::sort(out.begin(), out.end());
    return out;
}

double estimate_resolution(const SpatialIndex& index) {
    const PointCloud& pts = index.points();
    std::vector<double> nn;
    nn.reserve(index.size());
    for (Eigen::Index i = 0; i < pts.cols(); ++i) {
        Neighbor nb;
        if (index.nearest_beyond(pts.col(i), 0.0, nb)) nn.push_back(nb.distance);
    }
    if (nn.empty()) throw TooFewPoints("estimate_resolution: need at least two distinct points");
    const std::size_t mid = nn.size() / 2;
    std::nth_element(nn.begin(), nn.begin() + mid, nn.end());
    const double upper = nn[mid];
    if (nn.size() % 2 == 1) return upper;
    const double lower = *std::max_element(nn.begin(), nn.begin() + mid);
    return 0.5 * (lower + upper);
}

double estimate_resolution(const PointCloud& cloud) {
    if (cloud.cols() < 2) throw TooFewPoints("estimate_resolution: need at least two points");
    return estimate_resolution(SpatialIndex(cloud));
}

std::vector<std::size_t> downsample_indices(std::size_t n, int frequency) {
    if (frequency < 1) throw InvalidArgument("downsample: frequency must be >= 1");
    std::vector<std::size_t> idx;
    idx.reserve(n / static_cast<std::size_t>(frequency) + 1);
    for (std::size_t i = 0; i < n; i += static_cast<std::size_t>(frequency)) idx.push_back(i);
    return idx;
}

PointCloud downsample(const PointCloud& cloud, int frequency) {
    const auto idx = downsample_indices(static_cast<std::size_t>(cloud.cols()), frequency);
    PointCloud out(3, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = cloud.col(static_cast<Eigen::Index>(idx[k]));
    return out;
}

}  // namespace mvreg
