#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "mvreg/descriptors.hpp"
#include "mvreg/geometry.hpp"
#include "mvreg/spatial_index.hpp"

namespace mvreg {

/// Downsampled cloud with its descriptors and spatial index.
struct DescribedCloud {
    PointCloud points;
    DescriptorList descriptors;
    std::shared_ptr<const SpatialIndex> index;
    /// Median nearest-neighbor spacing of `points`.
    double resolution = 0.0;

    std::size_t size() const { return static_cast<std::size_t>(points.cols()); }

    /// Builds the index and resolution for `points`.
    static DescribedCloud make(PointCloud points, DescriptorList descriptors);
};

/// A data point paired with its nearest model point in descriptor space.
struct SeedMatch {
    std::size_t data_idx = 0;
    std::size_t model_idx = 0;
    double d_distance = 0.0;

    friend bool operator==(const SeedMatch&, const SeedMatch&) = default;
};

/// One seed per non-null data descriptor, sorted ascending by descriptor
/// distance (ties by data index). Throws NoValidDescriptors when either side
/// has no usable descriptor.
std::vector<SeedMatch> seed_matches(const DescriptorList& data, const DescriptorList& model);

struct PropagationThresholds {
    /// Maximum descriptor distance of an accepted pair.
    double tau_d = 0.0;
    /// Maximum angle between the rotated data normal and the model normal, radians.
    double tau_n = 0.0;
    /// Maximum change of a pairwise length.
    double tau_len = 0.0;
    /// Spatial neighborhood radius used to grow the region.
    double rho = 0.0;
    /// Neighborhood of the seed used to fix the initial rotation; zero means rho.
    double bootstrap_radius = 0.0;
    /// At most this many seed neighbors score each initial rotation.
    std::size_t bootstrap_samples = 64;
    /// The initial estimate is kept until this many matches are accepted.
    std::size_t refit_min = 10;
};

struct MatchSet {
    std::vector<Correspondence> matches;
    SeedMatch seed;
    /// Candidate pairs examined while growing.
    std::size_t visited = 0;
};

/// Region-grows a seed into a set of matches. A candidate (y', x') next to
/// a frontier pair (y, x) is accepted when its descriptor distance, its
/// length change |‖y - y'‖ - ‖x - x'‖| and, once a rigid estimate is
/// available, its normal angle all stay under threshold. The initial
/// estimate aligns the seed normals and picks the spin about them that best
/// places the seed's neighbors on the model surface; later estimates are
/// refit from the accepted matches. Data and model points are each used at
/// most once.
MatchSet propagate(const SeedMatch& seed, const DescribedCloud& data, const DescribedCloud& model,
                   const PropagationThresholds& thresholds);

struct RansacParams {
    int iterations = 1000;
    double inlier_tol = 0.0;
    /// A consensus must be strictly larger than this.
    std::size_t min_consensus = 10;
    /// Early exit once this confidence of having seen an all-inlier sample is reached; 1 disables it.
    double confidence = 0.999;
    std::uint64_t seed = 42;
};

struct Consensus {
    MatchSet inliers;
    RigidTransformd transform;
    int trials = 0;
};

/// Three-point RANSAC over a match set; the final motion is refit on all
/// inliers. Returns nullopt when the best consensus has at most
/// min_consensus matches.
std::optional<Consensus> ransac_consensus(const MatchSet& set, const PointCloud& data, const PointCloud& model,
                                          const RansacParams& params);

}  // namespace mvreg
