#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "mvreg/descriptors.hpp"
#include "mvreg/pairwise.hpp"
#include "mvreg/spatial_index.hpp"
#include "mvreg/trimmed_icp.hpp"

namespace mvreg {

/// Split of a registered pair into overlapping and remaining parts.
struct OverlapPartition {
    /// Distinct model points hit by the trimmed correspondences, ascending.
    std::vector<std::size_t> q_overlap;
    /// Model points left untouched (A).
    std::vector<std::size_t> q_rest;
    /// Data points of the trimmed correspondences, ascending.
    std::vector<std::size_t> p_overlap;
    /// Data points outside the overlap (B).
    std::vector<std::size_t> p_rest;
    /// (data index, model index), one entry per overlapping data point, by data index.
    std::vector<std::pair<std::size_t, std::size_t>> pairing;

    std::size_t fused_count() const { return pairing.size(); }
};

/// Partitions n_data data points and n_model model points by a trimmed
/// correspondence set. A model point shared by several data points is
/// counted once in q_overlap. Throws InvalidArgument on out-of-range or
/// repeated data indices.
OverlapPartition partition_overlap(std::size_t n_data, std::size_t n_model, std::span<const Correspondence> trimmed);

/// One midpoint per pairing entry; `data` is already transformed.
PointCloud fuse_overlap(std::span<const std::pair<std::size_t, std::size_t>> pairing, const PointCloud& data,
                        const PointCloud& model);

/// Fuses two descriptors of matched points. D is averaged (a scale that is
/// sparse on one side only takes the other side's triple) and each triple
/// re-sorted descending. N is normalize(R N_P + N_Q) after flipping N_P
/// when (R N_P) . N_Q < 0. Throws DegenerateNormalSum when that sum vanishes.
MultiScaleDescriptor merge_descriptor(const MultiScaleDescriptor& data, const MultiScaleDescriptor& model,
                                      const Eigen::Matrix3d& R);

/// merge_descriptor over a pairing, falling back to N_Q on a degenerate
/// normal sum. A null side yields the other side (data normals rotated).
DescriptorList merge_descriptors(const DescriptorList& data, const DescriptorList& model, const Eigen::Matrix3d& R,
                                 std::span<const std::pair<std::size_t, std::size_t>> pairing);

struct AugmentOptions {
    /// Append the transformed scan without fusing anything.
    bool rude = false;
    /// Keypoint pairs are matched by nearest neighbor within this multiple
    /// of the keypoint-level model resolution.
    double descriptor_gate_factor = 3.0;
};

struct AugmentResult {
    ModelState model;
    OverlapPartition partition;
    OverlapPartition descriptor_partition;
};

/// Q' = A ∪ F ∪ B at full resolution from the given trimmed correspondences
/// (data indices into scan.full), and the same construction on the keypoint
/// clouds with merged descriptors. Indices and resolutions are rebuilt.
AugmentResult augment_model(const ModelState& model, const ScanData& scan, const RigidTransformd& T,
                            std::span<const Correspondence> trimmed, const AugmentOptions& options = {});

/// As above, with trimmed correspondences from one correspondence and
/// overlap pass of the full scan under T.
AugmentResult augment_model(const ModelState& model, const ScanData& scan, const RigidTransformd& T,
                            const TricpParams& params, const AugmentOptions& options = {});

}  // namespace mvreg
