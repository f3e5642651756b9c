#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "mvreg/descriptors.hpp"
#include "mvreg/propagation.hpp"
#include "mvreg/spatial_index.hpp"
#include "mvreg/trimmed_icp.hpp"

namespace mvreg {

struct PairwiseConfig {
    /// Stride used for descriptor keypoints.
    int descriptor_frequency = 100;
    /// Descriptor radii as multiples of the keypoint resolution.
    std::vector<double> scale_multipliers = {5.0, 10.0, 20.0};
    /// Index of the radius that supplies normals; negative selects the largest.
    int normal_scale = -1;
    /// Stride used for the data side of the trimmed ICP refinement.
    int icp_frequency = 10;

    /// Fraction of sorted seeds that get propagated.
    double delta = 0.3;
    /// Propagate every seed instead of the top delta fraction.
    bool full_propagation = false;

    double lambda = 2.0;
    double xi_min = 0.2;
    int max_iterations = 100;
    /// Stopping threshold as a multiple of the squared model bbox diagonal.
    double epsilon_relative = 1e-9;

    int ransac_iterations = 1000;
    std::uint64_t ransac_seed = 42;
    double ransac_confidence = 0.999;
    /// Inlier tolerance as a multiple of the descriptor-level model resolution.
    double inlier_tol_factor = 3.0;
    std::size_t min_consensus = 10;

    /// tau_D as a multiple of the median seed distance.
    double tau_d_factor = 3.0;
    double tau_n_degrees = 20.0;
    /// tau_len as a multiple of the descriptor-level model resolution.
    double tau_len_factor = 3.0;
    /// Growth radius as a multiple of the descriptor-level model resolution;
    /// zero selects the largest descriptor radius.
    double rho_factor = 0.0;

    std::size_t min_points = 100;

    /// Trimmed ICP iterations applied to candidates before quality is
    /// compared again; zero scores the raw consensus transforms only.
    int selection_iterations = 5;
    /// Only this many candidates, best quality first, are refined; zero refines all.
    std::size_t selection_top = 48;

    /// After the final refinement, trimmed ICP is restarted from the result
    /// rotated by this angle (radians) about each of the six axis directions
    /// through the aligned data centroid; the lowest psi wins and the round
    /// repeats while psi improves. Zero disables restarts.
    double restart_angle = 0.05;
    int max_restart_rounds = 3;
    /// Accepts propagated matches before the first refit of the growth estimate.
    std::size_t refit_min = 10;

    void validate() const;
    TricpParams tricp(double model_diagonal) const;
};

/// A scan prepared for registration: strided subsamples and descriptors.
/// Descriptors are computed once and reused across passes.
struct ScanData {
    PointCloud full;
    PointCloud icp;
    DescribedCloud described;
};

/// Model side of a registration. Rebuilt, never mutated, on augmentation.
struct ModelState {
    PointCloud full;
    std::shared_ptr<const SpatialIndex> full_index;
    /// Resolution of the full-resolution model.
    double resolution = 0.0;
    DescribedCloud described;
    ScaleSet scales;

    std::size_t size() const { return static_cast<std::size_t>(full.cols()); }
    double diagonal() const { return bbox_diagonal(full); }
};

/// Builds subsamples and descriptors for one scan. Descriptor neighborhoods
/// are gathered from the full-resolution scan.
ScanData prepare_scan(const PointCloud& cloud, const ScaleSet& scales, const PairwiseConfig& config);

/// Model state seeded from a prepared scan.
ModelState make_model(const ScanData& scan, const ScaleSet& scales);

/// Model state from raw parts; builds both indices.
ModelState make_model(PointCloud full, DescribedCloud described, const ScaleSet& scales);

/// Descriptor radii derived from a reference cloud's resolution.
ScaleSet default_scales(const PointCloud& reference, const PairwiseConfig& config);

struct PairwiseStats {
    std::size_t seeds_total = 0;
    std::size_t seeds_propagated = 0;
    std::vector<std::size_t> match_set_sizes;
    std::vector<std::size_t> consensus_sizes;
    std::size_t candidates = 0;
    std::size_t propagation_visited = 0;
    std::size_t ransac_trials = 0;
    /// Summed over the final refinement and every restart.
    int icp_iterations = 0;
    int restart_rounds = 0;
    int restarts_taken = 0;
    double best_quality = 0.0;
    double seconds_propagation = 0.0;
    double seconds_selection = 0.0;
    double seconds_icp = 0.0;
};

struct PairwiseResult {
    RigidTransformd transform;
    double xi = 1.0;
    double tmse = 0.0;
    double psi = 0.0;
    double lambda = 2.0;
    /// Trimmed correspondences of the final ICP evaluation (indices into the ICP subsample).
    std::vector<Correspondence> subset;
    std::vector<double> psi_history;
};

struct PairwiseOutcome {
    /// Empty when no seed survived consensus (no alignment).
    std::optional<PairwiseResult> result;
    PairwiseStats stats;

    bool aligned() const { return result.has_value(); }
};

/// psi after one correspondence and overlap pass under T; lower is better.
double quality(const RigidTransformd& T, const PointCloud& data, const SpatialIndex& model, const TricpParams& params);

/// Number of seeds propagated for n seeds.
std::size_t propagation_count(std::size_t n, double delta, bool full);

/// Seed matching, top-delta propagation, RANSAC, quality-based selection
/// and trimmed ICP refinement of `data` against `model`.
PairwiseOutcome register_pair(const ScanData& data, const ModelState& model, const PairwiseConfig& config);

}  // namespace mvreg
