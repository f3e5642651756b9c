#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mvreg/geometry.hpp"
#include "mvreg/spatial_index.hpp"

namespace mvreg {

struct TricpParams {
    /// Overlap penalty exponent in psi = tmse / xi^(1 + lambda).
    double lambda = 2.0;
    /// Lower bound on the overlap fraction.
    double xi_min = 0.2;
    int max_iterations = 100;
    /// Absolute stopping threshold on |psi_k - psi_{k-1}|.
    double epsilon = 1e-9;

    void validate() const;
};

/// Mean of squared correspondence distances.
double tmse(std::span<const Correspondence> subset);

/// Same, recomputing distances from the clouds under T.
double tmse(const PointCloud& data, const PointCloud& model, const RigidTransformd& T,
            std::span<const Correspondence> subset);

/// tmse / xi^(1 + lambda).
double psi(double xi, double tmse, double lambda);

/// Nearest model point for every data point moved by T.
std::vector<Correspondence> correspondence_step(const PointCloud& data, const SpatialIndex& model,
                                                const RigidTransformd& T);

struct OverlapEstimate {
    double xi = 1.0;
    double tmse = 0.0;
    double psi = 0.0;
    /// Sorted by distance, the retained prefix.
    std::vector<Correspondence> subset;
};

/// Sweeps every prefix size from ceil(xi_min * N) to N of the
/// distance-sorted correspondences and keeps the one minimizing psi; ties
/// favour the larger overlap.
OverlapEstimate overlap_step(std::vector<Correspondence> correspondences, const TricpParams& params);

struct TricpResult {
    RigidTransformd transform;
    double xi = 1.0;
    double tmse = 0.0;
    double psi = 0.0;
    /// Trimmed subset evaluated at `transform`.
    std::vector<Correspondence> subset;
    /// psi at the start of each iteration.
    std::vector<double> psi_history;
    int iterations = 0;
};

/// Alternates correspondence, overlap and transform steps until
/// max_iterations or |psi_k - psi_{k-1}| < epsilon. The returned (xi, tmse,
/// psi, subset) are evaluated at the returned transform.
TricpResult trimmed_icp(const PointCloud& data, const SpatialIndex& model, const RigidTransformd& initial,
                        const TricpParams& params);

}  // namespace mvreg
