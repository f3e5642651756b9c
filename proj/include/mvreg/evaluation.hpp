#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mvreg/geometry.hpp"

namespace mvreg {

struct ErrorReport {
    /// Mean Frobenius rotation difference.
    double e_R = 0.0;
    /// Mean translation difference, in scan units.
    double e_t = 0.0;
    std::vector<double> rotation_errors;
    std::vector<double> translation_errors;
};

/// Compares transform sets after re-expressing both relative to their entry
/// at `reference`. Throws LengthMismatch on differing sizes.
ErrorReport evaluate(const std::vector<RigidTransformd>& estimated, const std::vector<RigidTransformd>& ground_truth,
                     std::size_t reference = 0);

/// Fraction of a's points whose nearest neighbor in b lies within tol.
double measure_overlap(const PointCloud& a, const PointCloud& b, double tol);

/// Closed bumpy surface sampled uniformly in direction, roughly `radius` in size.
PointCloud make_blob(std::size_t n_points, std::uint64_t seed, double radius = 100.0);

struct SynthScans {
    std::vector<PointCloud> scans;
    /// Maps each scan into the frame of scans[0]; entry 0 is the identity.
    std::vector<RigidTransformd> ground_truth;
    /// Sector each scan was cropped from.
    std::vector<std::size_t> sector;
};

struct SynthParams {
    std::size_t n_scans = 6;
    double overlap = 0.6;
    /// Noise standard deviation as a fraction of the base bbox diagonal.
    double noise_sigma = 5e-4;
    std::uint64_t seed = 1;
    /// Upper bound on a sector's angular width, radians.
    double max_width = 200.0 * 3.14159265358979323846 / 180.0;
};

/// Crops overlapping azimuthal sectors of `base`, adds isotropic Gaussian
/// noise truncated at 4 sigma and moves every scan but the first by a random
/// rigid motion. The sector order is shuffled. Throws InvalidOverlap outside
/// [0.3, 0.95] and InvalidArgument for fewer than two scans or a base below
/// 5000 points.
SynthScans synth_generate(const PointCloud& base, const SynthParams& params);

/// Random rotation (uniform axis, angle up to max_angle) and translation (up to max_translation).
RigidTransformd random_rigid_transform(std::uint64_t seed, double max_angle, double max_translation);

}  // namespace mvreg
