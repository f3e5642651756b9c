#include "mvreg/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <Eigen/Geometry>

#include "mvreg/spatial_index.hpp"

namespace mvreg {

ErrorReport evaluate(const std::vector<RigidTransformd>& estimated, const std::vector<RigidTransformd>& ground_truth,
                     std::size_t reference) {
    if (estimated.size() != ground_truth.size()) {
        throw LengthMismatch("evaluate: " + std::to_string(estimated.size()) + " estimated vs " +
                             std::to_string(ground_truth.size()) + " ground-truth transforms");
    }
    ErrorReport rep;
    if (estimated.empty()) return rep;
    if (reference >= estimated.size()) throw InvalidArgument("evaluate: reference index out of range");

    const RigidTransformd est_ref = invert(estimated[reference]);
    const RigidTransformd gt_ref = invert(ground_truth[reference]);
    for (std::size_t i = 0; i < estimated.size(); ++i) {
        const RigidTransformd m = compose(est_ref, estimated[i]);
        const RigidTransformd g = compose(gt_ref, ground_truth[i]);
        rep.rotation_errors.push_back(rotation_error(m, g));
        rep.translation_errors.push_back(translation_error(m, g));
    }
    const auto n = static_cast<double>(estimated.size());
    rep.e_R = std::accumulate(rep.rotation_errors.begin(), rep.rotation_errors.end(), 0.0) / n;
    rep.e_t = std::accumulate(rep.translation_errors.begin(), rep.translation_errors.end(), 0.0) / n;
    return rep;
}

double measure_overlap(const PointCloud& a, const PointCloud& b, double tol) {
    if (a.cols() == 0 || b.cols() == 0) throw EmptyCloud();
    if (!(tol > 0.0)) throw InvalidArgument("measure_overlap: tol must be positive");
    const SpatialIndex index(b);
    std::size_t hit = 0;
    for (Eigen::Index i = 0; i < a.cols(); ++i) {
        if (index.nearest(a.col(i)).distance <= tol) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(a.cols());
}

PointCloud make_blob(std::size_t n_points, std::uint64_t seed, double radius) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    // Shape is fixed by the seed; sampling shares the stream afterwards.
    // Dents, bumps and the tilt terms keep the surface free of near symmetries.
    struct Bump {
        Eigen::Vector3d center;
        double height;
        double width;
    };
    std::vector<Bump> bumps;
    for (int k = 0; k < 40; ++k) {
        Eigen::Vector3d c(gauss(rng), gauss(rng), gauss(rng));
        bumps.push_back({c.normalized(), -0.1 + 0.3 * unit(rng), 0.01 + 0.04 * unit(rng)});
    }
    const Eigen::Vector3d stretch(1.0, 0.8, 0.65);
    const Eigen::Vector3d tilt = Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng)).normalized();
    const Eigen::Vector3d tilt2 = Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng)).normalized();

    PointCloud pts(3, static_cast<Eigen::Index>(n_points));
    for (std::size_t i = 0; i < n_points; ++i) {
        Eigen::Vector3d u(gauss(rng), gauss(rng), gauss(rng));
        u.normalize();
        double r = 1.0;
        for (const auto& b : bumps) r += b.height * std::exp(-(1.0 - u.dot(b.center)) / b.width);
        r += 0.05 * std::sin(3.0 * u.x() + 1.0) * std::cos(2.0 * u.y());
        r += 0.2 * u.dot(tilt) + 0.2 * u.dot(tilt2) * u.dot(tilt2);
        pts.col(static_cast<Eigen::Index>(i)) = radius * r * u.cwiseProduct(stretch);
    }
    return pts;
}

RigidTransformd random_rigid_transform(std::uint64_t seed, double max_angle, double max_translation) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Eigen::Vector3d axis(gauss(rng), gauss(rng), gauss(rng));
    axis.normalize();
    Eigen::Vector3d dir(gauss(rng), gauss(rng), gauss(rng));
    dir.normalize();
    RigidTransformd T;
    T.R = Eigen::AngleAxisd(max_angle * unit(rng), axis).toRotationMatrix();
    T.t = dir * (max_translation * unit(rng));
    return T;
}

SynthScans synth_generate(const PointCloud& base, const SynthParams& p) {
    if (p.n_scans < 2) throw InvalidArgument("synth_generate: need at least two scans");
    if (!(p.overlap >= 0.3 && p.overlap <= 0.95)) throw InvalidOverlap("synth_generate: overlap must lie in [0.3, 0.95]");
    if (base.cols() < 5000) throw InvalidArgument("synth_generate: base needs at least 5000 points");
    if (!(p.noise_sigma >= 0.0)) throw InvalidArgument("synth_generate: noise_sigma must be >= 0");

    constexpr double two_pi = 2.0 * std::numbers::pi;
    std::mt19937_64 rng(p.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    double step = two_pi / static_cast<double>(p.n_scans);
    double width = step / (1.0 - p.overlap);
    if (width > p.max_width) {
        width = p.max_width;
        step = width * (1.0 - p.overlap);
    }
    const double phase = two_pi * unit(rng);

    const Point3 centroid = base.rowwise().mean();
    const double diag = bbox_diagonal(base);
    std::normal_distribution<double> noise(0.0, p.noise_sigma * diag);

    std::vector<std::size_t> order(p.n_scans);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    SynthScans out;
    for (std::size_t s = 0; s < p.n_scans; ++s) {
        const std::size_t sector = order[s];
        const double center = phase + step * static_cast<double>(sector);
        std::vector<Eigen::Index> keep;
        for (Eigen::Index i = 0; i < base.cols(); ++i) {
            const double phi = std::atan2(base(1, i) - centroid.y(), base(0, i) - centroid.x());
            double d = std::fmod(phi - center, two_pi);
            if (d < -std::numbers::pi) d += two_pi;
            if (d > std::numbers::pi) d -= two_pi;
            if (std::abs(d) <= 0.5 * width) keep.push_back(i);
        }
        PointCloud scan(3, static_cast<Eigen::Index>(keep.size()));
        for (std::size_t k = 0; k < keep.size(); ++k) {
            Point3 q = base.col(keep[k]);
            if (p.noise_sigma > 0.0) {
                // Redrawn beyond 4 sigma so every point stays within that bound.
                Point3 e;
                do {
                    e = Point3(noise(rng), noise(rng), noise(rng));
                } while (e.norm() > 4.0 * noise.stddev());
                q += e;
            }
            scan.col(static_cast<Eigen::Index>(k)) = q;
        }
        RigidTransformd motion;
        if (s > 0) motion = random_rigid_transform(rng(), std::numbers::pi, diag);
        out.scans.push_back(apply(motion, scan));
        out.ground_truth.push_back(invert(motion));
        out.sector.push_back(sector);
    }
    return out;
}

}  // namespace mvreg
