#include "mvreg/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Geometry>

namespace mvreg {

DescribedCloud DescribedCloud::make(PointCloud points, DescriptorList descriptors) {
    if (static_cast<std::size_t>(points.cols()) != descriptors.size()) {
        throw InvalidArgument("DescribedCloud: descriptor count does not match point count");
    }
    DescribedCloud out;
    out.points = std::move(points);
    out.descriptors = std::move(descriptors);
    out.index = std::make_shared<const SpatialIndex>(out.points);
    out.resolution = out.size() >= 2 ? estimate_resolution(*out.index) : 0.0;
    return out;
}

std::vector<SeedMatch> seed_matches(const DescriptorList& data, const DescriptorList& model) {
    std::vector<std::size_t> model_valid;
    for (std::size_t j = 0; j < model.size(); ++j) {
        if (model[j]) model_valid.push_back(j);
    }
    if (model_valid.empty()) throw NoValidDescriptors("seed_matches: model side has no valid descriptor");

    std::vector<SeedMatch> seeds;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!data[i]) continue;
        SeedMatch best{i, model_valid.front(), std::numeric_limits<double>::infinity()};
        for (std::size_t j : model_valid) {
            const double d = (data[i]->values - model[j]->values).squaredNorm();
            if (d < best.d_distance) {
                best.d_distance = d;
                best.model_idx = j;
            }
        }
        best.d_distance = std::sqrt(best.d_distance);
        seeds.push_back(best);
    }
    if (seeds.empty()) throw NoValidDescriptors("seed_matches: data side has no valid descriptor");
    std::stable_sort(seeds.begin(), seeds.end(), [](const SeedMatch& a, const SeedMatch& b) {
        return a.d_distance < b.d_distance || (a.d_distance == b.d_distance && a.data_idx < b.data_idx);
    });
    return seeds;
}

namespace {

constexpr std::size_t kUnmatched = std::numeric_limits<std::size_t>::max();

std::optional<RigidTransformd> fit(const std::vector<Correspondence>& matches, const PointCloud& data,
                                   const PointCloud& model) {
    PointCloud src(3, static_cast<Eigen::Index>(matches.size()));
    PointCloud dst(3, static_cast<Eigen::Index>(matches.size()));
    for (std::size_t k = 0; k < matches.size(); ++k) {
        src.col(static_cast<Eigen::Index>(k)) = data.col(static_cast<Eigen::Index>(matches[k].data_index));
        dst.col(static_cast<Eigen::Index>(k)) = model.col(static_cast<Eigen::Index>(matches[k].model_index));
    }
    try {
        return estimate_rigid_transform(src, dst);
    } catch (const DegenerateConfiguration&) {
        return std::nullopt;
    }
}

constexpr int kBootstrapSteps = 72;

// The seed pair fixes a rotation up to a spin about its normal (and the
// normal's sign). Each spin is scored by how closely the seed's data
// neighbors land on the model's tangent planes with agreeing normals.
std::optional<RigidTransformd> bootstrap(const SeedMatch& seed, const DescribedCloud& data, const DescribedCloud& model,
                                         const PropagationThresholds& th) {
    const Point3 py = data.points.col(static_cast<Eigen::Index>(seed.data_idx));
    const Point3 qx = model.points.col(static_cast<Eigen::Index>(seed.model_idx));
    const Eigen::Vector3d& ny = data.descriptors[seed.data_idx]->normal;
    std::vector<std::size_t> neighbors;
    {
        const auto all = data.index->radius_search(py, th.bootstrap_radius > 0.0 ? th.bootstrap_radius : th.rho);
        const std::size_t stride = std::max<std::size_t>(1, (all.size() + th.bootstrap_samples - 1) /
                                                                std::max<std::size_t>(th.bootstrap_samples, 1));
        for (std::size_t k = 0; k < all.size(); k += stride) neighbors.push_back(all[k]);
    }
    const double plane_tol = 0.5 * std::max(model.resolution, std::numeric_limits<double>::min());

    std::optional<RigidTransformd> best;
    double best_score = 0.0;
    for (double sign : {1.0, -1.0}) {
        const Eigen::Vector3d nx = sign * model.descriptors[seed.model_idx]->normal;
        const Eigen::Matrix3d align = Eigen::Quaterniond::FromTwoVectors(ny, nx).toRotationMatrix();
        for (int k = 0; k < kBootstrapSteps; ++k) {
            const double angle = 2.0 * std::numbers::pi * k / kBootstrapSteps;
            RigidTransformd T;
            T.R = Eigen::AngleAxisd(angle, nx).toRotationMatrix() * align;
            T.t = qx - T.R * py;
            double score = 0.0;
            for (std::size_t yn : neighbors) {
                if (yn == seed.data_idx || !data.descriptors[yn]) continue;
                const auto nb = model.index->nearest(apply(T, Point3(data.points.col(static_cast<Eigen::Index>(yn)))));
                if (!(nb.distance < th.tau_len) || !model.descriptors[nb.index]) continue;
                const auto& dy = *data.descriptors[yn];
                const auto& dx = *model.descriptors[nb.index];
                const double dd = (dy.values - dx.values).norm();
                if (!(dd < th.tau_d) || !(unsigned_angle(T.R * dy.normal, dx.normal) < th.tau_n)) continue;
                const Point3 qn = model.points.col(static_cast<Eigen::Index>(nb.index));
                const double off_plane = std::abs(dx.normal.dot(apply(T, Point3(data.points.col(static_cast<Eigen::Index>(yn)))) - qn));
                score += std::max(0.0, 1.0 - off_plane / plane_tol) +
                         (1.0 - unsigned_angle(T.R * dy.normal, dx.normal) / th.tau_n);
            }
            if (score > best_score) {
                best_score = score;
                best = T;
            }
        }
    }
    return best;
}

}  // namespace

MatchSet propagate(const SeedMatch& seed, const DescribedCloud& data, const DescribedCloud& model,
                   const PropagationThresholds& th) {
    if (seed.data_idx >= data.size() || seed.model_idx >= model.size()) {
        throw InvalidArgument("propagate: seed index out of range");
    }
    if (!data.descriptors[seed.data_idx] || !model.descriptors[seed.model_idx]) throw NullDescriptor();
    const PointCloud& P = data.points;
    const PointCloud& Q = model.points;

    MatchSet set;
    set.seed = seed;
    std::vector<std::size_t> data_partner(data.size(), kUnmatched);
    std::vector<bool> model_used(model.size(), false);

    auto accept = [&](std::size_t y, std::size_t x) {
        data_partner[y] = x;
        model_used[x] = true;
        const double d = (P.col(static_cast<Eigen::Index>(y)) - Q.col(static_cast<Eigen::Index>(x))).norm();
        set.matches.push_back({y, x, d});
    };

    accept(seed.data_idx, seed.model_idx);
    std::deque<std::pair<std::size_t, std::size_t>> frontier{{seed.data_idx, seed.model_idx}};

    std::optional<RigidTransformd> estimate = bootstrap(seed, data, model, th);
    std::size_t next_refit = std::max<std::size_t>(th.refit_min, 3);

    while (!frontier.empty()) {
        const auto [y, x] = frontier.front();
        frontier.pop_front();
        ++set.visited;
        const Point3 py = P.col(static_cast<Eigen::Index>(y));
        const Point3 qx = Q.col(static_cast<Eigen::Index>(x));
        const Eigen::Vector3d& ny_normal = data.descriptors[y]->normal;
        const Eigen::Vector3d& nx_normal = model.descriptors[x]->normal;
        const auto ny = data.index->radius_search(py, th.rho);
        std::vector<std::size_t> nx;
        if (!estimate) nx = model.index->radius_search(qx, th.rho);

        for (std::size_t yn : ny) {
            if (data_partner[yn] != kUnmatched || !data.descriptors[yn]) continue;
            const auto& dy = *data.descriptors[yn];
            const Point3 pyn = P.col(static_cast<Eigen::Index>(yn));
            const double len_y = (pyn - py).norm();

            std::size_t best = kUnmatched;
            double best_score = std::numeric_limits<double>::infinity();
            auto consider = [&](std::size_t xn, auto&& extra) {
                if (model_used[xn] || !model.descriptors[xn]) return;
                ++set.visited;
                const auto& dx = *model.descriptors[xn];
                const double dd = (dy.values - dx.values).norm();
                if (!(dd < th.tau_d)) return;
                const Point3 qxn = Q.col(static_cast<Eigen::Index>(xn));
                const double len_x = (qxn - qx).norm();
                if (len_x > th.rho) return;
                const double dlen = std::abs(len_y - len_x);
                if (!(dlen < th.tau_len)) return;
                const double score = extra(xn, dx, qxn, dd, dlen);
                if (score < best_score) {
                    best_score = score;
                    best = xn;
                }
            };

            if (estimate) {
                const Point3 predicted = apply(*estimate, pyn);
                const Eigen::Vector3d rotated_normal = estimate->R * dy.normal;
                for (std::size_t xn : model.index->radius_search(predicted, th.tau_len)) {
                    consider(xn, [&](std::size_t, const MultiScaleDescriptor& dx, const Point3& qxn, double, double) {
                        if (!(unsigned_angle(rotated_normal, dx.normal) < th.tau_n)) {
                            return std::numeric_limits<double>::infinity();
                        }
                        return (predicted - qxn).norm();
                    });
                }
            } else {
                const double turn_y = unsigned_angle(ny_normal, dy.normal);
                for (std::size_t xn : nx) {
                    // Without a rigid estimate, check rotation-invariant
                    // consistency against every pair accepted so far.
                    consider(xn, [&](std::size_t, const MultiScaleDescriptor& dx, const Point3& qxn, double dd,
                                     double dlen) {
                        const double inf = std::numeric_limits<double>::infinity();
                        if (!(std::abs(turn_y - unsigned_angle(nx_normal, dx.normal)) < th.tau_n)) return inf;
                        double worst = dlen;
                        for (const auto& m : set.matches) {
                            const double a = (pyn - P.col(static_cast<Eigen::Index>(m.data_index))).norm();
                            const double b = (qxn - Q.col(static_cast<Eigen::Index>(m.model_index))).norm();
                            worst = std::max(worst, std::abs(a - b));
                        }
                        if (!(worst < th.tau_len)) return inf;
                        return worst / th.tau_len + dd / th.tau_d;
                    });
                }
            }
            if (best == kUnmatched) continue;
            accept(yn, best);
            frontier.emplace_back(yn, best);
            if (set.matches.size() >= next_refit) {
                if (auto T = fit(set.matches, P, Q)) estimate = *T;
                next_refit = next_refit + (next_refit + 1) / 2;
            }
        }
    }
    return set;
}

std::optional<Consensus> ransac_consensus(const MatchSet& set, const PointCloud& data, const PointCloud& model,
                                          const RansacParams& params) {
    const std::size_t n = set.matches.size();
    if (n < 3 || n <= params.min_consensus) return std::nullopt;

    PointCloud src(3, static_cast<Eigen::Index>(n));
    PointCloud dst(3, static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) {
        src.col(static_cast<Eigen::Index>(k)) = data.col(static_cast<Eigen::Index>(set.matches[k].data_index));
        dst.col(static_cast<Eigen::Index>(k)) = model.col(static_cast<Eigen::Index>(set.matches[k].model_index));
    }
    const double tol2 = params.inlier_tol * params.inlier_tol;
    auto count_inliers = [&](const RigidTransformd& T) {
        const PointCloud moved = apply(T, src);
        return static_cast<std::size_t>(((moved - dst).colwise().squaredNorm().array() <= tol2).count());
    };

    std::mt19937_64 rng(params.seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::size_t best_count = 0;
    RigidTransformd best_T;
    int trials = 0;
    int needed = params.iterations;

    for (int it = 0; it < needed; ++it) {
        ++trials;
        std::size_t a = pick(rng), b = pick(rng), c = pick(rng);
        while (b == a) b = pick(rng);
        while (c == a || c == b) c = pick(rng);
        Eigen::Matrix3d s, d;
        s << src.col(static_cast<Eigen::Index>(a)), src.col(static_cast<Eigen::Index>(b)),
            src.col(static_cast<Eigen::Index>(c));
        d << dst.col(static_cast<Eigen::Index>(a)), dst.col(static_cast<Eigen::Index>(b)),
            dst.col(static_cast<Eigen::Index>(c));
        RigidTransformd T;
        try {
            T = estimate_rigid_transform(s, d);
        } catch (const DegenerateConfiguration&) {
            continue;
        }
        const std::size_t cnt = count_inliers(T);
        if (cnt > best_count) {
            best_count = cnt;
            best_T = T;
            if (params.confidence < 1.0) {
                const double w = static_cast<double>(cnt) / static_cast<double>(n);
                const double miss = 1.0 - w * w * w;
                if (miss <= 0.0) {
                    needed = it + 1;
                } else {
                    const double k = std::log(1.0 - params.confidence) / std::log(miss);
                    needed = std::min(params.iterations, static_cast<int>(std::ceil(k)));
                }
            }
        }
    }
    if (best_count <= params.min_consensus) return std::nullopt;

    Consensus out;
    out.trials = trials;
    out.inliers.seed = set.seed;
    out.inliers.visited = set.visited;
    PointCloud isrc(3, static_cast<Eigen::Index>(best_count));
    PointCloud idst(3, static_cast<Eigen::Index>(best_count));
    const PointCloud moved = apply(best_T, src);
    Eigen::Index k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if ((moved.col(static_cast<Eigen::Index>(i)) - dst.col(static_cast<Eigen::Index>(i))).squaredNorm() > tol2) continue;
        out.inliers.matches.push_back(set.matches[i]);
        isrc.col(k) = src.col(static_cast<Eigen::Index>(i));
        idst.col(k) = dst.col(static_cast<Eigen::Index>(i));
        ++k;
    }
    try {
        out.transform = estimate_rigid_transform(isrc, idst);
    } catch (const DegenerateConfiguration&) {
        return std::nullopt;
    }
    return out;
}

}  // namespace mvreg
