#include "mvreg/pairwise.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <Eigen/Geometry>

namespace mvreg {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    if (v.size() % 2 == 1) return v[mid];
    const double lower = *std::max_element(v.begin(), v.begin() + mid);
    return 0.5 * (lower + v[mid]);
}

}  // namespace

void PairwiseConfig::validate() const {
    if (descriptor_frequency < 1 || icp_frequency < 1) throw InvalidArgument("sampling frequencies must be >= 1");
    if (!(delta > 0.0 && delta <= 1.0)) throw InvalidArgument("delta must lie in (0, 1]");
    if (ransac_iterations < 1) throw InvalidArgument("ransac_iterations must be >= 1");
    if (!(ransac_confidence > 0.0 && ransac_confidence <= 1.0)) throw InvalidArgument("ransac_confidence must lie in (0, 1]");
    if (!(inlier_tol_factor > 0.0)) throw InvalidArgument("inlier_tol_factor must be positive");
    if (!(tau_d_factor > 0.0) || !(tau_n_degrees > 0.0) || !(tau_len_factor > 0.0)) {
        throw InvalidArgument("propagation thresholds must be positive");
    }
    if (rho_factor < 0.0) throw InvalidArgument("rho_factor must be >= 0");
    if (!(epsilon_relative > 0.0)) throw InvalidArgument("epsilon_relative must be positive");
    if (selection_iterations < 0) throw InvalidArgument("selection_iterations must be >= 0");
    if (!(restart_angle >= 0.0) || max_restart_rounds < 0) throw InvalidArgument("restart settings must be >= 0");
    tricp(1.0).validate();
}

TricpParams PairwiseConfig::tricp(double model_diagonal) const {
    TricpParams p;
    p.lambda = lambda;
    p.xi_min = xi_min;
    p.max_iterations = max_iterations;
    p.epsilon = epsilon_relative * std::max(model_diagonal * model_diagonal, std::numeric_limits<double>::min());
    return p;
}

ScanData prepare_scan(const PointCloud& cloud, const ScaleSet& scales, const PairwiseConfig& config) {
    if (cloud.cols() == 0) throw EmptyCloud();
    ScanData s;
    s.full = cloud;
    s.icp = downsample(cloud, config.icp_frequency);
    const SpatialIndex support(cloud);
    PointCloud keys = downsample(cloud, config.descriptor_frequency);
    DescriptorList desc = compute_all(support, keys, scales);
    s.described = DescribedCloud::make(std::move(keys), std::move(desc));
    return s;
}

ModelState make_model(PointCloud full, DescribedCloud described, const ScaleSet& scales) {
    ModelState m;
    m.full = std::move(full);
    m.full_index = std::make_shared<const SpatialIndex>(m.full);
    m.resolution = estimate_resolution(*m.full_index);
    m.described = std::move(described);
    m.scales = scales;
    return m;
}

ModelState make_model(const ScanData& scan, const ScaleSet& scales) {
    return make_model(scan.full, scan.described, scales);
}

ScaleSet default_scales(const PointCloud& reference, const PairwiseConfig& config) {
    ScaleSet s = ScaleSet::from_resolution(estimate_resolution(downsample(reference, config.descriptor_frequency)),
                                           config.scale_multipliers);
    if (config.normal_scale >= 0) s.normal_scale = static_cast<std::size_t>(config.normal_scale);
    s.validate();
    return s;
}

double quality(const RigidTransformd& T, const PointCloud& data, const SpatialIndex& model, const TricpParams& params) {
    return overlap_step(correspondence_step(data, model, T), params).psi;
}

std::size_t propagation_count(std::size_t n, double delta, bool full) {
    if (full) return n;
    // The small offset keeps products such as 0.3 * 10 from rounding up.
    const auto k = static_cast<std::size_t>(std::ceil(delta * static_cast<double>(n) - 1e-9));
    return std::clamp<std::size_t>(k, n == 0 ? 0 : 1, n);
}

PairwiseOutcome register_pair(const ScanData& data, const ModelState& model, const PairwiseConfig& config) {
    config.validate();
    if (data.full.cols() < static_cast<Eigen::Index>(config.min_points) || model.size() < config.min_points) {
        throw TooFewPoints("register_pair: clouds below the minimum point count");
    }
    PairwiseOutcome out;
    PairwiseStats& st = out.stats;

    std::vector<SeedMatch> seeds;
    try {
        seeds = seed_matches(data.described.descriptors, model.described.descriptors);
    } catch (const NoValidDescriptors&) {
        return out;
    }
    st.seeds_total = seeds.size();

    std::vector<double> dists;
    dists.reserve(seeds.size());
    for (const auto& s : seeds) dists.push_back(s.d_distance);

    const double d_o = model.described.resolution;
    PropagationThresholds th;
    th.tau_d = std::max(config.tau_d_factor * median(std::move(dists)), 1e-12);
    th.tau_n = config.tau_n_degrees * std::numbers::pi / 180.0;
    th.tau_len = config.tau_len_factor * d_o;
    th.rho = config.rho_factor > 0.0 ? config.rho_factor * d_o : model.scales.largest();
    th.refit_min = config.refit_min;

    RansacParams rp;
    rp.iterations = config.ransac_iterations;
    rp.inlier_tol = config.inlier_tol_factor * d_o;
    rp.min_consensus = config.min_consensus;
    rp.confidence = config.ransac_confidence;

    const std::size_t count = propagation_count(seeds.size(), config.delta, config.full_propagation);
    st.seeds_propagated = count;

    struct Candidate {
        RigidTransformd T;
        std::size_t rank;
    };
    std::vector<Candidate> candidates;

    auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < count; ++i) {
        const MatchSet set = propagate(seeds[i], data.described, model.described, th);
        st.propagation_visited += set.visited;
        st.match_set_sizes.push_back(set.matches.size());
        rp.seed = config.ransac_seed + i;
        auto cons = ransac_consensus(set, data.described.points, model.described.points, rp);
        if (!cons) continue;
        st.ransac_trials += static_cast<std::size_t>(cons->trials);
        st.consensus_sizes.push_back(cons->inliers.matches.size());
        candidates.push_back({cons->transform, i});
    }
    st.seconds_propagation = seconds_since(t0);
    st.candidates = candidates.size();
    if (candidates.empty()) return out;

    const TricpParams tp = config.tricp(model.diagonal());
    t0 = std::chrono::steady_clock::now();
    std::vector<double> q(candidates.size());
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        q[c] = quality(candidates[c].T, data.icp, *model.full_index, tp);
    }
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return q[a] < q[b]; });
    if (config.selection_iterations > 0) {
        if (config.selection_top > 0 && order.size() > config.selection_top) order.resize(config.selection_top);
        TricpParams short_tp = tp;
        short_tp.max_iterations = config.selection_iterations;
        for (std::size_t c : order) {
            try {
                candidates[c].T = trimmed_icp(data.icp, *model.full_index, candidates[c].T, short_tp).transform;
                q[c] = quality(candidates[c].T, data.icp, *model.full_index, tp);
            } catch (const DegenerateConfiguration&) {
                q[c] = std::numeric_limits<double>::infinity();
            }
        }
    }
    std::size_t best = order.front();
    for (std::size_t c : order) {
        if (q[c] < q[best]) best = c;
    }
    const double best_q = q[best];
    st.best_quality = best_q;
    st.seconds_selection = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    TricpResult icp;
    try {
        icp = trimmed_icp(data.icp, *model.full_index, candidates[best].T, tp);
    } catch (const DegenerateConfiguration&) {
        return out;
    }
    st.icp_iterations = icp.iterations;
    if (config.restart_angle > 0.0) {
        for (int round = 0; round < config.max_restart_rounds; ++round) {
            const Point3 c = apply(icp.transform, Point3(data.icp.rowwise().mean()));
            TricpResult best_restart;
            best_restart.psi = std::numeric_limits<double>::infinity();
            for (int axis = 0; axis < 6; ++axis) {
                Eigen::Vector3d dir = Eigen::Vector3d::Zero();
                dir(axis % 3) = axis < 3 ? 1.0 : -1.0;
                RigidTransformd kick;
                kick.R = Eigen::AngleAxisd(config.restart_angle, dir).toRotationMatrix();
                kick.t = c - kick.R * c;
                try {
                    TricpResult r = trimmed_icp(data.icp, *model.full_index, compose(kick, icp.transform), tp);
                    st.icp_iterations += r.iterations;
                    if (r.psi < best_restart.psi) best_restart = std::move(r);
                } catch (const DegenerateConfiguration&) {
                }
            }
            ++st.restart_rounds;
            if (!(best_restart.psi < icp.psi * (1.0 - 1e-3))) break;
            icp = std::move(best_restart);
            ++st.restarts_taken;
        }
    }
    st.seconds_icp = seconds_since(t0);

    PairwiseResult r;
    r.transform = icp.transform;
    r.xi = icp.xi;
    r.tmse = icp.tmse;
    r.psi = icp.psi;
    r.lambda = tp.lambda;
    r.subset = std::move(icp.subset);
    r.psi_history = std::move(icp.psi_history);
    out.result = std::move(r);
    return out;
}

}  // namespace mvreg
