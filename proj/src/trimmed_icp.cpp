#include "mvreg/trimmed_icp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mvreg {

void TricpParams::validate() const {
    if (!(xi_min > 0.0 && xi_min < 1.0)) throw InvalidArgument("TricpParams: xi_min must lie in (0, 1)");
    if (max_iterations < 1) throw InvalidArgument("TricpParams: max_iterations must be >= 1");
    if (!(epsilon > 0.0)) throw InvalidArgument("TricpParams: epsilon must be positive");
    if (!std::isfinite(lambda)) throw InvalidArgument("TricpParams: lambda must be finite");
}

double tmse(std::span<const Correspondence> subset) {
    if (subset.empty()) throw EmptySubset();
    double sum = 0.0;
    for (const auto& c : subset) sum += c.distance * c.distance;
    return sum / static_cast<double>(subset.size());
}

double tmse(const PointCloud& data, const PointCloud& model, const RigidTransformd& T,
            std::span<const Correspondence> subset) {
    if (subset.empty()) throw EmptySubset();
    double sum = 0.0;
    for (const auto& c : subset) {
        const Point3 p = apply(T, data.col(static_cast<Eigen::Index>(c.data_index)));
        sum += (p - model.col(static_cast<Eigen::Index>(c.model_index))).squaredNorm();
    }
    return sum / static_cast<double>(subset.size());
}

double psi(double xi, double tmse, double lambda) {
    return tmse / std::pow(xi, 1.0 + lambda);
}

std::vector<Correspondence> correspondence_step(const PointCloud& data, const SpatialIndex& model,
                                                const RigidTransformd& T) {
    std::vector<Correspondence> out(static_cast<std::size_t>(data.cols()));
    for (Eigen::Index i = 0; i < data.cols(); ++i) {
        const Neighbor nb = model.nearest(apply(T, data.col(i)));
        out[static_cast<std::size_t>(i)] = {static_cast<std::size_t>(i), nb.index, nb.distance};
    }
    return out;
}

OverlapEstimate overlap_step(std::vector<Correspondence> corr, const TricpParams& params) {
    if (corr.empty()) throw EmptySubset();
    std::stable_sort(corr.begin(), corr.end(), [](const Correspondence& a, const Correspondence& b) {
        return a.distance < b.distance || (a.distance == b.distance && a.data_index < b.data_index);
    });
    const std::size_t n = corr.size();
    const auto first = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(params.xi_min * static_cast<double>(n))));

    double sum = 0.0;
    std::size_t best_count = n;
    double best_psi = std::numeric_limits<double>::infinity();
    double best_tmse = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
        sum += corr[k - 1].distance * corr[k - 1].distance;
        if (k < first) continue;
        const double e = sum / static_cast<double>(k);
        const double p = psi(static_cast<double>(k) / static_cast<double>(n), e, params.lambda);
        if (p <= best_psi) {
            best_psi = p;
            best_count = k;
            best_tmse = e;
        }
    }
    OverlapEstimate out;
    out.xi = static_cast<double>(best_count) / static_cast<double>(n);
    out.tmse = best_tmse;
    out.psi = best_psi;
    corr.resize(best_count);
    out.subset = std::move(corr);
    return out;
}

namespace {

RigidTransformd fit_subset(const PointCloud& data, const PointCloud& model, std::span<const Correspondence> subset) {
    PointCloud src(3, static_cast<Eigen::Index>(subset.size()));
    PointCloud dst(3, static_cast<Eigen::Index>(subset.size()));
    for (std::size_t k = 0; k < subset.size(); ++k) {
        src.col(static_cast<Eigen::Index>(k)) = data.col(static_cast<Eigen::Index>(subset[k].data_index));
        dst.col(static_cast<Eigen::Index>(k)) = model.col(static_cast<Eigen::Index>(subset[k].model_index));
    }
    return estimate_rigid_transform(src, dst);
}

}  // namespace

TricpResult trimmed_icp(const PointCloud& data, const SpatialIndex& model, const RigidTransformd& initial,
                        const TricpParams& params) {
    params.validate();
    if (data.cols() == 0) throw EmptyCloud();

    TricpResult res;
    res.transform = initial;
    double prev = std::numeric_limits<double>::infinity();
    bool converged = false;
    OverlapEstimate est;

    for (int k = 1; k <= params.max_iterations; ++k) {
        est = overlap_step(correspondence_step(data, model, res.transform), params);
        res.psi_history.push_back(est.psi);
        res.iterations = k;
        if (std::abs(est.psi - prev) < params.epsilon) {
            converged = true;
            break;
        }
        prev = est.psi;
        if (est.subset.size() < 3) throw DegenerateConfiguration("trimmed_icp: trimmed subset below 3 points");
        res.transform = fit_subset(data, model.points(), est.subset);
    }
    if (!converged) {
        est = overlap_step(correspondence_step(data, model, res.transform), params);
    }
    res.xi = est.xi;
    res.tmse = est.tmse;
    res.psi = est.psi;
    res.subset = std::move(est.subset);
    return res;
}

}  // namespace mvreg
