#include "mvreg/multiview.hpp"

#include <chrono>
#include <string>

namespace mvreg {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

}  // namespace

void MultiviewConfig::validate() const {
    pairwise.validate();
    if (!(augment.descriptor_gate_factor > 0.0)) throw InvalidArgument("descriptor_gate_factor must be positive");
}

const char* to_string(ScanStatus s) {
    switch (s) {
        case ScanStatus::reference: return "reference";
        case ScanStatus::registered: return "registered";
        case ScanStatus::unplaced: return "unplaced";
    }
    return "unknown";
}

std::vector<RigidTransformd> MultiviewResult::transforms() const {
    std::vector<RigidTransformd> out;
    out.reserve(scans.size());
    for (const auto& s : scans) out.push_back(s.transform);
    return out;
}

RegistrationStalled::RegistrationStalled(std::shared_ptr<const MultiviewResult> partial)
    : Error("registration stalled with " + std::to_string(partial->unplaced.size()) + " unplaced scan(s)"),
      partial_(std::move(partial)) {}

MultiviewResult register_all(const std::vector<PointCloud>& scans, const MultiviewConfig& config) {
    config.validate();
    if (scans.size() < 2) throw InvalidArgument("register_all: need at least two scans");
    if (config.reference >= scans.size()) throw InvalidArgument("register_all: reference index out of range");
    for (std::size_t i = 0; i < scans.size(); ++i) {
        if (scans[i].cols() < static_cast<Eigen::Index>(config.pairwise.min_points)) {
            throw TooFewPoints("register_all: scan " + std::to_string(i) + " has too few points");
        }
    }
    const auto t_start = Clock::now();

    MultiviewResult res;
    res.reference = config.reference;
    res.scans.resize(scans.size());
    res.scans[config.reference].status = ScanStatus::reference;

    auto t0 = Clock::now();
    const ScaleSet scales = default_scales(scans[config.reference], config.pairwise);
    std::vector<ScanData> prepared;
    prepared.reserve(scans.size());
    for (const auto& s : scans) prepared.push_back(prepare_scan(s, scales, config.pairwise));
    res.model = make_model(prepared[config.reference], scales);
    res.reliability.d_o = res.model.resolution;
    res.seconds.prepare = since(t0);

    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < scans.size(); ++i) {
        if (i != config.reference) pending.push_back(i);
    }

    int pass = 0;
    while (!pending.empty()) {
        ++pass;
        std::size_t placed = 0;
        std::vector<std::size_t> still;
        for (std::size_t i : pending) {
            Attempt at;
            at.scan = i;
            at.pass = pass;
            at.threshold = reliability_threshold(res.reliability);
            at.m_tmse = res.reliability.m_tmse;
            at.d_o = res.reliability.d_o;

            t0 = Clock::now();
            const PairwiseOutcome out = register_pair(prepared[i], res.model, config.pairwise);
            at.seconds = since(t0);
            res.seconds.pairwise += at.seconds;

            if (out.result) {
                at.aligned = true;
                at.tmse = out.result->tmse;
                at.xi = out.result->xi;
                at.psi = out.result->psi;
                at.reliable = is_reliable(at.tmse, res.reliability);
            }
            res.attempts.push_back(at);
            if (!at.reliable) {
                still.push_back(i);
                continue;
            }

            ++placed;
            const RigidTransformd& T = out.result->transform;
            res.scans[i] = {ScanStatus::registered, T, at.tmse, pass};
            t0 = Clock::now();
            res.model = augment_model(res.model, prepared[i], T, config.pairwise.tricp(res.model.diagonal()),
                                      config.augment)
                            .model;
            res.reliability = update_resolution(record_reliable(res.reliability, at.tmse), res.model.full);
            res.seconds.augmentation += since(t0);
        }
        res.placed_per_pass.push_back(placed);
        pending = std::move(still);
        if (placed == 0) break;
    }
    res.unplaced = pending;
    res.seconds.total = since(t_start);
    if (res.stalled()) throw RegistrationStalled(std::make_shared<const MultiviewResult>(std::move(res)));
    return res;
}

SessionReport session_report(const MultiviewResult& result) {
    SessionReport r;
    r.scan_count = result.scans.size();
    r.reference = result.reference;
    r.invocations = result.invocations();
    r.passes = result.placed_per_pass.size();
    r.placed_per_pass = result.placed_per_pass;
    r.unplaced = result.unplaced;
    for (const auto& s : result.scans) r.status.push_back(s.status);
    for (const auto& a : result.attempts) {
        if (!a.reliable) continue;
        ++r.reliable_registrations;
        r.tmse_history.push_back(a.tmse);
    }
    r.model_points = result.model.size();
    r.seconds = result.seconds;
    return r;
}

}  // namespace mvreg
