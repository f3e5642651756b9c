#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "mvreg/augmentation.hpp"
#include "mvreg/pairwise.hpp"
#include "mvreg/reliability.hpp"

namespace mvreg {

struct MultiviewConfig {
    PairwiseConfig pairwise;
    AugmentOptions augment;
    /// Scan that fixes the output frame.
    std::size_t reference = 0;

    void validate() const;
};

enum class ScanStatus { reference, registered, unplaced };

const char* to_string(ScanStatus s);

/// One register_pair invocation and its reliability verdict.
struct Attempt {
    std::size_t scan = 0;
    int pass = 0;
    bool aligned = false;
    bool reliable = false;
    double tmse = 0.0;
    double xi = 0.0;
    double psi = 0.0;
    /// Reliability state the verdict was taken against.
    double threshold = 0.0;
    double m_tmse = 0.0;
    double d_o = 0.0;
    double seconds = 0.0;
};

struct ScanRecord {
    ScanStatus status = ScanStatus::unplaced;
    /// Maps the scan into the reference frame; identity when unplaced.
    RigidTransformd transform;
    double tmse = 0.0;
    /// Pass in which the scan was placed; 0 for the reference.
    int pass = 0;
};

struct StageSeconds {
    double prepare = 0.0;
    double pairwise = 0.0;
    double augmentation = 0.0;
    double total = 0.0;
};

struct MultiviewResult {
    std::vector<ScanRecord> scans;
    std::vector<Attempt> attempts;
    std::vector<std::size_t> placed_per_pass;
    std::vector<std::size_t> unplaced;
    std::size_t reference = 0;
    ReliabilityState reliability;
    ModelState model;
    StageSeconds seconds;

    bool stalled() const { return !unplaced.empty(); }
    std::size_t invocations() const { return attempts.size(); }
    std::vector<RigidTransformd> transforms() const;
};

/// A pass placed no scan while some were pending. Carries the partial result.
class RegistrationStalled : public Error {
public:
    explicit RegistrationStalled(std::shared_ptr<const MultiviewResult> partial);
    const MultiviewResult& result() const { return *partial_; }

private:
    std::shared_ptr<const MultiviewResult> partial_;
};

/// Registers every scan against a model grown from the reference scan.
/// Each pass tries the pending scans in input order; a reliable result is
/// accepted, fused into the model and removed from the pending list.
/// Throws RegistrationStalled after a pass that places nothing.
MultiviewResult register_all(const std::vector<PointCloud>& scans, const MultiviewConfig& config);

struct SessionReport {
    std::size_t scan_count = 0;
    std::size_t reference = 0;
    std::size_t reliable_registrations = 0;
    std::size_t invocations = 0;
    std::size_t passes = 0;
    std::vector<std::size_t> placed_per_pass;
    std::vector<std::size_t> unplaced;
    std::vector<ScanStatus> status;
    /// TMSE of each accepted registration, in acceptance order.
    std::vector<double> tmse_history;
    std::size_t model_points = 0;
    StageSeconds seconds;
};

SessionReport session_report(const MultiviewResult& result);

}  // namespace mvreg
