#include "doctest.h"

#include "mvreg/evaluation.hpp"
#include "mvreg/multiview.hpp"
#include "oracles.hpp"

using namespace mvreg;

namespace {

MultiviewConfig test_config() {
    MultiviewConfig c;
    c.pairwise.descriptor_frequency = 10;
    c.pairwise.rho_factor = 8.0;
    return c;
}

void check_invariants(const MultiviewResult& r, const std::vector<PointCloud>& scans) {
    std::size_t total = 0, largest = 0;
    for (const auto& s : scans) {
        total += static_cast<std::size_t>(s.cols());
        largest = std::max(largest, static_cast<std::size_t>(s.cols()));
    }
    CHECK(r.model.size() <= total);
    CHECK(r.model.size() >= largest);
    CHECK(r.placed_per_pass.size() <= scans.size());
    for (const auto& a : r.attempts) {
        if (a.reliable) CHECK(a.tmse <= a.threshold);
        CHECK(a.threshold == std::max(2.0 * a.d_o, 1.5 * a.m_tmse));
    }
    CHECK(r.scans[r.reference].status == ScanStatus::reference);
    CHECK(r.scans[r.reference].transform.R == Eigen::Matrix3d::Identity());
    CHECK(r.scans[r.reference].transform.t == Point3::Zero());
}

}  // namespace

TEST_CASE("two identical scans") {
    const PointCloud scan = make_blob(8000, 21);
    const std::vector<PointCloud> scans{scan, scan};
    const MultiviewResult r = register_all(scans, test_config());
    CHECK(r.placed_per_pass == std::vector<std::size_t>{1});
    CHECK(rotation_error(r.scans[1].transform, RigidTransformd::Identity()) <= 1e-6);
    CHECK(r.scans[1].transform.t.norm() <= 1e-6 * bbox_diagonal(scan));
    check_invariants(r, scans);

    const SessionReport rep = session_report(r);
    CHECK(rep.reliable_registrations == 1);
    CHECK(rep.invocations == r.attempts.size());
    CHECK(rep.tmse_history.size() == 1);
    CHECK(rep.model_points == r.model.size());
    CHECK(rep.unplaced.empty());
}

TEST_CASE("three-scan ring with a non-default reference") {
    SynthParams sp;
    sp.n_scans = 3;
    sp.overlap = 0.6;
    sp.seed = 4;
    const SynthScans syn = synth_generate(make_blob(15000, 22), sp);
    MultiviewConfig cfg = test_config();
    cfg.reference = 1;
    const MultiviewResult r = register_all(syn.scans, cfg);
    const double diag = bbox_diagonal(syn.scans[0]);
    const ErrorReport e = evaluate(r.transforms(), syn.ground_truth, 1);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(e.rotation_errors[i] <= 1e-2);
        CHECK(e.translation_errors[i] <= 0.01 * diag);
    }
    CHECK(r.invocations() <= 2 * syn.scans.size());
    check_invariants(r, syn.scans);

    const SessionReport rep = session_report(r);
    std::size_t reliable = 0;
    for (const auto& a : r.attempts) reliable += a.reliable ? 1 : 0;
    CHECK(rep.reliable_registrations == reliable);
    CHECK(rep.reliable_registrations == 2);
    CHECK(rep.passes == r.placed_per_pass.size());
}

TEST_CASE("a disconnected scan stalls the session") {
    SynthParams sp;
    sp.n_scans = 2;
    sp.seed = 5;
    std::vector<PointCloud> scans = synth_generate(make_blob(12000, 23), sp).scans;
    PointCloud stranger = make_blob(6000, 99);
    stranger.row(0).array() += 5000.0;
    scans.push_back(stranger);
    try {
        register_all(scans, test_config());
        FAIL("expected RegistrationStalled");
    } catch (const RegistrationStalled& e) {
        const MultiviewResult& r = e.result();
        CHECK(r.unplaced == std::vector<std::size_t>{2});
        CHECK(r.scans[1].status == ScanStatus::registered);
        CHECK(r.scans[2].status == ScanStatus::unplaced);
        CHECK(r.placed_per_pass.back() == 0);
        const SessionReport rep = session_report(r);
        CHECK(rep.unplaced == std::vector<std::size_t>{2});
        CHECK(rep.status[2] == ScanStatus::unplaced);
        check_invariants(r, scans);
    }
}

TEST_CASE("register_all preconditions") {
    const PointCloud s = make_blob(6000, 24);
    CHECK_THROWS_AS(register_all({s}, test_config()), InvalidArgument);
    MultiviewConfig cfg = test_config();
    cfg.reference = 2;
    CHECK_THROWS_AS(register_all({s, s}, cfg), InvalidArgument);
    CHECK_THROWS_AS(register_all({s, make_blob(10, 1)}, test_config()), TooFewPoints);
    cfg = test_config();
    cfg.augment.descriptor_gate_factor = 0.0;
    CHECK_THROWS_AS(register_all({s, s}, cfg), InvalidArgument);
    CHECK(std::string(to_string(ScanStatus::unplaced)) == "unplaced");
}
