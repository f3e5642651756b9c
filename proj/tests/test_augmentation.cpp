#include "doctest.h"

#include <set>

#include "mvreg/augmentation.hpp"
#include "mvreg/evaluation.hpp"
#include "mvreg/reliability.hpp"
#include "oracles.hpp"

using namespace mvreg;

namespace {

MultiScaleDescriptor descriptor(std::initializer_list<double> v, Eigen::Vector3d n) {
    MultiScaleDescriptor d;
    d.values = Eigen::Map<const Eigen::VectorXd>(v.begin(), static_cast<Eigen::Index>(v.size()));
    d.sparse.assign(v.size() / 3, false);
    d.normal = n.normalized();
    return d;
}

PairwiseConfig small_config() {
    PairwiseConfig c;
    c.descriptor_frequency = 10;
    return c;
}

}  // namespace

TEST_CASE("partition_overlap") {
    SUBCASE("bijective full overlap") {
        std::vector<Correspondence> t;
        for (std::size_t i = 0; i < 5; ++i) t.push_back({i, 4 - i, 0.0});
        const OverlapPartition p = partition_overlap(5, 5, t);
        CHECK(p.q_rest.empty());
        CHECK(p.p_rest.empty());
        CHECK(p.fused_count() == 5);
    }
    SUBCASE("empty subset") {
        const OverlapPartition p = partition_overlap(4, 6, {});
        CHECK(p.q_rest.size() == 6);
        CHECK(p.p_rest.size() == 4);
        CHECK(p.fused_count() == 0);
    }
    SUBCASE("set algebra on random subsets") {
        std::mt19937_64 rng(61);
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t nd = 1 + rng() % 60, nm = 1 + rng() % 60;
            std::vector<Correspondence> t;
            std::set<std::size_t> dsel, msel;
            for (std::size_t i = 0; i < nd; ++i) {
                if (rng() % 3 == 0) continue;
                const std::size_t j = rng() % nm;
                t.push_back({i, j, 0.0});
                dsel.insert(i);
                msel.insert(j);
            }
            std::shuffle(t.begin(), t.end(), rng);
            const OverlapPartition p = partition_overlap(nd, nm, t);
            CHECK(std::vector<std::size_t>(dsel.begin(), dsel.end()) == p.p_overlap);
            CHECK(std::vector<std::size_t>(msel.begin(), msel.end()) == p.q_overlap);
            CHECK(p.p_overlap.size() + p.p_rest.size() == nd);
            CHECK(p.q_overlap.size() + p.q_rest.size() == nm);
            for (std::size_t i : p.p_rest) CHECK(dsel.count(i) == 0);
            for (std::size_t j : p.q_rest) CHECK(msel.count(j) == 0);
            CHECK(p.pairing.size() == p.p_overlap.size());
            CHECK(std::is_sorted(p.pairing.begin(), p.pairing.end()));
        }
    }
    const std::vector<Correspondence> twice{{0, 0, 0.0}, {0, 1, 0.0}};
    CHECK_THROWS_AS(partition_overlap(2, 2, twice), InvalidArgument);
    const std::vector<Correspondence> outside{{0, 5, 0.0}};
    CHECK_THROWS_AS(partition_overlap(2, 2, outside), InvalidArgument);
}

TEST_CASE("fuse_overlap") {
    PointCloud p(3, 2), q(3, 2);
    p << 0, 1, 0, 1, 0, 1;
    q << 2, 1, 0, 1, 0, 1;
    const std::vector<std::pair<std::size_t, std::size_t>> pairing{{0, 0}, {1, 1}};
    const PointCloud f = fuse_overlap(pairing, p, q);
    CHECK(f.col(0) == Point3(1, 0, 0));
    CHECK(f.col(1) == Point3(1, 1, 1));

    std::mt19937_64 rng(62);
    for (int trial = 0; trial < 50; ++trial) {
        const PointCloud a = oracle::random_cloud(rng, 30, 10.0);
        const PointCloud b = oracle::random_cloud(rng, 20, 10.0);
        std::vector<std::pair<std::size_t, std::size_t>> pr;
        for (std::size_t i = 0; i < 30; ++i) pr.emplace_back(i, rng() % 20);
        const PointCloud m = fuse_overlap(pr, a, b);
        for (std::size_t k = 0; k < pr.size(); ++k) {
            const Point3 x = a.col(static_cast<Eigen::Index>(pr[k].first));
            const Point3 y = b.col(static_cast<Eigen::Index>(pr[k].second));
            const Point3 f2 = m.col(static_cast<Eigen::Index>(k));
            CHECK((f2 - Point3((x(0) + y(0)) / 2, (x(1) + y(1)) / 2, (x(2) + y(2)) / 2)).norm() <= 1e-12);
            CHECK(std::abs((f2 - x).norm() + (f2 - y).norm() - (x - y).norm()) <= 1e-12);
        }
    }
}

TEST_CASE("merge_descriptor") {
    const MultiScaleDescriptor a = descriptor({0.5, 0.3, 0.2, 0.6, 0.3, 0.1}, {0, 0, 1});
    SUBCASE("identical under identity") {
        const MultiScaleDescriptor m = merge_descriptor(a, a, Eigen::Matrix3d::Identity());
        CHECK((m.values - a.values).norm() <= 1e-15);
        CHECK((m.normal - a.normal).norm() <= 1e-15);
    }
    SUBCASE("per-scale sums and order are kept") {
        const MultiScaleDescriptor b = descriptor({0.34, 0.33, 0.33, 0.9, 0.05, 0.05}, {1, 0, 0});
        const MultiScaleDescriptor m = merge_descriptor(a, b, Eigen::Matrix3d::Identity());
        for (int l = 0; l < 2; ++l) {
            const auto s = m.values.segment<3>(3 * l);
            CHECK(std::abs(s.sum() - 1.0) <= 1e-9);
            CHECK(s(0) >= s(1));
            CHECK(s(1) >= s(2));
        }
        CHECK(m.normal.norm() == doctest::Approx(1.0));
    }
    SUBCASE("antipodal normals") {
        const MultiScaleDescriptor b = descriptor({0.5, 0.3, 0.2, 0.6, 0.3, 0.1}, {0, 0, -1});
        const MultiScaleDescriptor m = merge_descriptor(a, b, Eigen::Matrix3d::Identity());
        CHECK(m.normal.allFinite());
        CHECK(m.normal.norm() == doctest::Approx(1.0));
        CHECK(std::abs(m.normal.z()) == doctest::Approx(1.0));
    }
    SUBCASE("data normal is rotated") {
        const Eigen::Matrix3d R = Eigen::AngleAxisd(M_PI / 2, Eigen::Vector3d::UnitX()).toRotationMatrix();
        const MultiScaleDescriptor b = descriptor({0.5, 0.3, 0.2, 0.6, 0.3, 0.1}, {0, -1, 0});
        const MultiScaleDescriptor m = merge_descriptor(a, b, R);
        CHECK((m.normal - Eigen::Vector3d(0, -1, 0)).norm() <= 1e-12);
    }
    SUBCASE("sparse scale takes the dense side") {
        MultiScaleDescriptor s = descriptor({1.0 / 3, 1.0 / 3, 1.0 / 3, 0.7, 0.2, 0.1}, {0, 0, 1});
        s.sparse = {true, false};
        const MultiScaleDescriptor m = merge_descriptor(s, a, Eigen::Matrix3d::Identity());
        CHECK(m.values.segment<3>(0) == a.values.segment<3>(0));
        CHECK(m.sparse == std::vector<bool>{false, false});
    }
    const MultiScaleDescriptor short_one = descriptor({0.5, 0.3, 0.2}, {0, 0, 1});
    CHECK_THROWS_AS(merge_descriptor(a, short_one, Eigen::Matrix3d::Identity()), LengthMismatch);

    const DescriptorList data{a, std::nullopt, std::nullopt};
    const DescriptorList model{std::nullopt, a, std::nullopt};
    const std::vector<std::pair<std::size_t, std::size_t>> pairing{{0, 0}, {1, 1}, {2, 2}};
    const DescriptorList m = merge_descriptors(data, model, Eigen::Matrix3d::Identity(), pairing);
    CHECK(m[0].has_value());
    CHECK(m[1].has_value());
    CHECK_FALSE(m[2].has_value());
}

TEST_CASE("augment_model counting") {
    const PairwiseConfig cfg = small_config();
    const PointCloud base = make_blob(6000, 9);
    const ScaleSet scales = default_scales(base, cfg);

    SUBCASE("exact copy under identity") {
        const ScanData scan = prepare_scan(base, scales, cfg);
        const ModelState model = make_model(scan, scales);
        const AugmentResult r = augment_model(model, scan, RigidTransformd::Identity(), cfg.tricp(model.diagonal()));
        CHECK(r.model.size() == model.size());
        CHECK(r.partition.q_rest.empty());
        CHECK(r.partition.p_rest.empty());
        CHECK(r.model.full == model.full);
        CHECK(r.model.described.size() == model.described.size());
    }
    SUBCASE("randomized reliable registrations") {
        std::mt19937_64 rng(63);
        for (int trial = 0; trial < 10; ++trial) {
            const oracle::CropPair cp = oracle::crop_pair(base, 0.5 + 0.04 * trial, 0.3, 20.0, rng);
            const ScanData mscan = prepare_scan(cp.model, scales, cfg);
            const ModelState model = make_model(mscan, scales);
            const ScanData scan = prepare_scan(cp.data, scales, cfg);
            const TricpParams tp = cfg.tricp(model.diagonal());
            const OverlapEstimate est = overlap_step(correspondence_step(scan.full, *model.full_index, cp.truth), tp);
            ReliabilityState rs;
            rs.d_o = model.resolution;
            REQUIRE(is_reliable(est.tmse, rs));

            const AugmentResult r = augment_model(model, scan, cp.truth, est.subset);
            const OverlapPartition& p = r.partition;
            CHECK(r.model.size() == p.q_rest.size() + p.fused_count() + p.p_rest.size());
            CHECK(r.model.size() == model.size() + scan.full.cols() - p.q_overlap.size());
            CHECK(p.fused_count() == est.subset.size());
            const OverlapPartition& d = r.descriptor_partition;
            CHECK(r.model.described.size() == d.q_rest.size() + d.fused_count() + d.p_rest.size());
            CHECK(r.model.described.descriptors.size() == r.model.described.size());
            for (const auto& desc : r.model.described.descriptors) {
                if (!desc) continue;
                for (int l = 0; l < 3; ++l) CHECK(std::abs(desc->values.segment<3>(3 * l).sum() - 1.0) <= 1e-9);
            }
            CHECK(r.model.size() <= static_cast<std::size_t>(model.size() + scan.full.cols()));
            CHECK(r.model.size() >= model.size());

            AugmentOptions rude;
            rude.rude = true;
            const AugmentResult rr = augment_model(model, scan, cp.truth, tp, rude);
            CHECK(rr.model.size() == model.size() + static_cast<std::size_t>(scan.full.cols()));
            CHECK(rr.model.described.size() == model.described.size() + scan.described.size());
        }
    }
    SUBCASE("disjoint pair keeps nearly everything") {
        const ScanData mscan = prepare_scan(base, scales, cfg);
        const ModelState model = make_model(mscan, scales);
        PointCloud far = make_blob(6000, 10);
        far.row(0).array() += 10.0 * model.diagonal();
        const ScanData scan = prepare_scan(far, scales, cfg);
        const AugmentResult r = augment_model(model, scan, RigidTransformd::Identity(), cfg.tricp(model.diagonal()));
        CHECK(r.model.size() >= static_cast<std::size_t>(0.9 * static_cast<double>(model.size() + 6000)));
    }
}
