#include "doctest.h"

#include "mvreg/spatial_index.hpp"
#include "oracles.hpp"

using namespace mvreg;

TEST_CASE("index construction") {
    CHECK_THROWS_AS(SpatialIndex(PointCloud(3, 0)), EmptyCloud);
    PointCloud bad(3, 2);
    bad << 0, 1, 0, std::nan(""), 0, 0;
    CHECK_THROWS_AS(SpatialIndex{bad}, InvalidArgument);

    PointCloud one(3, 1);
    one.col(0) = Point3(1, 2, 3);
    const SpatialIndex idx(one);
    const Neighbor nb = idx.nearest(Point3(1, 2, 5));
    CHECK(nb.index == 0);
    CHECK(nb.distance == doctest::Approx(2.0));
}

TEST_CASE("nearest agrees with a linear scan") {
    std::mt19937_64 rng(11);
    for (std::size_t n : {1u, 2u, 7u, 100u, 1000u}) {
        const PointCloud c = oracle::random_cloud(rng, n);
        const SpatialIndex idx(c);
        for (int q = 0; q < 500; ++q) {
            const Point3 p = oracle::random_point(rng, 1.5);
            const Neighbor got = idx.nearest(p);
            const Neighbor want = oracle::nearest(c, p);
            CHECK(got.index == want.index);
            CHECK(got.distance == want.distance);
        }
    }
}

TEST_CASE("nearest on indexed points, duplicates and ties") {
    std::mt19937_64 rng(12);
    PointCloud c = oracle::random_cloud(rng, 200);
    c.col(150) = c.col(20);
    const SpatialIndex idx(c);
    for (Eigen::Index i = 0; i < c.cols(); ++i) {
        const Neighbor nb = idx.nearest(c.col(i));
        CHECK(nb.distance == 0.0);
        CHECK(nb.index == (i == 150 ? 20u : static_cast<std::size_t>(i)));
    }

    PointCloud pair(3, 3);
    pair << 5, 1, -1, 5, 0, 0, 5, 0, 0;
    const SpatialIndex tie(pair);
    CHECK(tie.nearest(Point3::Zero()).index == 1);
}

TEST_CASE("nearest_beyond skips coincident points") {
    PointCloud c(3, 3);
    c << 0, 0, 3, 0, 0, 0, 0, 0, 0;
    const SpatialIndex idx(c);
    Neighbor nb;
    REQUIRE(idx.nearest_beyond(Point3::Zero(), 0.0, nb));
    CHECK(nb.index == 2);
    CHECK(nb.distance == 3.0);
    CHECK_FALSE(idx.nearest_beyond(Point3::Zero(), 3.0, nb));
}

TEST_CASE("radius_search agrees with a linear scan") {
    std::mt19937_64 rng(13);
    const PointCloud c = oracle::random_cloud(rng, 800);
    const SpatialIndex idx(c);
    std::uniform_real_distribution<double> ur(0.0, 0.8);
    for (int q = 0; q < 300; ++q) {
        const Point3 p = oracle::random_point(rng, 1.2);
        const double r = ur(rng);
        CHECK(idx.radius_search(p, r) == oracle::radius(c, p, r));
    }
    const auto all = idx.radius_search(Point3::Zero(), 2.0 * bbox_diagonal(c));
    CHECK(all.size() == 800);

    const auto g = oracle::grid(5, 5, 1.0);
    const SpatialIndex gi(g);
    CHECK(gi.radius_search(g.col(7), 0.5) == std::vector<std::size_t>{7});
}

TEST_CASE("estimate_resolution") {
    CHECK(estimate_resolution(oracle::grid(20, 30, 0.25)) == doctest::Approx(0.25).epsilon(1e-12));

    PointCloud two(3, 2);
    two << 0, 3, 0, 4, 0, 0;
    CHECK(estimate_resolution(two) == doctest::Approx(5.0));

    PointCloud single(3, 1);
    single.setZero();
    CHECK_THROWS_AS(estimate_resolution(single), TooFewPoints);
    PointCloud same(3, 3);
    same.setZero();
    CHECK_THROWS_AS(estimate_resolution(same), TooFewPoints);

    std::mt19937_64 rng(14);
    for (std::size_t n : {2u, 3u, 50u, 301u, 1000u}) {
        const PointCloud c = oracle::random_cloud(rng, n);
        CHECK(oracle::relative_gap(estimate_resolution(c), oracle::median_nn(c)) <= 1e-12);
        const RigidTransformd T = oracle::random_transform(rng, 3.0);
        CHECK(std::abs(estimate_resolution(apply(T, c)) - estimate_resolution(c)) < 1e-9);
    }
}

TEST_CASE("downsample") {
    std::mt19937_64 rng(15);
    const PointCloud c = oracle::random_cloud(rng, 1000);
    CHECK(downsample(c, 1) == c);
    const PointCloud d = downsample(c, 100);
    REQUIRE(d.cols() == 10);
    for (int k = 0; k < 10; ++k) CHECK(d.col(k) == c.col(100 * k));
    CHECK(downsample_indices(1000, 100).back() == 900);
    CHECK(downsample_indices(35947, 10).size() == 3595);
    CHECK(downsample(c, 7) == downsample(c, 7));
    CHECK_THROWS_AS(downsample(c, 0), InvalidArgument);
}
