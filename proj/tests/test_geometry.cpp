#include "doctest.h"

#include "mvreg/geometry.hpp"
#include "oracles.hpp"

using namespace mvreg;

namespace {

Eigen::Matrix3d rot_z(double a) {
    Eigen::Matrix3d R;
    R << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
    return R;
}

double residual(const RigidTransformd& T, const PointCloud& src, const PointCloud& dst) {
    return (apply(T, src) - dst).squaredNorm();
}

}  // namespace

TEST_CASE("apply") {
    CHECK(apply(RigidTransformd::Identity(), Point3(1, 2, 3)) == Point3(1, 2, 3));
    const RigidTransformd T{rot_z(M_PI / 2), Point3::Zero()};
    CHECK((apply(T, Point3(1, 0, 0)) - Point3(0, 1, 0)).norm() < 1e-15);

    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 100; ++trial) {
        const RigidTransformd R = oracle::random_transform(rng, 10.0);
        const Point3 p = oracle::random_point(rng, 10.0);
        Point3 expect;
        for (int i = 0; i < 3; ++i) {
            expect(i) = R.t(i);
            for (int k = 0; k < 3; ++k) expect(i) += R.R(i, k) * p(k);
        }
        CHECK((apply(R, p) - expect).norm() < 1e-12);
    }
}

TEST_CASE("cloud apply matches pointwise apply") {
    std::mt19937_64 rng(2);
    const RigidTransformd T = oracle::random_transform(rng);
    const PointCloud c = oracle::random_cloud(rng, 50);
    const PointCloud moved = apply(T, c);
    for (Eigen::Index i = 0; i < c.cols(); ++i) CHECK((moved.col(i) - apply(T, Point3(c.col(i)))).norm() < 1e-14);
}

TEST_CASE("compose and invert") {
    std::mt19937_64 rng(3);
    const RigidTransformd T = oracle::random_transform(rng, 5.0);
    const RigidTransformd I = RigidTransformd::Identity();

    const RigidTransformd a = compose(I, T);
    CHECK((a.R - T.R).norm() < 1e-15);
    CHECK((a.t - T.t).norm() < 1e-15);

    const RigidTransformd b = compose(T, invert(T));
    CHECK((b.R - I.R).norm() < 1e-9);
    CHECK(b.t.norm() < 1e-9);

    const RigidTransformd ii = invert(I);
    CHECK(ii.R == I.R);
    CHECK(ii.t.norm() == 0.0);

    const RigidTransformd inv = invert(T);
    CHECK((inv.R - T.R.transpose()).norm() < 1e-15);
    CHECK((inv.t + T.R.transpose() * T.t).norm() < 1e-14);
    const RigidTransformd twice = invert(inv);
    CHECK((twice.R - T.R).norm() < 1e-10);
    CHECK((twice.t - T.t).norm() < 1e-10);

    const RigidTransformd T2 = oracle::random_transform(rng, 5.0);
    const RigidTransformd C = compose(T2, T);
    for (int i = 0; i < 100; ++i) {
        const Point3 p = oracle::random_point(rng, 10.0);
        CHECK((apply(C, p) - apply(T2, apply(T, p))).norm() < 1e-10);
        CHECK((apply(inv, apply(T, p)) - p).norm() < 1e-9);
    }
}

TEST_CASE("long composition chains stay valid") {
    std::mt19937_64 rng(4);
    RigidTransformd acc;
    for (int i = 0; i < 10000; ++i) acc = compose(oracle::random_transform(rng), acc);
    CHECK(acc.is_valid(1e-9));
}

TEST_CASE("estimate_rigid_transform") {
    std::mt19937_64 rng(5);
    SUBCASE("identity pairs") {
        const PointCloud p = oracle::random_cloud(rng, 10);
        const RigidTransformd T = estimate_rigid_transform(p, p);
        CHECK((T.R - Eigen::Matrix3d::Identity()).norm() < 1e-12);
        CHECK(T.t.norm() < 1e-12);
    }
    SUBCASE("recovers an exact motion") {
        for (int trial = 0; trial < 50; ++trial) {
            const RigidTransformd T0 = oracle::random_transform(rng, 10.0);
            const PointCloud p = oracle::random_cloud(rng, 3 + trial);
            const RigidTransformd T = estimate_rigid_transform(p, apply(T0, p));
            CHECK(rotation_error(T, T0) < 1e-9);
            CHECK(translation_error(T, T0) < 1e-9);
            CHECK(T.is_valid());
        }
    }
    SUBCASE("pair-list overload") {
        const RigidTransformd T0 = oracle::random_transform(rng);
        std::vector<std::pair<Point3, Point3>> pairs;
        for (int i = 0; i < 5; ++i) {
            const Point3 p = oracle::random_point(rng);
            pairs.emplace_back(p, apply(T0, p));
        }
        CHECK(rotation_error(estimate_rigid_transform(pairs), T0) < 1e-9);
    }
    SUBCASE("noisy fit is a local least-squares optimum") {
        std::normal_distribution<double> noise(0.0, 1e-3);
        const RigidTransformd T0 = oracle::random_transform(rng);
        const PointCloud p = oracle::random_cloud(rng, 4);
        PointCloud q = apply(T0, p);
        for (Eigen::Index i = 0; i < q.cols(); ++i) q.col(i) += Point3(noise(rng), noise(rng), noise(rng));
        const RigidTransformd T = estimate_rigid_transform(p, q);
        const double best = residual(T, p, q);
        std::normal_distribution<double> g(0.0, 1e-3);
        for (int k = 0; k < 1000; ++k) {
            const Eigen::Vector3d w(g(rng), g(rng), g(rng));
            const Eigen::Matrix3d dR = Eigen::AngleAxisd(w.norm(), w.normalized()).toRotationMatrix();
            const RigidTransformd P{dR * T.R, T.t + Point3(g(rng), g(rng), g(rng))};
            CHECK(residual(P, p, q) >= best);
        }
    }
    SUBCASE("reflection-inducing input still yields a rotation") {
        // Planar source with a mirrored target.
        PointCloud p(3, 4), q(3, 4);
        p << 0, 1, 0, 1, 0, 0, 1, 1, 0, 0, 0, 0;
        q = p;
        q.row(0) *= -1.0;
        const RigidTransformd T = estimate_rigid_transform(p, q);
        CHECK(T.is_valid());
    }
    SUBCASE("degenerate inputs") {
        const PointCloud two = oracle::random_cloud(rng, 2);
        CHECK_THROWS_AS(estimate_rigid_transform(two, two), DegenerateConfiguration);
        PointCloud line(3, 5);
        for (int i = 0; i < 5; ++i) line.col(i) = Point3(i, 2.0 * i, -i);
        CHECK_THROWS_AS(estimate_rigid_transform(line, line), DegenerateConfiguration);
        const PointCloud a = oracle::random_cloud(rng, 4);
        const PointCloud b = oracle::random_cloud(rng, 5);
        CHECK_THROWS_AS(estimate_rigid_transform(a, b), InvalidArgument);
    }
}

TEST_CASE("bbox diagonal and errors") {
    PointCloud c(3, 2);
    c << 0, 3, 0, 4, 0, 0;
    CHECK(bbox_diagonal(c) == doctest::Approx(5.0));
    CHECK(bbox_diagonal(PointCloud(3, 0)) == 0.0);
    const RigidTransformd T{rot_z(0.3), Point3(1, 0, 0)};
    CHECK(rotation_error(T, T) == 0.0);
    CHECK(translation_error(T, RigidTransformd::Identity()) == doctest::Approx(1.0));
}
