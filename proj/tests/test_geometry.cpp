#include "cpo/errors.hpp"
#include "cpo/geometry.hpp"
#include "cpo/kd_tree.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <numbers>

using namespace cpo;

TEST_CASE("distance is Euclidean and checks dimensions") {
    Vector a(2), b(2);
    a << 0, 0;
    b << 3, 4;
    CHECK(distance(a, b) == doctest::Approx(5.0));
    CHECK(distance(a, a) == 0.0);
    CHECK_THROWS_AS(distance(a, Vector(Vector::Zero(3))), InvalidArgument);
}

TEST_CASE("ball volume closed forms") {
    CHECK(ball_volume<double>(1, 2.0) == doctest::Approx(4.0));
    CHECK(ball_volume<double>(2, 1.0) == doctest::Approx(std::numbers::pi));
    CHECK(ball_volume<double>(3, 1.0) == doctest::Approx(4.0 / 3.0 * std::numbers::pi));
    // pi^5 / 120 for the unit 10-ball
    CHECK(ball_volume<double>(10, 1.0) == doctest::Approx(std::pow(std::numbers::pi, 5) / 120.0));
    CHECK(ball_volume<double>(2, 0.0) == 0.0);
    CHECK_THROWS_AS(ball_volume<double>(0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(ball_volume<double>(2, -1.0), InvalidArgument);
}

TEST_CASE("uniform ball samples stay inside and fill the radius law") {
    Rng rng(7);
    Vector c(3);
    c << 1, -2, 0.5;
    const Ball<double> ball{c, 2.0};
    const int n = 20000;
    int inside_half = 0;
    for (int i = 0; i < n; ++i) {
        const Vector p = sample_uniform_ball(ball, rng);
        REQUIRE((p - c).norm() <= 2.0 + 1e-12);
        if ((p - c).norm() <= 1.0)
            ++inside_half;
    }
    // P(|p - c| <= r/2) = 1/8 in 3-D
    const double frac = inside_half / double(n);
    CHECK(std::abs(frac - 0.125) < 4 * std::sqrt(0.125 * 0.875 / n));
}

TEST_CASE("voronoi ownership breaks ties to the lowest index") {
    Points centers(1, 3);
    centers << -1, 1, 1;
    Vector p(1);
    p << 0;
    CHECK(voronoi_owner(p, centers) == 0);
    CHECK(owned_by(p, centers, 0));
    CHECK_FALSE(owned_by(p, centers, 1));
    p << 2;
    CHECK(voronoi_owner(p, centers) == 1);
    CHECK_FALSE(owned_by(p, centers, 2));
}

TEST_CASE("union volume: identical centers count once, disjoint balls add") {
    Rng rng(11);
    Points same(2, 3);
    same << 0, 0, 0, 0, 0, 0;
    const auto v = union_volume_estimate<double>(same, 1.0, 4000, rng);
    CHECK(v.value == doctest::Approx(std::numbers::pi).epsilon(1e-12));

    Points apart(2, 2);
    apart << 0, 10, 0, 0;
    const auto w = union_volume_estimate<double>(apart, 1.0, 1000, rng);
    CHECK(w.value == doctest::Approx(2 * std::numbers::pi).epsilon(1e-12));
    CHECK(w.std_error == 0.0);
}

TEST_CASE("union volume matches the two-disc lens formula") {
    Rng rng(3);
    for (double d : {0.3, 1.0, 1.7}) {
        Points centers(2, 2);
        centers << 0, d, 0, 0;
        const auto est = union_volume_estimate<double>(centers, 1.0, 40000, rng);
        const double truth = oracle::two_disc_union_area(1.0, d);
        CHECK(std::abs(est.value - truth) < 4 * est.std_error + 1e-9);
    }
}

TEST_CASE("kd-tree ball queries agree with brute force") {
    Rng rng(5);
    std::normal_distribution<double> g;
    Points pts(3, 500);
    for (Index j = 0; j < pts.cols(); ++j)
        for (Index i = 0; i < 3; ++i)
            pts(i, j) = g(rng);
    const KdTree tree(pts, 8);
    for (int q = 0; q < 50; ++q) {
        Vector p(3);
        for (Index i = 0; i < 3; ++i)
            p[i] = g(rng);
        const double r = 0.2 + 0.02 * q;
        std::vector<Index> expect;
        for (Index j = 0; j < pts.cols(); ++j)
            if ((pts.col(j) - p).norm() <= r)
                expect.push_back(j);
        CHECK(tree.query_ball(p, r) == expect);
    }
}

TEST_CASE("connected components agree with breadth-first search") {
    Rng rng(9);
    std::uniform_real_distribution<double> u(0, 10);
    Points pts(2, 400);
    for (Index j = 0; j < pts.cols(); ++j)
        pts.col(j) << u(rng), u(rng);
    for (double r : {0.1, 0.4, 0.8, 2.0, 20.0}) {
        const auto got = connected_components(pts, r);
        const auto expect = oracle::brute_components(pts, r);
        CHECK(got == expect);
    }
}

TEST_CASE("component edges use a strict inequality") {
    Points pts(1, 3);
    pts << 0, 1, 2;
    const auto at_gap = connected_components(pts, 1.0);
    CHECK(at_gap == std::vector<Index>{0, 1, 2});
    const auto above = connected_components(pts, 1.0 + 1e-9);
    CHECK(above == std::vector<Index>{0, 0, 0});
    CHECK_THROWS_AS(connected_components(Points(2, 0), 1.0), InvalidArgument);
}
