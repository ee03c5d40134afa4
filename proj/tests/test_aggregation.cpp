#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "byzadmm/aggregation.hpp"
#include "byzadmm/rng.hpp"

using namespace byzadmm;

TEST_CASE("mean aggregation") {
    const std::vector<ModelVector> vs = {{0.0}, {2.0}};
    REQUIRE(aggregate(AggregationRule::Mean, vs) == ModelVector{1.0});
}

TEST_CASE("coordinate median ignores a single outlier") {
    const std::vector<ModelVector> vs = {{1.0}, {2.0}, {100.0}};
    REQUIRE(aggregate(AggregationRule::CoordinateMedian, vs) == ModelVector{2.0});
}

TEST_CASE("coordinate median averages the central pair for even counts") {
    const std::vector<ModelVector> vs = {{4.0, 0.0}, {1.0, 3.0}, {2.0, 9.0}, {3.0, 1.0}};
    const ModelVector med = aggregate(AggregationRule::CoordinateMedian, vs);
    REQUIRE(med[0] == Catch::Approx(2.5));
    REQUIRE(med[1] == Catch::Approx(2.0));
}

TEST_CASE("geometric median lands on the majority point") {
    const std::vector<ModelVector> vs = {{0.0}, {0.0}, {10.0}};
    REQUIRE(aggregate(AggregationRule::GeometricMedian, vs)[0] == Catch::Approx(0.0).margin(1e-6));
}

TEST_CASE("weiszfeld equals the median on 1-d odd sets") {
    RngStream rng(123);
    for (int t = 0; t < 30; ++t) {
        const std::size_t n = 3 + 2 * rng.index(4); // 3,5,7,9
        std::vector<ModelVector> vs(n);
        for (auto& v : vs) v = {rng.normal(0.0, 5.0)};
        const double geo = aggregate(AggregationRule::GeometricMedian, vs)[0];
        const double med = aggregate(AggregationRule::CoordinateMedian, vs)[0];
        REQUIRE(geo == Catch::Approx(med).margin(1e-6));
    }
}

TEST_CASE("weiszfeld output beats every input point on the distance objective") {
    RngStream rng(321);
    const auto objective = [](const std::vector<ModelVector>& vs, const ModelVector& m) {
        double o = 0.0;
        for (const auto& v : vs) o += vec::dist2(v, m);
        return o;
    };
    for (int t = 0; t < 25; ++t) {
        const std::size_t n = 3 + rng.index(7);
        std::vector<ModelVector> vs(n);
        for (auto& v : vs) {
            v.resize(3);
            for (auto& e : v) e = rng.normal(0.0, 2.0);
        }
        const ModelVector m = aggregate(AggregationRule::GeometricMedian, vs);
        const double at_m = objective(vs, m);
        for (const auto& v : vs) REQUIRE(at_m <= objective(vs, v) + 1e-9);
    }
}

TEST_CASE("aggregation rejects an empty round") {
    REQUIRE_THROWS_AS(aggregate(AggregationRule::Mean, std::vector<ModelVector>{}),
                      ProtocolError);
}

TEST_CASE("single message aggregates to itself") {
    const std::vector<ModelVector> vs = {{1.5, -2.0}};
    for (auto rule : {AggregationRule::Mean, AggregationRule::CoordinateMedian,
                      AggregationRule::GeometricMedian})
        REQUIRE(aggregate(rule, vs) == vs[0]);
}
