#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>

#include "byzadmm/model.hpp"

using namespace byzadmm;

namespace {

// central finite differences of the loss value; the independent route every
// analytic gradient is checked against
ModelVector fd_gradient(const LossModel& model, const ModelVector& x, double h = 1e-5) {
    ModelVector g(x.size());
    ModelVector probe = x;
    for (std::size_t t = 0; t < x.size(); ++t) {
        probe[t] = x[t] + h;
        const double up = loss_value(model, probe);
        probe[t] = x[t] - h;
        const double down = loss_value(model, probe);
        probe[t] = x[t];
        g[t] = (up - down) / (2.0 * h);
    }
    return g;
}

double rel_err(const ModelVector& got, const ModelVector& want) {
    return vec::dist2(got, want) / std::max(1.0, vec::norm2(want));
}

std::shared_ptr<Dataset> tiny_two_class() {
    auto ds = std::make_shared<Dataset>();
    ds->rows = 3;
    ds->feature_count = 2;
    ds->class_count = 2;
    ds->features = {0.2, 0.9, 0.8, 0.1, 0.3, 0.7};
    ds->labels = {0, 1, 0};
    return ds;
}

SoftmaxLoss tiny_softmax() {
    auto ds = tiny_two_class();
    return SoftmaxLoss{ds, {0, 1, 2}, ds->class_count, ds->feature_count};
}

} // namespace

TEST_CASE("quadratic gradient") {
    const LossModel m = QuadraticLoss{{1.0}, 0.5};
    SECTION("zero at the center") {
        REQUIRE(exact_gradient(m, {1.0})[0] == 0.0);
    }
    SECTION("(x-1)/2 away from it") {
        REQUIRE(exact_gradient(m, {0.0})[0] == Catch::Approx(-0.5));
        REQUIRE(exact_gradient(m, {3.0})[0] == Catch::Approx(1.0));
    }
    SECTION("dimension mismatch is a config error") {
        REQUIRE_THROWS_AS(exact_gradient(m, {1.0, 2.0}), ConfigError);
    }
}

TEST_CASE("softmax gradient matches finite differences") {
    const LossModel m = tiny_softmax();
    const ModelVector x = {0.3, -0.2, 0.1, 0.4};
    REQUIRE(rel_err(exact_gradient(m, x), fd_gradient(m, x)) < 1e-6);
}

TEST_CASE("finite differences agree for random points") {
    RngStream rng(99);
    const LossModel soft = tiny_softmax();
    const LossModel quad = QuadraticLoss{{0.5, -1.0, 2.0}, 1.7};
    for (int t = 0; t < 20; ++t) {
        ModelVector xs(4), xq(3);
        for (auto& v : xs) v = 4.0 * rng.next_unit() - 2.0;
        for (auto& v : xq) v = 4.0 * rng.next_unit() - 2.0;
        REQUIRE(rel_err(exact_gradient(soft, xs), fd_gradient(soft, xs)) < 1e-5);
        REQUIRE(rel_err(exact_gradient(quad, xq), fd_gradient(quad, xq)) < 1e-5);
    }
}

TEST_CASE("stochastic gradients") {
    SECTION("quadratic ignores the batch") {
        const LossModel m = QuadraticLoss{{1.0, 2.0}, 0.5};
        const ModelVector x = {0.0, 0.0};
        const std::vector<std::int32_t> batch = {0};
        REQUIRE(stochastic_gradient(m, x, batch) == exact_gradient(m, x));
    }
    SECTION("full-shard batch equals the exact gradient") {
        const LossModel m = tiny_softmax();
        const ModelVector x = {0.1, 0.2, -0.3, 0.4};
        const std::vector<std::int32_t> batch = {0, 1, 2};
        REQUIRE(vec::dist_inf(stochastic_gradient(m, x, batch), exact_gradient(m, x)) < 1e-15);
    }
    SECTION("singleton enumeration reproduces the exact gradient") {
        const LossModel m = tiny_softmax();
        const ModelVector x = {0.1, 0.2, -0.3, 0.4};
        ModelVector mean = vec::zeros(4);
        for (std::int32_t i = 0; i < 3; ++i) {
            const std::vector<std::int32_t> batch = {i};
            vec::axpy(mean, 1.0 / 3.0, stochastic_gradient(m, x, batch));
        }
        REQUIRE(vec::dist_inf(mean, exact_gradient(m, x)) < 1e-12);
    }
    SECTION("empty batch is rejected") {
        const LossModel m = tiny_softmax();
        REQUIRE_THROWS_AS(stochastic_gradient(m, {0, 0, 0, 0}, std::vector<std::int32_t>{}),
                          ConfigError);
    }
}

TEST_CASE("strong convexity identity for quadratics") {
    const double s = 1.3;
    const LossModel m = QuadraticLoss{{0.2, -0.4}, s};
    RngStream rng(5);
    for (int t = 0; t < 10; ++t) {
        ModelVector x(2), y(2);
        for (auto& v : x) v = rng.normal();
        for (auto& v : y) v = rng.normal();
        const ModelVector diff = vec::sub(x, y);
        const double lhs = vec::dot(vec::sub(exact_gradient(m, x), exact_gradient(m, y)), diff);
        REQUIRE(lhs == Catch::Approx(s * vec::norm2_sq(diff)).margin(1e-12));
    }
}

TEST_CASE("exact minimizer") {
    SECTION("two symmetric workers plus regularizer") {
        Problem p;
        p.worker_losses = {QuadraticLoss{{1.0}, 0.5}, QuadraticLoss{{1.0}, 0.5}};
        p.regularizer = QuadraticLoss{{0.0}, 1.0};
        REQUIRE(exact_minimizer(p)[0] == Catch::Approx(0.5));
    }
    SECTION("single worker without regularizer sits at its center") {
        Problem p;
        p.worker_losses = {QuadraticLoss{{3.25}, 2.0}};
        p.regularizer = QuadraticLoss{{0.0}, 0.0};
        REQUIRE(exact_minimizer(p)[0] == Catch::Approx(3.25));
    }
    SECTION("symmetric centers meet in the middle") {
        Problem p;
        p.worker_losses = {QuadraticLoss{{0.0}, 0.7}, QuadraticLoss{{2.0}, 0.7}};
        p.regularizer = QuadraticLoss{{0.0}, 0.0};
        REQUIRE(exact_minimizer(p)[0] == Catch::Approx(1.0));
    }
    SECTION("softmax problem reaches a small gradient norm") {
        Problem p;
        p.worker_losses = {tiny_softmax()};
        p.regularizer = QuadraticLoss{vec::zeros(4), 0.1};
        const ModelVector xs = exact_minimizer(p);
        REQUIRE(vec::norm2(problem_gradient(p, xs)) <= 1e-8);
    }
}

TEST_CASE("consensus threshold") {
    SECTION("two identical workers, shared optimum") {
        Problem p;
        p.worker_losses = {QuadraticLoss{{1.0}, 0.5}, QuadraticLoss{{1.0}, 0.5}};
        p.regularizer = QuadraticLoss{{0.0}, 1.0};
        // x* = 1/2, each worker gradient is (1/2)(1/2 - 1) = -1/4
        REQUIRE(consensus_threshold(p) == Catch::Approx(0.25));
    }
    SECTION("zero when every worker already sits at the optimum") {
        Problem p;
        p.worker_losses = {QuadraticLoss{{0.7}, 1.0}, QuadraticLoss{{0.7}, 2.0}};
        p.regularizer = QuadraticLoss{{0.7}, 1.0};
        REQUIRE(consensus_threshold(p) == Catch::Approx(0.0).margin(1e-15));
    }
    SECTION("two workers straddling the midpoint") {
        Problem p;
        p.worker_losses = {QuadraticLoss{{0.0}, 0.5}, QuadraticLoss{{2.0}, 0.5}};
        p.regularizer = QuadraticLoss{{0.0}, 0.0};
        REQUIRE(consensus_threshold(p) == Catch::Approx(0.5));
    }
}

TEST_CASE("convergence profile") {
    Problem p;
    p.worker_losses = {QuadraticLoss{{1.0}, 0.5}, QuadraticLoss{{-1.0}, 2.0}};
    p.regularizer = QuadraticLoss{{0.0}, 1.0};
    const auto prof = profile_for(p);
    REQUIRE(prof.mu0 == 1.0);
    REQUIRE(prof.L0 == 1.0);
    REQUIRE(prof.mu == std::vector<double>{0.5, 2.0});
    REQUIRE(prof.L == std::vector<double>{0.5, 2.0});

    ConvergenceProfile bad = prof;
    bad.mu0 = 0.0;
    REQUIRE_THROWS_AS(bad.validate(), ConfigError);
}
