#include <catch2/catch_amalgamated.hpp>

#include "byzadmm/model.hpp"
#include "byzadmm/schedule.hpp"
#include "byzadmm/updates.hpp"

using namespace byzadmm;

TEST_CASE("proj_box") {
    REQUIRE(proj_box({0.7, -0.2}, 0.5) == ModelVector{0.5, -0.2});
    SECTION("identity inside the box") {
        const ModelVector v = {0.3, -0.49, 0.0};
        REQUIRE(proj_box(v, 0.5) == v);
    }
    SECTION("idempotent") {
        RngStream rng(1);
        for (int t = 0; t < 20; ++t) {
            ModelVector v(4);
            for (auto& e : v) e = 4.0 * rng.next_unit() - 2.0;
            const ModelVector once = proj_box(v, 0.8);
            REQUIRE(proj_box(once, 0.8) == once);
        }
    }
    REQUIRE_THROWS_AS(proj_box({1.0}, -0.1), ConfigError);
}

TEST_CASE("elementwise_sign") {
    REQUIRE(elementwise_sign({3.0, -0.1, 0.0}) == ModelVector{1.0, -1.0, 0.0});
    SECTION("odd and idempotent") {
        RngStream rng(2);
        for (int t = 0; t < 20; ++t) {
            ModelVector v(3);
            for (auto& e : v) e = rng.normal();
            const ModelVector s = elementwise_sign(v);
            REQUIRE(elementwise_sign(vec::scale(v, -1.0)) == vec::scale(s, -1.0));
            REQUIRE(elementwise_sign(s) == s);
        }
    }
}

TEST_CASE("admm worker step") {
    SECTION("zero gradient and zero duals fix the point") {
        AdmmWorkerState s{{1.0}, {0.0}, {0.0}};
        REQUIRE(admm_worker_step(s, {0.0}, 0.1) == ModelVector{1.0});
    }
    SECTION("dual pressure moves the primal") {
        AdmmWorkerState s{{1.0}, {0.5}, {0.0}};
        REQUIRE(admm_worker_step(s, {0.0}, 0.1)[0] == Catch::Approx(0.9));
    }
    SECTION("toy initialization at the local optimum stays put") {
        // x=1, grad = (1-1)/2 = 0, both duals zero, alpha = 1/(0/8+1) = 1
        AdmmWorkerState s{{1.0}, {0.0}, {0.0}};
        const LossModel loss = QuadraticLoss{{1.0}, 0.5};
        REQUIRE(admm_worker_step(s, exact_gradient(loss, s.x), 1.0) == ModelVector{1.0});
    }
    SECTION("non-finite gradient aborts") {
        AdmmWorkerState s{{1.0}, {0.0}, {0.0}};
        REQUIRE_THROWS_AS(admm_worker_step(s, {std::nan("")}, 0.1), NumericError);
    }
}

TEST_CASE("admm dual step") {
    const HyperParams hp{0.5, 1.0, 1, 0};
    SECTION("direct substitution") {
        AdmmWorkerState s{{0.0}, {0.0}, {0.0}};
        REQUIRE(admm_dual_step(s, {1.0}, {0.0}, hp)[0] == Catch::Approx(0.5));
    }
    SECTION("consensual inputs leave the dual alone") {
        AdmmWorkerState s{{0.0}, {0.0}, {0.0}};
        REQUIRE(admm_dual_step(s, {0.3}, {0.3}, hp)[0] == 0.0);
    }
    SECTION("saturates at the box edge") {
        AdmmWorkerState s{{0.0}, {0.5}, {0.0}};
        REQUIRE(admm_dual_step(s, {2.0}, {0.0}, hp)[0] == Catch::Approx(0.5));
    }
}

TEST_CASE("admm master step") {
    SECTION("all-zero messages and gradient leave x0") {
        AdmmMasterState s{{2.0}, {{0.0}, {0.0}}, {{0.0}, {0.0}}};
        REQUIRE(admm_master_step(s, {0.0}, 0.25) == ModelVector{2.0});
    }
    SECTION("single worker pull") {
        AdmmMasterState s{{1.0}, {{0.5}}, {{0.0}}};
        REQUIRE(admm_master_step(s, {0.0}, 0.1)[0] == Catch::Approx(1.1));
    }
    SECTION("toy first round does not move the master") {
        AdmmMasterState s{{0.0}, {{0.0}, {0.0}, {0.0}}, {{0.0}, {0.0}, {0.0}}};
        REQUIRE(admm_master_step(s, {0.0}, 1.0 / 3.0) == ModelVector{0.0});
    }
    SECTION("missing message is a protocol error") {
        AdmmMasterState s{{0.0}, {{}}, {{0.0}}};
        REQUIRE_THROWS_AS(admm_master_step(s, {0.0}, 0.1), ProtocolError);
    }
}

TEST_CASE("rsa steps") {
    SECTION("consensual stationary point") {
        REQUIRE(rsa_worker_step({1.0}, {1.0}, {0.0}, 1.0, 0.5) == ModelVector{1.0});
    }
    SECTION("worker sign pull") {
        REQUIRE(rsa_worker_step({2.0}, {0.0}, {0.0}, 1.0, 0.5)[0] == Catch::Approx(1.5));
    }
    SECTION("toy worker first round") {
        REQUIRE(rsa_worker_step({1.0}, {0.0}, {0.0}, 1.0, 0.5)[0] == Catch::Approx(0.5));
    }
    SECTION("master stationary when all received equal x0") {
        const std::vector<ModelVector> rec = {{1.0}, {1.0}};
        REQUIRE(rsa_master_step({1.0}, rec, {0.0}, 1.0, 0.5) == ModelVector{1.0});
    }
    SECTION("three workers above push up by 1.5") {
        const std::vector<ModelVector> rec = {{1.0}, {2.0}, {3.0}};
        REQUIRE(rsa_master_step({0.0}, rec, {0.0}, 1.0, 0.5)[0] == Catch::Approx(1.5));
    }
    SECTION("toy master first round with a small-value saboteur") {
        const std::vector<ModelVector> rec = {{1.0}, {1.0}, {-0.5}};
        REQUIRE(rsa_master_step({0.0}, rec, {0.0}, 1.0 / 3.0, 0.5)[0] ==
                Catch::Approx(1.0 / 6.0));
    }
    SECTION("missing message is a protocol error") {
        const std::vector<ModelVector> rec = {{1.0}, {}};
        REQUIRE_THROWS_AS(rsa_master_step({0.0}, rec, {0.0}, 0.1, 0.5), ProtocolError);
    }
}

TEST_CASE("sgd master step") {
    REQUIRE(sgd_master_step({0.5}, {0.0}, {0.0}, 1.0) == ModelVector{0.5});
    REQUIRE(sgd_master_step({0.0}, {1.0}, {0.0}, 1.0) == ModelVector{-1.0});

    SECTION("gradient descent on averaged quadratics contracts to the minimizer") {
        const LossModel a = QuadraticLoss{{1.0}, 1.0};
        const LossModel b = QuadraticLoss{{3.0}, 3.0};
        Problem p;
        p.worker_losses = {a, b};
        p.regularizer = QuadraticLoss{{0.0}, 0.0};
        const ModelVector xs = exact_minimizer(p); // (1*1 + 3*3)/4 = 2.5
        REQUIRE(xs[0] == Catch::Approx(2.5));
        ModelVector x = {0.0};
        const double alpha = 1.0 / 4.0; // 1 / sum of smoothness constants
        for (int k = 0; k < 1000 && vec::dist_inf(x, xs) >= 1e-6; ++k) {
            ModelVector mean = vec::scale(
                vec::add(exact_gradient(a, x), exact_gradient(b, x)), 0.5);
            x = sgd_master_step(x, mean, {0.0}, alpha);
        }
        REQUIRE(vec::dist_inf(x, xs) < 1e-6);
    }
}

TEST_CASE("stepsize schedules") {
    REQUIRE(stepsize(InverseSqrtK{10.0, 10.0}, 0) == Catch::Approx(0.1));
    REQUIRE(stepsize(InverseK{1.0 / 8.0, 3.0}, 0) == Catch::Approx(1.0 / 3.0));
    REQUIRE(stepsize(InverseK{1.0 / 8.0, 1.0}, 0) == Catch::Approx(1.0));
    SECTION("cap binds early") {
        const InverseK s{0.1, 0.5, 0.25};
        REQUIRE(stepsize(s, 0) == Catch::Approx(0.25));
        REQUIRE(stepsize(s, 100) == Catch::Approx(1.0 / 10.5));
    }
    SECTION("positive and non-increasing") {
        const StepsizeSchedule kinds[] = {InverseK{0.3, 2.0, 0.4}, InverseSqrtK{5.0, 2.0}};
        for (const auto& s : kinds) {
            double prev = stepsize(s, 0);
            for (long k = 1; k < 2000; k += 37) {
                const double a = stepsize(s, k);
                REQUIRE(a > 0.0);
                REQUIRE(a <= prev);
                prev = a;
            }
        }
    }
    REQUIRE_THROWS_AS(validate_schedule(InverseK{-0.1, 1.0, 1.0}), ConfigError);
}

TEST_CASE("dual iterates stay inside the box") {
    const HyperParams hp{0.35, 2.0, 1, 0};
    RngStream rng(77);
    AdmmWorkerState s{{0.0, 0.0}, vec::zeros(2), vec::zeros(2)};
    for (int k = 0; k < 500; ++k) {
        const ModelVector x_new = {rng.normal(0, 3), rng.normal(0, 3)};
        const ModelVector x0_new = {rng.normal(0, 3), rng.normal(0, 3)};
        ModelVector eta = admm_dual_step(s, x_new, x0_new, hp);
        REQUIRE(vec::norm_inf(eta) <= hp.lambda + 1e-15);
        s.eta_prev = s.eta_curr;
        s.eta_curr = std::move(eta);
    }
}

TEST_CASE("updates are coordinate-separable") {
    // running d scalar problems stacked equals running them one by one
    RngStream rng(31);
    const HyperParams hp{0.6, 1.5, 1, 0};
    constexpr int d = 4;
    ModelVector x(d), eta(d), eta_prev(d), grad(d), x0(d);
    for (int t = 0; t < d; ++t) {
        x[t] = rng.normal();
        eta[t] = 0.5 * rng.next_unit() - 0.25;
        eta_prev[t] = 0.5 * rng.next_unit() - 0.25;
        grad[t] = rng.normal();
        x0[t] = rng.normal();
    }
    const AdmmWorkerState stacked{x, eta, eta_prev};
    const ModelVector xw = admm_worker_step(stacked, grad, 0.3);
    const ModelVector ew = admm_dual_step(stacked, xw, x0, hp);
    const ModelVector rw = rsa_worker_step(x, x0, grad, 0.3, hp.lambda);
    for (int t = 0; t < d; ++t) {
        const AdmmWorkerState single{{x[t]}, {eta[t]}, {eta_prev[t]}};
        const ModelVector xs = admm_worker_step(single, {grad[t]}, 0.3);
        REQUIRE(xs[0] == xw[t]);
        REQUIRE(admm_dual_step(single, xs, {x0[t]}, hp)[0] == ew[t]);
        REQUIRE(rsa_worker_step({x[t]}, {x0[t]}, {grad[t]}, 0.3, hp.lambda)[0] == rw[t]);
    }
}

TEST_CASE("hyper parameter validation") {
    REQUIRE_THROWS_AS((HyperParams{-0.1, 1.0, 2, 0}.validate()), ConfigError);
    REQUIRE_THROWS_AS((HyperParams{0.1, 0.0, 2, 0}.validate()), ConfigError);
    REQUIRE_THROWS_AS((HyperParams{0.1, 1.0, 2, 2}.validate()), ConfigError);
    REQUIRE_NOTHROW((HyperParams{0.1, 1.0, 3, 1}.validate()));
}
