#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "byzadmm/attacks.hpp"

using namespace byzadmm;

namespace {

HyperParams toy_hp() { return HyperParams{0.5, 1.0, 3, 1}; }

} // namespace

TEST_CASE("small-value payload at k=0") {
    AttackSpec spec;
    spec.kind = AttackSpec::Kind::SmallValue;
    spec.epsilon = 0.5;
    spec.byzantine_ids = {2};
    const HyperParams hp = toy_hp();
    const ModelVector x0 = {0.0};
    AttackContext ctx;
    ctx.k = 0;
    ctx.x0 = &x0;
    ctx.hp = &hp;
    RngStream rng(1);
    // max{0*1, 1} = 1, so the forged primal is x0 - epsilon
    REQUIRE(byzantine_payload(spec, Protocol::Rsa, ctx, rng)[0] == Catch::Approx(-0.5));
}

TEST_CASE("small-value perturbation shrinks monotonically to zero") {
    const ModelVector x0 = {0.3};
    double prev = 1e300;
    for (long k = 1; k <= 2000; ++k) {
        const double mag = std::abs(small_value_primal(x0, 0.5, k)[0] - x0[0]);
        REQUIRE(mag <= prev);
        prev = mag;
    }
    REQUIRE(prev < 1e-6);
}

TEST_CASE("large-value payload alternates around the master") {
    const HyperParams hp = toy_hp();
    const ModelVector x0 = {0.0};
    // 4*lambda/beta = 2; (-1)^1 = -1 so u = x0 + 2
    REQUIRE(large_value_primal(x0, hp, 1)[0] == Catch::Approx(2.0));
    REQUIRE(large_value_primal(x0, hp, 2)[0] == Catch::Approx(-2.0));
}

TEST_CASE("sign-flip scales the honest message") {
    AttackSpec spec;
    spec.kind = AttackSpec::Kind::SignFlip;
    spec.epsilon = -3.0;
    spec.byzantine_ids = {0};
    const HyperParams hp = toy_hp();
    const ModelVector honest = {0.2, -0.4};
    AttackContext ctx;
    ctx.honest_value = &honest;
    ctx.hp = &hp;
    RngStream rng(1);
    const ModelVector g = byzantine_payload(spec, Protocol::AggSgd, ctx, rng);
    REQUIRE(g[0] == Catch::Approx(-0.6));
    REQUIRE(g[1] == Catch::Approx(1.2));
    // on the dual channel the flipped message is clamped back into the box
    const ModelVector d = byzantine_payload(spec, Protocol::Admm, ctx, rng);
    REQUIRE(d[0] == Catch::Approx(-0.5));
    REQUIRE(d[1] == Catch::Approx(0.5));
}

TEST_CASE("no attack forwards the honest value") {
    AttackSpec spec; // kind None
    const ModelVector honest = {1.0, 2.0};
    AttackContext ctx;
    ctx.honest_value = &honest;
    RngStream rng(1);
    REQUIRE(byzantine_payload(spec, Protocol::AggSgd, ctx, rng) == honest);
}

TEST_CASE("gaussian payload statistics") {
    AttackSpec spec;
    spec.kind = AttackSpec::Kind::Gaussian;
    spec.stddev = 100.0;
    spec.byzantine_ids = {0};
    const HyperParams hp = toy_hp();
    const ModelVector x0 = {0.0};
    AttackContext ctx;
    ctx.x0 = &x0;
    ctx.hp = &hp;
    RngStream rng(404);
    double sum = 0.0, sum_sq = 0.0;
    constexpr int n = 10000;
    for (int t = 0; t < n; ++t) {
        const double v = byzantine_payload(spec, Protocol::AggSgd, ctx, rng)[0];
        sum += v;
        sum_sq += v * v;
    }
    const double mean = sum / n;
    const double stddev = std::sqrt(sum_sq / n - mean * mean);
    REQUIRE(stddev == Catch::Approx(100.0).epsilon(0.05));

    SECTION("clamped onto the dual box for the dual channel") {
        for (int t = 0; t < 100; ++t) {
            const ModelVector d = byzantine_payload(spec, Protocol::Admm, ctx, rng);
            REQUIRE(vec::norm_inf(d) <= hp.lambda + 1e-15);
        }
    }
}

TEST_CASE("value attacks stay inside the dual box on the dual channel") {
    const HyperParams hp = toy_hp();
    const ModelVector x0 = {0.7};
    ModelVector dual = {0.0};
    for (auto kind : {AttackSpec::Kind::SmallValue, AttackSpec::Kind::LargeValue}) {
        AttackSpec spec;
        spec.kind = kind;
        spec.epsilon = 0.5;
        spec.byzantine_ids = {2};
        dual = {0.0};
        for (long k = 1; k < 50; ++k) {
            AttackContext ctx;
            ctx.k = k;
            ctx.x0 = &x0;
            ctx.own_dual = &dual;
            ctx.hp = &hp;
            RngStream rng(k);
            dual = byzantine_payload(spec, Protocol::Admm, ctx, rng);
            REQUIRE(vec::norm_inf(dual) <= hp.lambda + 1e-15);
        }
    }
}

TEST_CASE("attack spec validation") {
    AttackSpec spec;
    spec.kind = AttackSpec::Kind::SignFlip;
    spec.epsilon = 3.0;
    spec.byzantine_ids = {1};
    REQUIRE_THROWS_AS(spec.validate(3), ConfigError);

    spec.kind = AttackSpec::Kind::SmallValue;
    spec.epsilon = -0.5;
    REQUIRE_THROWS_AS(spec.validate(3), ConfigError);

    spec.kind = AttackSpec::Kind::CopyRegular;
    spec.epsilon = 0.0;
    spec.copy_target = 1; // byzantine itself
    REQUIRE_THROWS_AS(spec.validate(3), ConfigError);
    spec.copy_target = 0;
    REQUIRE_NOTHROW(spec.validate(3));

    spec.byzantine_ids = {1, 1};
    REQUIRE_THROWS_AS(spec.validate(3), ConfigError);
}
