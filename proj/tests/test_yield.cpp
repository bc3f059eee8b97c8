#include "framelab/error.hpp"
#include "framelab/yield.hpp"

#include <doctest.h>

#include <cmath>

using namespace framelab;

TEST_CASE("portal yield of the reference frame") {
    const auto f = build_reference_frame();
    const auto e = portal_yield(f, 2.35e8);
    CHECK(std::abs(e.yield_moment - 6.4357e5) / 6.4357e5 < 1e-3);
    CHECK(std::abs(e.yield_shear - 4.29e5) / 4.29e5 < 5e-3);
    CHECK(e.elastic_bound == doctest::Approx(0.6 * e.yield_shear));
    CHECK(e.elastic_bound == doctest::Approx(2.57e5).epsilon(2e-3));
}

TEST_CASE("portal yield scales linearly with F_y") {
    const auto f = build_reference_frame();
    const auto a = portal_yield(f, 2.35e8);
    const auto b = portal_yield(f, 4.70e8);
    CHECK(b.yield_moment == 2.0 * a.yield_moment);
    CHECK(b.yield_shear == 2.0 * a.yield_shear);
}

TEST_CASE("portal yield ignores column sections") {
    const auto f = build_reference_frame();
    auto g = f;
    for (auto& m : g.members) {
        if (m.kind == MemberKind::column) {
            m.section = derive_section(1.0, 1.0, 1.0);
        }
    }
    CHECK(portal_yield(g, 2.35e8).yield_moment == portal_yield(f, 2.35e8).yield_moment);
}

TEST_CASE("portal yield argument checks") {
    const auto f = build_reference_frame();
    CHECK_THROWS_AS(portal_yield(f, 0.0), Error);
    auto g = f;
    for (auto& m : g.members) {
        m.kind = MemberKind::column;
    }
    CHECK_THROWS_AS(portal_yield(g, 2.35e8), Error);
}

TEST_CASE("regime estimate") {
    const auto e = portal_yield(build_reference_frame(), 2.35e8);
    CHECK(classify_regime_estimate({0.0, 2.0e5}, e) == Regime::linear);
    CHECK(classify_regime_estimate({0.0, 4.3e5}, e) == Regime::nonlinear);
    CHECK(classify_regime_estimate({0.0, 0.0}, e) == Regime::linear);
    CHECK(classify_regime_estimate({0.0, 3.0e5}, e) == Regime::transition);
}

TEST_CASE("regime estimate never relaxes under scaling") {
    const auto e = portal_yield(build_reference_frame(), 2.35e8);
    auto rank = [](Regime r) { return r == Regime::linear ? 0 : (r == Regime::transition ? 1 : 2); };
    for (double fm = 0.0; fm <= 5e5; fm += 2.5e4) {
        for (double ft = 0.0; ft <= 5e5; ft += 2.5e4) {
            const auto base = classify_regime_estimate({fm, ft}, e);
            for (double c : {1.01, 1.5, 3.0}) {
                CHECK(rank(classify_regime_estimate({c * fm, c * ft}, e)) >= rank(base));
            }
        }
    }
}

TEST_CASE("regime from the hinge solver") {
    const auto f = build_reference_frame();
    CHECK(classify_regime_fem(f, {2e5, 1.5e5}) == Regime::linear);
    CHECK(classify_regime_fem(f, {8e5, 6e5}) == Regime::nonlinear);
    CHECK(classify_regime_fem(f, {0.0, 0.0}) == Regime::linear);
}

TEST_CASE("increment scan") {
    const auto e = portal_yield(build_reference_frame(), 2.35e8);
    const auto rows = increment_scan(8.0e5, 12, e);
    REQUIRE(rows.size() == 12);
    CHECK(rows[0].load_factor == doctest::Approx(1.0 / 12.0));
    CHECK(rows[0].ratio_story1 == doctest::Approx(2.0 * 8e5 / 12.0 / e.yield_shear));
    CHECK(rows[0].ratio_story1 == doctest::Approx(0.311).epsilon(2e-3));
    CHECK(rows[3].step == 4);
    CHECK(rows[3].load_factor == doctest::Approx(0.333).epsilon(1e-3));
    CHECK(rows[3].force == doctest::Approx(2.67e5).epsilon(2e-3));
    CHECK(std::abs(rows[3].ratio_story1 - 1.24) <= 0.01);
    int flagged = 0;
    for (const auto& r : rows) {
        flagged += r.first_yield ? 1 : 0;
        CHECK(r.ratio_story1 / rows[0].ratio_story1 == doctest::Approx(r.step).epsilon(1e-12));
    }
    CHECK(flagged == 1);
    CHECK(rows[3].first_yield);

    const auto single = increment_scan(8.0e5, 1, e);
    REQUIRE(single.size() == 1);
    CHECK(single[0].load_factor == 1.0);
    CHECK_THROWS_AS(increment_scan(8.0e5, 0, e), Error);
}
