#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cbfpred/constraints.hpp"

using namespace cbfpred;

namespace {

ObstacleField single_disk() {
    ObstacleField f;
    f.circles = {{0.0, 0.0, 5.0}};
    return f;
}

const double kRadius = 2.7926031172390093;  // min turn radius for L=1, zeta_max=20deg

}  // namespace

TEST_CASE("field validation rejects degenerate inputs") {
    ObstacleField empty;
    CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
    ObstacleField dup;
    dup.circles = {{1.0, 2.0, 3.0}, {1.0, 2.0, 0.5}};
    CHECK_THROWS_AS(dup.validate(), std::invalid_argument);
    Circle bad{0.0, 0.0, 0.0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("clearance h: signed distance to the nearest disk boundary") {
    const ObstacleField f = single_disk();
    CHECK(f.h(10.0, 0.0) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(f.h(0.0, 0.0) == doctest::Approx(-5.0).epsilon(1e-15));
    CHECK(f.h(3.0, 4.0) == doctest::Approx(0.0));
    CHECK(f.h(State(0.0, 7.0, 1.0)) == doctest::Approx(2.0).epsilon(1e-15));

    ObstacleField two;
    two.circles = {{0.0, 0.0, 5.0}, {14.0, 6.0, 5.0}};
    CHECK(two.h(12.0, 6.0) == doctest::Approx(-3.0).epsilon(1e-14));
    CHECK(two.h(7.0, 0.0) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("clearance gradient: unit radial, lowest index wins ties") {
    const ObstacleField f = single_disk();
    GradientResult g = f.h_gradient(10.0, 0.0);
    CHECK(g.gx == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(g.gy == doctest::Approx(0.0));
    CHECK_FALSE(g.tie);
    g = f.h_gradient(3.0, 4.0);
    CHECK(g.gx == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(g.gy == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(std::hypot(g.gx, g.gy) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(f.h_gradient(0.0, 0.0), std::domain_error);

    ObstacleField two;
    two.circles = {{0.0, 0.0, 1.0}, {4.0, 0.0, 1.0}};
    g = two.h_gradient(2.0, 0.0);
    CHECK(g.tie);
    CHECK(g.gx == doctest::Approx(1.0).epsilon(1e-15));  // first circle used
}

TEST_CASE("outward alignment sign follows the heading") {
    const ObstacleField f = single_disk();
    CHECK(f.outward_alignment(State(10.0, 0.0, 0.0)) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(f.outward_alignment(State(10.0, 0.0, M_PI)) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(f.outward_alignment(State(10.0, 0.0, M_PI / 2.0)) == doctest::Approx(0.0));
    CHECK(f.outward_alignment_or(State(0.0, 0.0, 0.3), -1.0) == -1.0);
}

TEST_CASE("target set membership and violation, margin-only") {
    const ObstacleField f = single_disk();
    FSetSpec spec;
    spec.kind = FSetKind::MarginOnly;
    spec.delta = 2.0;
    spec.extra_margin = 1.5;
    spec.validate();
    CHECK(spec.contains(f, State(10.0, 0.0, M_PI)));  // heading ignored
    CHECK_FALSE(spec.contains(f, State(8.0, 0.0, 0.0)));
    CHECK(spec.violation(f, State(10.0, 0.0, 0.0)) == doctest::Approx(-1.5).epsilon(1e-14));
    CHECK(spec.violation(f, State(8.0, 0.0, 0.0)) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("target set membership and violation, margin and outward heading") {
    const ObstacleField f = single_disk();
    FSetSpec spec;
    spec.kind = FSetKind::MarginAndOutward;
    spec.delta = 2.0;
    spec.validate();
    CHECK(spec.contains(f, State(10.0, 0.0, 0.0)));
    CHECK(spec.contains(f, State(10.0, 0.0, M_PI / 2.0), 1e-9));  // tangential is borderline
    CHECK_FALSE(spec.contains(f, State(10.0, 0.0, M_PI)));  // inward heading
    CHECK(spec.contains(f, State(8.0, 0.0, 0.0)));          // outward, margin met
    CHECK_FALSE(spec.contains(f, State(6.5, 0.0, 0.0)));    // too close
    // violation is the worse of the two gaps: margin -3, alignment -1
    CHECK(spec.violation(f, State(10.0, 0.0, 0.0)) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(spec.violation(f, State(10.0, 0.0, M_PI)) == doctest::Approx(1.0).epsilon(1e-12));
    // exact center: clearance term dominates, alignment falls back to -1
    CHECK(spec.violation(f, State(0.0, 0.0, 0.0)) == doctest::Approx(7.0).epsilon(1e-14));

    FSetSpec bad;
    bad.delta = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("membership time bound, single circle") {
    const InputBounds b{1.0, 5.0, M_PI / 9.0};
    const Circle c{0.0, 0.0, 5.0};
    CHECK(tau_bound(c, FSetKind::MarginOnly, kRadius, kRadius, b) ==
          doctest::Approx(3.4302061578454115).epsilon(1e-15));
    CHECK(tau_bound(c, FSetKind::MarginAndOutward, kRadius, kRadius, b) ==
          doctest::Approx(2.3131649109498076).epsilon(1e-15));
    // huge disk: the turn-and-escape branch wins and the disk radius drops out
    const Circle big{0.0, 0.0, 500.0};
    CHECK(tau_bound(big, FSetKind::MarginAndOutward, kRadius, kRadius, b) ==
          doctest::Approx((M_PI * kRadius + kRadius) / 5.0).epsilon(1e-15));
}

TEST_CASE("membership time bound, field = worst circle") {
    const InputBounds b{1.0, 5.0, M_PI / 9.0};
    ObstacleField f;
    f.circles = {{0.0, 0.0, 5.0}, {20.0, 0.0, 1.0}};
    const double single5 = tau_bound(Circle{0.0, 0.0, 5.0}, FSetKind::MarginAndOutward, kRadius,
                                     kRadius, b);
    CHECK(tau_bound(f, FSetKind::MarginAndOutward, kRadius, kRadius, b) ==
          doctest::Approx(single5).epsilon(1e-15));
}

TEST_CASE("piecewise-linear class-K gain") {
    ClassK alpha;
    alpha.knee = kRadius;
    alpha.validate();
    CHECK(alpha(0.0) == 0.0);
    CHECK(alpha(1.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(alpha(kRadius) == doctest::Approx(1.3963015586195047).epsilon(1e-15));
    CHECK(alpha(kRadius + 0.1) == doctest::Approx(1.3963015586195047 + 5.0).epsilon(1e-13));
    CHECK(alpha(-2.0) == doctest::Approx(-1.0).epsilon(1e-15));

    ClassK bad;
    bad.k2 = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("membership-keeping input: coast when settled, steer outward otherwise") {
    const ObstacleField f = single_disk();
    const InputBounds b{1.0, 5.0, M_PI / 9.0};
    FSetSpec spec;
    spec.kind = FSetKind::MarginAndOutward;
    spec.delta = 2.0;

    Input u = f_keeping_input(State(10.0, 0.0, 0.0), f, spec, b);
    CHECK(u.v == b.v_min);
    CHECK(u.zeta == 0.0);

    u = f_keeping_input(State(10.0, 0.0, M_PI), f, spec, b);
    CHECK(u.v == b.v_max);
    CHECK(std::abs(u.zeta) == doctest::Approx(b.zeta_max).epsilon(1e-15));

    FSetSpec wide;
    wide.kind = FSetKind::MarginOnly;
    wide.delta = 2.0;
    wide.extra_margin = 4.0;
    u = f_keeping_input(State(10.0, 0.0, 0.0), f, wide, b);  // aligned but short of margin
    CHECK(u.v == b.v_max);
    CHECK(u.zeta == 0.0);
}

TEST_CASE("coasting straight from an outward member keeps the margin") {
    const ObstacleField f = single_disk();
    const InputBounds b{1.0, 5.0, M_PI / 9.0};
    FSetSpec spec;
    spec.kind = FSetKind::MarginAndOutward;
    spec.delta = 2.0;
    State s(5.0, 5.2, 0.45);
    REQUIRE(spec.contains(f, s));
    const BicycleParams p{1.0};
    for (int k = 0; k < 200; ++k) {
        s = constant_input_arc(s, f_keeping_input(s, f, spec, b), p, 0.05);
        CHECK(f.h(s) >= spec.delta - 1e-9);
    }
}
