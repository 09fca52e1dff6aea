#include <doctest.h>

#include <random>

#include "geometry.hpp"
#include "rng.hpp"

using namespace usscan;

TEST_CASE("quat_normalize scales to unit norm") {
    Quaternion q = quat_normalize({2, 0, 0, 0});
    CHECK(q.w == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(q.x == 0.0);

    Quaternion s = quat_normalize({1, 1, 1, 1});
    CHECK(s.w == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s.x == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s.y == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s.z == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::abs(s.norm() - 1.0) <= 1e-12);
}

TEST_CASE("quat_normalize rejects degenerate input") {
    CHECK_THROWS_AS(quat_normalize({0, 0, 0, 0}), DegenerateQuaternion);
    CHECK_THROWS_AS(quat_normalize({1e-13, 0, 0, 0}), DegenerateQuaternion);
}

TEST_CASE("action_between is componentwise subtraction") {
    ProbeFrame a, b;
    b.position = {1, 2, 3};
    Action d = action_between(a, b);
    CHECK(d.dp == Vec3{1, 2, 3});
    CHECK(d.dq == std::array<double, 4>{0, 0, 0, 0});

    Action zero = action_between(a, a);
    CHECK(zero.is_zero());

    ProbeFrame c;
    c.orientation = {0.9239, 0.3827, 0, 0};
    Action dq = action_between(a, c);
    CHECK(dq.dq[0] == doctest::Approx(-0.0761).epsilon(1e-12));
    CHECK(dq.dq[1] == doctest::Approx(0.3827).epsilon(1e-12));
}

TEST_CASE("apply_action identity and clamping") {
    Box box;
    ProbeFrame f;
    f.position = {0.05, -0.02, 0.01};

    ProbeFrame same = apply_action(f, Action{}, box);
    CHECK(same.position == f.position);
    CHECK(same.orientation == f.orientation);

    ProbeFrame g = f;
    g.position = {0.9, 0, 0};
    Box wide{{-1, -1, -1}, {1, 1, 1}};
    Action a;
    a.dp = {0.5, 0, 0};
    ProbeFrame clamped = apply_action(g, a, wide);
    CHECK(clamped.position[0] == 1.0);

    // clamping is idempotent: zero action on a clamped frame is identity
    ProbeFrame again = apply_action(clamped, Action{}, wide);
    CHECK(again.position == clamped.position);
}

TEST_CASE("apply_action rejects degenerate resulting orientation") {
    Box box;
    ProbeFrame f;
    Action a;
    a.dq = {-1, 0, 0, 0};  // cancels the identity quaternion exactly
    CHECK_THROWS_AS(apply_action(f, a, box), DegenerateQuaternion);
}

TEST_CASE("round trip apply_action(action_between) over random frames") {
    std::mt19937_64 rng(99);
    Box box;
    for (int i = 0; i < 200; ++i) {
        auto rand_frame = [&] {
            ProbeFrame f;
            for (int k = 0; k < 3; ++k) f.position[k] = uniform(rng, -0.14, 0.14);
            Vec3 axis{uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)};
            if (norm(axis) < 1e-6) axis = {1, 0, 0};
            f.orientation = Quaternion::from_axis_angle(axis, uniform(rng, -1.0, 1.0));
            return f;
        };
        ProbeFrame f = rand_frame();
        ProbeFrame g = rand_frame();
        ProbeFrame back = apply_action(f, action_between(f, g), box);
        for (int k = 0; k < 3; ++k)
            CHECK(std::abs(back.position[k] - g.position[k]) <= 1e-12);
        CHECK(std::abs(back.orientation.w - g.orientation.w) <= 1e-12);
        CHECK(std::abs(back.orientation.x - g.orientation.x) <= 1e-12);
        CHECK(std::abs(back.orientation.y - g.orientation.y) <= 1e-12);
        CHECK(std::abs(back.orientation.z - g.orientation.z) <= 1e-12);
        CHECK(std::abs(back.orientation.norm() - 1.0) <= 1e-9);
    }
}

TEST_CASE("cap_action preserves direction and caps magnitude") {
    Action a;
    a.dp = {0.03, 0.04, 0.0};
    Action c = cap_action(a, 0.01);
    CHECK(norm(c.dp) == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(c.dp[0] / c.dp[1] == doctest::Approx(0.75).epsilon(1e-12));

    Action small;
    small.dp = {0.001, 0, 0};
    CHECK(cap_action(small, 0.01).dp == small.dp);
}
