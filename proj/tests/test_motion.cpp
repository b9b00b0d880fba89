#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <jcmp/motion.hpp>

#include <random>

using namespace jcmp;
using motion::Vec2;

TEST_CASE("reachable is a closed ball") {
    const motion::MotionParams mp{7.4, 0.29, 1.0};
    CHECK(motion::reachable(Vec2(3, 4), Vec2(3, 4), 10.0, mp));
    CHECK(motion::reachable(Vec2(0, 0), Vec2(10, 0), 10.0, mp));  // boundary
    CHECK(motion::reachable(Vec2(0, 0), Vec2(6, 8), 10.0, mp));   // dist 10
    CHECK_FALSE(motion::reachable(Vec2(0, 0), Vec2(10.01, 0), 10.0, mp));
    CHECK_THROWS_AS(motion::reachable(Vec2(0, 0), Vec2(1, 0), 0.0, mp),
                    std::domain_error);
}

TEST_CASE("reachable is reflexive and symmetric") {
    const motion::MotionParams mp{7.4, 0.29, 2.0};
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> dist(-30.0, 30.0);
    for (int i = 0; i < 300; ++i) {
        const Vec2 a(dist(rng), dist(rng)), b(dist(rng), dist(rng));
        CHECK(motion::reachable(a, a, 7.0, mp));
        CHECK(motion::reachable(a, b, 7.0, mp) == motion::reachable(b, a, 7.0, mp));
    }
}

TEST_CASE("motion_energy is linear in distance") {
    const motion::MotionParams mp{7.4, 0.29, 1.0};
    CHECK(motion::motion_energy(0.0, mp) == 0.0);
    CHECK(motion::motion_energy(1.0, mp) == doctest::Approx(7.69).epsilon(1e-12));
    CHECK(motion::motion_energy(2.0, mp) ==
          doctest::Approx(2.0 * motion::motion_energy(1.0, mp)).epsilon(1e-12));
    CHECK_THROWS_AS(motion::motion_energy(-0.5, mp), std::domain_error);

    // additive over concatenated straight segments
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> dist(0.0, 50.0);
    for (int i = 0; i < 300; ++i) {
        const double a = dist(rng), b = dist(rng);
        CHECK(motion::motion_energy(a, mp) + motion::motion_energy(b, mp) ==
              doctest::Approx(motion::motion_energy(a + b, mp)).epsilon(1e-12));
    }

    // v_max scales only the constant-draw term
    const motion::MotionParams fast{7.4, 0.29, 2.0};
    CHECK(motion::motion_energy(1.0, fast) ==
          doctest::Approx(7.4 + 0.29 / 2.0).epsilon(1e-12));
}

TEST_CASE("parameter validation") {
    CHECK_NOTHROW(motion::validate(motion::MotionParams{0.0, 0.0, 0.5}));
    CHECK_THROWS_AS(motion::validate(motion::MotionParams{-1.0, 0.2, 1.0}),
                    std::domain_error);
    CHECK_THROWS_AS(motion::validate(motion::MotionParams{1.0, -0.2, 1.0}),
                    std::domain_error);
    CHECK_THROWS_AS(motion::validate(motion::MotionParams{1.0, 0.2, 0.0}),
                    std::domain_error);
}
