#include "vreg/env.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "doctest.h"
#include "vreg/errors.hpp"

using namespace vreg;
using env::Action;
using env::Axis;
using env::EnvState;
using env::MdpConfig;
using env::Vector6;

namespace {

Vector6 make_v(double tx, double ty = 0, double tz = 0, double rx = 0,
               double ry = 0, double rz = 0) {
    Vector6 v;
    v << tx, ty, tz, rx, ry, rz;
    return v;
}

}  // namespace

TEST_CASE("action_set arity and structure") {
    const auto a3 = env::action_set(3);
    CHECK(a3.size() == 12);
    const auto a2 = env::action_set(2);
    CHECK(a2.size() == 6);
    std::map<int, int> signs;
    for (const auto& a : a3) signs[static_cast<int>(a.axis)] += a.sign;
    CHECK(signs.size() == 6);
    for (const auto& [axis, sum] : signs) CHECK(sum == 0);  // one +- pair each
    for (const auto& a : a2) {
        CHECK((a.axis == Axis::tx || a.axis == Axis::ty || a.axis == Axis::rz));
    }
    CHECK_THROWS_AS(env::action_set(4), ConfigError);
}

TEST_CASE("action and its opposite cancel in ideal mode") {
    const MdpConfig cfg;
    Rng rng(3);
    for (const auto& a : env::action_set(3)) {
        const Vector6 v = make_v(rng.uniform(-5, 5), rng.uniform(-5, 5),
                                 rng.uniform(-5, 5), rng.uniform(-5, 5),
                                 rng.uniform(-5, 5), rng.uniform(-5, 5));
        EnvState s = env::make_ideal_state(v);
        const Action opposite{a.axis, -a.sign};
        const EnvState after =
            env::step(env::step(s, a, cfg).state, opposite, cfg).state;
        CHECK((after.v - v).norm() < 1e-12);
    }
}

TEST_CASE("step rewards match the distance change") {
    const MdpConfig cfg;
    EnvState s = env::make_ideal_state(make_v(3));

    // moving tx toward zero pays +1
    const auto down = env::step(s, {Axis::tx, +1}, cfg);
    CHECK(down.reward == doctest::Approx(1.0));
    CHECK(down.state.v[0] == doctest::Approx(2.0));

    // moving tx away pays -1
    const auto up = env::step(s, {Axis::tx, -1}, cfg);
    CHECK(up.reward == doctest::Approx(-1.0));

    // moving an orthogonal axis pays 3 - sqrt(10)
    const auto side = env::step(s, {Axis::ty, +1}, cfg);
    CHECK(side.reward == doctest::Approx(3.0 - std::sqrt(10.0)).epsilon(1e-12));
}

TEST_CASE("ideal state keeps transform and residual consistent") {
    const MdpConfig cfg;
    Rng rng(17);
    for (int i = 0; i < 200; ++i) {
        const Vector6 v = make_v(rng.uniform(-20, 20), rng.uniform(-20, 20),
                                 rng.uniform(-20, 20), rng.uniform(-20, 20),
                                 rng.uniform(-20, 20), rng.uniform(-20, 20));
        const EnvState s = env::make_ideal_state(v);
        CHECK(geom::distance(s.tg, s.t) ==
              doctest::Approx(s.v.norm()).epsilon(1e-9));
    }
}

TEST_CASE("image mode translations are exact unit moves in v") {
    const MdpConfig cfg;
    const EnvState s = env::make_image_state(
        geom::invert(geom::transform_from_params(make_v(3, -2, 1))),
        geom::RigidTransform::identity());
    CHECK((s.v - make_v(3, -2, 1)).norm() < 1e-12);
    const auto r = env::step(s, {Axis::tx, +1}, cfg);
    CHECK((r.state.v - make_v(2, -2, 1)).norm() < 1e-9);
    CHECK(r.reward == doctest::Approx(make_v(3, -2, 1).norm() -
                                      make_v(2, -2, 1).norm()));
}

TEST_CASE("image mode rotations change v only approximately") {
    const MdpConfig cfg;
    const EnvState s = env::make_image_state(
        geom::invert(geom::transform_from_params(make_v(5, 0, 0, 0, 0, 8))),
        geom::RigidTransform::identity());
    const auto r = env::step(s, {Axis::rz, +1}, cfg);
    // rz component moves by about -1; translation picks up a small coupling
    CHECK(r.state.v[5] == doctest::Approx(s.v[5] - 1.0).epsilon(0.05));
    CHECK((r.state.v - s.v).norm() == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("is_terminal tolerance") {
    const MdpConfig cfg;
    CHECK(env::is_terminal(env::make_ideal_state(Vector6::Zero()), cfg));
    CHECK(env::is_terminal(env::make_ideal_state(make_v(0.4)), cfg));
    CHECK_FALSE(env::is_terminal(env::make_ideal_state(make_v(1.0)), cfg));
}

TEST_CASE("optimal_action picks the distance-minimizing move") {
    const MdpConfig cfg;
    Rng rng(5);
    const Action a = env::optimal_action(env::make_ideal_state(make_v(3)), cfg, rng);
    CHECK(a.axis == Axis::tx);
    CHECK(a.sign == +1);
    const auto next = env::step(env::make_ideal_state(make_v(3)), a, cfg);
    CHECK(env::state_distance(next.state, cfg) == doctest::Approx(2.0));
}

TEST_CASE("optimal_action breaks ties uniformly") {
    const MdpConfig cfg;
    Rng rng(9);

    // at the origin all 12 actions tie
    std::map<std::pair<int, int>, int> counts;
    const int n = 24000;
    for (int i = 0; i < n; ++i) {
        const Action a =
            env::optimal_action(env::make_ideal_state(Vector6::Zero()), cfg, rng);
        counts[{static_cast<int>(a.axis), a.sign}]++;
    }
    CHECK(counts.size() == 12);
    const double expect = n / 12.0;
    const double sigma = std::sqrt(n * (1.0 / 12) * (11.0 / 12));
    for (const auto& [key, c] : counts) {
        CHECK(std::abs(c - expect) <= 4 * sigma);
    }

    // (2,2,0,...) ties the two decreasing moves at sqrt(5)
    counts.clear();
    for (int i = 0; i < 4000; ++i) {
        const Action a =
            env::optimal_action(env::make_ideal_state(make_v(2, 2)), cfg, rng);
        counts[{static_cast<int>(a.axis), a.sign}]++;
    }
    CHECK(counts.size() == 2);
    CHECK(counts.at({0, +1}) > 1500);
    CHECK(counts.at({1, +1}) > 1500);
}

TEST_CASE("q_value spot values") {
    const MdpConfig cfg;
    const EnvState one = env::make_ideal_state(make_v(1));
    CHECK(env::q_value(one, {Axis::tx, +1}, cfg) == doctest::Approx(11.0));

    const EnvState two = env::make_ideal_state(make_v(2));
    CHECK(env::q_value(two, {Axis::tx, +1}, cfg) == doctest::Approx(10.9));

    // worst action from v=1: increase, then walk back optimally
    CHECK(env::q_value(one, {Axis::tx, -1}, cfg) ==
          doctest::Approx(8.81).epsilon(1e-12));
}

TEST_CASE("q_closed_form") {
    const MdpConfig cfg;
    CHECK(env::q_closed_form(0, cfg) == doctest::Approx(11.0));
    CHECK(env::q_closed_form(1, cfg) == doctest::Approx(10.9));
    CHECK(env::q_closed_form(400, cfg) == doctest::Approx(10.0).epsilon(1e-9));
    // monotone decrease toward 1/(1-gamma)
    for (int p = 1; p <= 50; ++p) {
        CHECK(env::q_closed_form(p, cfg) < env::q_closed_form(p - 1, cfg));
        CHECK(env::q_closed_form(p, cfg) > 10.0);
    }
}

TEST_CASE("recursive q matches the closed form on axis-aligned states") {
    const MdpConfig cfg;
    for (int p = 0; p < 40; ++p) {
        const EnvState s = env::make_ideal_state(make_v(p + 1));
        CHECK(env::q_value(s, {Axis::tx, +1}, cfg) ==
              doctest::Approx(env::q_closed_form(p, cfg)).epsilon(1e-12));
    }
}

TEST_CASE("q_star and q_target agree with the discrete recursion where both apply") {
    const MdpConfig cfg;
    // integer distances: continuous-play value equals the closed form
    for (int p = 0; p < 300; ++p) {
        CHECK(env::q_star(p + 1, cfg) ==
              doctest::Approx(env::q_closed_form(p, cfg)).epsilon(1e-12));
    }
    // actions that keep the state axis-aligned: q_target equals the
    // recursive q_value; lateral moves leave the axis and the continuous
    // continuation can only improve on the discrete zigzag
    for (int k = 1; k <= 30; ++k) {
        const EnvState s = env::make_ideal_state(make_v(k));
        for (const auto& a : env::action_set(3)) {
            if (a.axis == Axis::tx) {
                CHECK(env::q_target(s, a, cfg) ==
                      doctest::Approx(env::q_value(s, a, cfg)).epsilon(1e-9));
            } else {
                CHECK(env::q_target(s, a, cfg) >=
                      env::q_value(s, a, cfg) - 1e-9);
            }
        }
    }
    // continuous residuals: q_target is total where the recursion is not
    const EnvState frac = env::make_ideal_state(make_v(0.5, 0.5));
    CHECK(std::isfinite(env::q_target(frac, {Axis::tx, +1}, cfg)));
}

TEST_CASE("q recursion depth guard fires on non-contracting states") {
    const MdpConfig cfg;
    // |v| = 0.5 on two axes: every unit action leaves the distance fixed
    const EnvState s = env::make_ideal_state(make_v(0.5, 0.5));
    CHECK_THROWS_AS(env::q_value(s, {Axis::tx, +1}, cfg), DepthExceededError);
}

TEST_CASE("bounds clamp instead of aborting") {
    MdpConfig cfg;
    EnvState s = env::make_ideal_state(make_v(30));
    const auto r = env::step(s, {Axis::tx, -1}, cfg);  // pushes tx to 31
    CHECK(r.clamped);
    CHECK(r.state.v[0] == doctest::Approx(30.0));
    CHECK(r.reward == doctest::Approx(0.0));
}

TEST_CASE("greedy contraction from integer states") {
    const MdpConfig cfg;
    Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        Vector6 v;
        for (int i = 0; i < 6; ++i) {
            v[i] = static_cast<double>(
                static_cast<long>(rng.uniform_int(11)) - 5);
        }
        EnvState s = env::make_ideal_state(v);
        const long l1 = static_cast<long>(v.cwiseAbs().sum());
        long steps = 0;
        while (!env::is_terminal(s, cfg) && steps <= l1) {
            const Action a = env::optimal_action(s, cfg, rng);
            s = env::step(s, a, cfg).state;
            ++steps;
        }
        CHECK(env::is_terminal(s, cfg));
        CHECK(steps == l1);  // one unit of L1 distance per step
    }
}

TEST_CASE("trajectory csv") {
    namespace fs = std::filesystem;
    env::Trajectory traj;
    env::TrajectoryStep a;
    a.step = 0;
    a.v = make_v(1, 2, 3);
    a.action = {Axis::ty, -1};
    a.reward = 0.5;
    a.q_target = 10.25;
    traj.push_back(a);
    env::TrajectoryStep b;
    b.step = 1;
    b.action = {Axis::rz, +1};
    traj.push_back(b);

    const std::string path =
        (fs::temp_directory_path() / "vreg_test_traj.csv").string();
    env::write_trajectory_csv(path, traj);
    std::ifstream is(path);
    std::string header, row0, row1;
    std::getline(is, header);
    std::getline(is, row0);
    std::getline(is, row1);
    CHECK(header == "step,v1,v2,v3,v4,v5,v6,action_axis,action_sign,reward,q_target");
    CHECK(row0 == "0,1,2,3,0,0,0,ty,-1,0.5,10.25");
    CHECK(row1 == "1,,,,,,,rz,1,,");
    fs::remove(path);
}

TEST_CASE("mdp config invariants") {
    MdpConfig bad;
    bad.bonus = 8.0;  // <= gamma / (1 - gamma) = 9
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    MdpConfig good;
    CHECK_NOTHROW(good.validate());
}
