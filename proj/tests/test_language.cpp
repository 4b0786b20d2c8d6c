#include "jess/language.hpp"

#include "jess/errors.hpp"
#include "jess/rng.hpp"

#include "doctest.h"

#include <cmath>

using namespace jess;
using namespace jess::language;

namespace {

bool on_page_or_fence(const Trajectory& traj, const SafetyFence& fence) {
    for (const Waypoint& wp : traj.points) {
        if (!fence.contains(wp.x, wp.y, wp.z)) return false;
    }
    return true;
}

double max_extent_from(const Trajectory& traj, double cx, double cy) {
    double worst = 0.0;
    for (const Waypoint& wp : traj.points) {
        if (!wp.pen_down) continue;
        worst = std::max(worst, std::hypot(wp.x - cx, wp.y - cy));
    }
    return worst;
}

} // namespace

TEST_SUITE_BEGIN("language");

TEST_CASE("a full-modulation circle stays on its radius") {
    const SafetyFence fence = SafetyFence::defaults_for(RobotModel::Xarm);
    GestureParams p;
    p.center_x = 0.0;
    p.center_y = 225.0;
    p.size_mm = 40.0;
    p.modulation = 1.0;
    p.shape = ShapeKind::Circle;
    const Trajectory traj = realize(GestureType::Shape, p, fence);
    int drawn = 0;
    for (const Waypoint& wp : traj.points) {
        if (!wp.pen_down) continue;
        const double r = std::hypot(wp.x - p.center_x, wp.y - p.center_y);
        REQUIRE(std::abs(r - 20.0) < 0.5);
        ++drawn;
    }
    CHECK(drawn >= 36);
}

TEST_CASE("modulation zero keeps a quarter of the size") {
    const SafetyFence fence = SafetyFence::defaults_for(RobotModel::Xarm);
    GestureParams p;
    p.center_x = 0.0;
    p.center_y = 225.0;
    p.size_mm = 80.0;
    p.modulation = 0.0;
    p.shape = ShapeKind::Circle;
    const Trajectory traj = realize(GestureType::Shape, p, fence);
    const double r = max_extent_from(traj, p.center_x, p.center_y);
    CHECK(r == doctest::Approx(0.25 * 80.0 / 2.0).epsilon(0.05));
    // speed is scaled by the same factor
    for (const Waypoint& wp : traj.points) {
        CHECK(wp.speed == doctest::Approx(0.25 * p.speed_mm_s));
    }
}

TEST_CASE("extent and speed are monotone in modulation") {
    const SafetyFence fence = SafetyFence::defaults_for(RobotModel::Xarm);
    double prev_extent = -1.0, prev_speed = -1.0;
    for (double mod : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        GestureParams p;
        p.center_x = 0.0;
        p.center_y = 225.0;
        p.size_mm = 60.0;
        p.modulation = mod;
        p.shape = ShapeKind::Square;
        const Trajectory traj = realize(GestureType::Shape, p, fence);
        const double extent = max_extent_from(traj, p.center_x, p.center_y);
        REQUIRE(extent >= prev_extent);
        REQUIRE(traj.points[0].speed >= prev_speed);
        prev_extent = extent;
        prev_speed = traj.points[0].speed;
    }
}

TEST_CASE("a center outside the page still yields in-fence waypoints") {
    const SafetyFence fence = SafetyFence::defaults_for(RobotModel::Xarm);
    GestureParams p;
    p.center_x = fence.x1 + 500.0; // far outside
    p.center_y = -100.0;
    p.size_mm = 50.0;
    p.shape = ShapeKind::Starburst;
    const Trajectory traj = realize(GestureType::Shape, p, fence);
    CHECK(on_page_or_fence(traj, fence));
    for (const Waypoint& wp : traj.points) {
        if (wp.pen_down) {
            CHECK(fence.page.contains(wp.x, wp.y));
        }
    }
}

TEST_CASE("realize is deterministic for a fixed glyph seed") {
    const SafetyFence fence = SafetyFence::defaults_for(RobotModel::Xarm);
    GestureParams p;
    p.center_x = 10.0;
    p.center_y = 200.0;
    p.size_mm = 70.0;
    p.modulation = 0.6;
    p.glyph_seed = 12345;
    for (GestureType type : {GestureType::TreatiseGlyph, GestureType::WolffGlyph,
                             GestureType::LineStroke}) {
        const Trajectory a = realize(type, p, fence);
        const Trajectory b = realize(type, p, fence);
        REQUIRE(a.points.size() == b.points.size());
        for (size_t i = 0; i < a.points.size(); ++i) {
            REQUIRE(a.points[i].x == b.points[i].x);
            REQUIRE(a.points[i].y == b.points[i].y);
            REQUIRE(a.points[i].z == b.points[i].z);
        }
    }
}

TEST_CASE("on-page gestures draw only at the drawing height") {
    const SafetyFence fence = SafetyFence::defaults_for(RobotModel::Magician);
    Rng rng(77);
    SpeedRange range;
    for (int trial = 0; trial < 200; ++trial) {
        const GestureParams p = random_params(rng, fence, range, 0, rng.uniform01());
        for (GestureType type : kOnPageTypes) {
            const Trajectory traj = realize(type, p, fence);
            bool any_ink = false;
            for (const Waypoint& wp : traj.points) {
                if (wp.pen_down) {
                    REQUIRE(wp.z == fence.z_draw);
                    any_ink = true;
                }
            }
            REQUIRE(any_ink);
        }
    }
}

TEST_CASE("every waypoint of every gesture type stays inside the fence") {
    // 10,000 random parameter draws across all types
    for (RobotModel model : {RobotModel::Xarm, RobotModel::Magician}) {
        const SafetyFence fence = SafetyFence::defaults_for(model);
        Rng rng(model == RobotModel::Xarm ? 1001 : 2002);
        SpeedRange range;
        for (int trial = 0; trial < 1250; ++trial) {
            const GestureParams p = random_params(rng, fence, range, 0, rng.uniform01());
            for (GestureType type : {GestureType::Shape, GestureType::TreatiseGlyph,
                                     GestureType::WolffGlyph, GestureType::LineStroke}) {
                REQUIRE(on_page_or_fence(realize(type, p, fence), fence));
            }
        }
    }
}

TEST_CASE("off-page gestures stay above the page with the pen up") {
    const SafetyFence fence = SafetyFence::defaults_for(RobotModel::Xarm);
    Rng rng(31);
    SpeedRange range;
    for (int trial = 0; trial < 10000; ++trial) {
        const Trajectory traj = off_page_gesture(rng, fence, range, 1);
        REQUIRE(traj.points.size() >= 2);
        REQUIRE(traj.points.size() <= 5);
        for (const Waypoint& wp : traj.points) {
            REQUIRE(fence.contains(wp.x, wp.y, wp.z));
            REQUIRE(wp.z > fence.z_draw);
            REQUIRE(!wp.pen_down);
        }
    }
}

TEST_CASE("pen changes are uniform over the four pens in pens4 mode") {
    Rng rng(5);
    int counts[4] = {0, 0, 0, 0};
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
        counts[maybe_change_pen(ToolMode::Pens4, rng, 0)] += 1;
    }
    for (int c = 0; c < 4; ++c) {
        const double freq = static_cast<double>(counts[c]) / n;
        REQUIRE(std::abs(freq - 0.25) <= 0.01); // 3 sigma is ~0.0065
    }

    CHECK(maybe_change_pen(ToolMode::Pen, rng, 2) == 2);
    CHECK(maybe_change_pen(ToolMode::Feather, rng, 3) == 3);
}

TEST_CASE("the initiating sequence points at both horizontal extents, pen up") {
    const SafetyFence fence = SafetyFence::defaults_for(RobotModel::Xarm);
    const Trajectory traj = initiating_sequence(fence);
    REQUIRE(traj.points.size() >= 3);
    CHECK(traj.points[0].x == doctest::Approx(fence.x0 + 10.0));
    CHECK(traj.points[1].x == doctest::Approx(fence.x1 - 10.0));
    CHECK(traj.points[0].dwell_s > 0.0);
    for (const Waypoint& wp : traj.points) {
        CHECK(!wp.pen_down);
        CHECK(fence.contains(wp.x, wp.y, wp.z));
    }
    // deterministic across calls
    const Trajectory again = initiating_sequence(fence);
    REQUIRE(traj.points.size() == again.points.size());
    for (size_t i = 0; i < traj.points.size(); ++i) {
        CHECK(traj.points[i].x == again.points[i].x);
    }
}

TEST_CASE("the terminating sequence ends in a parked pose") {
    const SafetyFence fence = SafetyFence::defaults_for(RobotModel::Xarm);
    const Trajectory traj = terminating_sequence(fence);
    REQUIRE(traj.points.size() >= 4);
    CHECK(traj.points.back().z > fence.hover_z());
    for (const Waypoint& wp : traj.points) CHECK(!wp.pen_down);
}

TEST_CASE("degenerate fences are rejected") {
    SafetyFence f = SafetyFence::defaults_for(RobotModel::Xarm);
    f.page = {100.0, 100.0, 100.0, 100.0}; // empty page
    GestureParams p;
    CHECK_THROWS_AS(realize(GestureType::Shape, p, f), ConfigError);
}

TEST_SUITE_END();
