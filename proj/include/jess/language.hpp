#pragma once

#include "jess/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace jess::language {

enum class RobotModel { Magician, Xarm };
enum class ToolMode { Pen, Feather, Pens4 };

RobotModel robot_from_name(const std::string& name);
ToolMode tool_from_name(const std::string& name);
const char* robot_name(RobotModel m);
const char* tool_name(ToolMode t);

// The four on-page gesture families plus the off-page response.
enum class GestureType { Shape, TreatiseGlyph, WolffGlyph, LineStroke, OffPage3D };
enum class ShapeKind { Square, Triangle, Circle, Starburst };

inline constexpr GestureType kOnPageTypes[4] = {GestureType::Shape, GestureType::TreatiseGlyph,
                                                GestureType::WolffGlyph, GestureType::LineStroke};

const char* gesture_name(GestureType t);

struct Rect {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
};

// Axis-aligned safety volume with the drawing plane and the page inside it.
struct SafetyFence {
    double x0, x1;
    double y0, y1;
    double z0, z1;
    double z_draw;
    Rect page;

    void validate() const;
    bool contains(double x, double y, double z) const {
        return x >= x0 && x <= x1 && y >= y0 && y <= y1 && z >= z0 && z <= z1;
    }
    double hover_z() const;

    static SafetyFence defaults_for(RobotModel model);
};

struct GestureParams {
    double center_x = 0.0, center_y = 0.0; // mm
    double size_mm = 40.0;
    double speed_mm_s = 60.0;
    double accel_mm_s2 = 500.0;
    int pen_index = 0;
    double modulation = 0.5; // [0,1]
    ShapeKind shape = ShapeKind::Circle;
    uint64_t glyph_seed = 0;

    void validate() const;
};

struct SpeedRange {
    double speed_min = 20.0, speed_max = 150.0;      // mm/s
    double accel_min = 100.0, accel_max = 1000.0;    // mm/s^2
};

// Random point location, speed, acceleration, size, shape and glyph seed.
GestureParams random_params(Rng& rng, const SafetyFence& fence, const SpeedRange& range,
                            int pen_index, double modulation);

struct Waypoint {
    double x = 0.0, y = 0.0, z = 0.0;
    double speed = 60.0;
    double accel = 500.0;
    bool pen_down = false;
    int pen_index = 0;
    double dwell_s = 0.0;
};

struct Trajectory {
    std::vector<Waypoint> points;
    std::string label;

    bool empty() const { return points.empty(); }
};

// Deterministic realization of a gesture. Extent and speed scale with
// (0.25 + 0.75 * modulation); every waypoint is clamped into the page and
// the fence.
Trajectory realize(GestureType type, const GestureParams& params, const SafetyFence& fence);

// 2-5 pen-up waypoints strictly above the drawing plane.
Trajectory off_page_gesture(Rng& rng, const SafetyFence& fence, const SpeedRange& range,
                            int pen_index);

// With the 4-pen array a pen is re-drawn uniformly on every off-page gesture;
// other tools keep the current pen.
int maybe_change_pen(ToolMode tool, Rng& rng, int current_pen);

// Pen-up pointing sequence: left extent, right extent, then page center.
Trajectory initiating_sequence(const SafetyFence& fence);
// Same pointing pattern, then a parked pose above the page center.
Trajectory terminating_sequence(const SafetyFence& fence);

} // namespace jess::language
