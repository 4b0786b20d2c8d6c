#include "jess/language.hpp"

#include "jess/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace jess::language {

namespace {
constexpr double kTau = 2.0 * std::numbers::pi;
constexpr double kEdgeMargin = 10.0; // mm kept clear of the fence walls

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }
} // namespace

RobotModel robot_from_name(const std::string& name) {
    if (name == "magician") return RobotModel::Magician;
    if (name == "xarm") return RobotModel::Xarm;
    throw ConfigError("unknown robot model: " + name);
}

ToolMode tool_from_name(const std::string& name) {
    if (name == "pen") return ToolMode::Pen;
    if (name == "feather") return ToolMode::Feather;
    if (name == "pens4") return ToolMode::Pens4;
    throw ConfigError("unknown tool mode: " + name);
}

const char* robot_name(RobotModel m) { return m == RobotModel::Magician ? "magician" : "xarm"; }

const char* tool_name(ToolMode t) {
    switch (t) {
    case ToolMode::Pen: return "pen";
    case ToolMode::Feather: return "feather";
    case ToolMode::Pens4: return "pens4";
    }
    return "?";
}

const char* gesture_name(GestureType t) {
    switch (t) {
    case GestureType::Shape: return "shape";
    case GestureType::TreatiseGlyph: return "treatise_glyph";
    case GestureType::WolffGlyph: return "wolff_glyph";
    case GestureType::LineStroke: return "line_stroke";
    case GestureType::OffPage3D: return "off_page_3d";
    }
    return "?";
}

void SafetyFence::validate() const {
    if (!(x0 < x1 && y0 < y1 && z0 <= z_draw && z_draw < z1)) {
        throw ConfigError("fence bounds are degenerate");
    }
    if (!(page.x0 >= x0 && page.x1 <= x1 && page.y0 >= y0 && page.y1 <= y1 &&
          page.x0 < page.x1 && page.y0 < page.y1)) {
        throw ConfigError("page must be a non-empty rectangle inside the fence footprint");
    }
}

double SafetyFence::hover_z() const { return std::min(z1, z_draw + 40.0); }

SafetyFence SafetyFence::defaults_for(RobotModel model) {
    SafetyFence f;
    if (model == RobotModel::Xarm) {
        f.x0 = -250.0;
        f.x1 = 250.0;
        f.y0 = 50.0;
        f.y1 = 400.0;
        f.z0 = 5.0;
        f.z1 = 200.0;
        f.z_draw = 10.0;
        f.page = {-200.0, 85.0, 200.0, 365.0}; // 400 x 280 mm, centered
    } else {
        f.x0 = -120.0;
        f.x1 = 120.0;
        f.y0 = 40.0;
        f.y1 = 220.0;
        f.z0 = 4.0;
        f.z1 = 120.0;
        f.z_draw = 8.0;
        f.page = {-100.0, 60.0, 100.0, 200.0}; // 200 x 140 mm, centered
    }
    f.validate();
    return f;
}

void GestureParams::validate() const {
    if (!(size_mm > 0.0 && speed_mm_s > 0.0 && accel_mm_s2 > 0.0)) {
        throw InputError("gesture size, speed and acceleration must be positive");
    }
    if (modulation < 0.0 || modulation > 1.0) {
        throw InputError("modulation must lie in [0,1]");
    }
    if (pen_index < 0 || pen_index > 3) {
        throw InputError("pen index must lie in 0..3");
    }
}

GestureParams random_params(Rng& rng, const SafetyFence& fence, const SpeedRange& range,
                            int pen_index, double modulation) {
    GestureParams p;
    p.center_x = rng.uniform(fence.page.x0, fence.page.x1);
    p.center_y = rng.uniform(fence.page.y0, fence.page.y1);
    p.size_mm = rng.uniform(0.1, 0.35) * std::min(fence.page.width(), fence.page.height());
    p.speed_mm_s = rng.uniform(range.speed_min, range.speed_max);
    p.accel_mm_s2 = rng.uniform(range.accel_min, range.accel_max);
    p.pen_index = pen_index;
    p.modulation = modulation;
    p.shape = static_cast<ShapeKind>(rng.uniform_index(4));
    p.glyph_seed = rng.next_u64();
    return p;
}

namespace {

struct Path2D {
    std::vector<std::pair<double, double>> pts;
};

Path2D shape_path(ShapeKind kind, double cx, double cy, double extent) {
    Path2D path;
    const double r = extent / 2.0;
    switch (kind) {
    case ShapeKind::Square: {
        path.pts = {{cx - r, cy - r}, {cx + r, cy - r}, {cx + r, cy + r}, {cx - r, cy + r},
                    {cx - r, cy - r}};
        break;
    }
    case ShapeKind::Triangle: {
        for (int i = 0; i <= 3; ++i) {
            const double a = kTau * i / 3.0 + kTau / 4.0;
            path.pts.emplace_back(cx + r * std::cos(a), cy + r * std::sin(a));
        }
        break;
    }
    case ShapeKind::Circle: {
        const int segments = 36;
        for (int i = 0; i <= segments; ++i) {
            const double a = kTau * i / segments;
            path.pts.emplace_back(cx + r * std::cos(a), cy + r * std::sin(a));
        }
        break;
    }
    case ShapeKind::Starburst: {
        // five-point star, alternating outer and inner radius
        const int tips = 5;
        for (int i = 0; i <= 2 * tips; ++i) {
            const double a = kTau * i / (2.0 * tips) + kTau / 4.0;
            const double rr = (i % 2 == 0) ? r : 0.4 * r;
            path.pts.emplace_back(cx + rr * std::cos(a), cy + rr * std::sin(a));
        }
        break;
    }
    }
    return path;
}

// Catmull-Rom spline through seeded control points: smooth curve material.
Path2D treatise_path(Rng& rng, double cx, double cy, double extent) {
    const int n_ctrl = 4 + static_cast<int>(rng.uniform_index(4)); // 4..7
    std::vector<std::pair<double, double>> ctrl;
    for (int i = 0; i < n_ctrl; ++i) {
        ctrl.emplace_back(cx + extent * rng.uniform(-0.5, 0.5),
                          cy + extent * rng.uniform(-0.5, 0.5));
    }
    Path2D path;
    const int steps = 8;
    for (int i = 0; i + 1 < n_ctrl; ++i) {
        const auto& p0 = ctrl[static_cast<size_t>(std::max(0, i - 1))];
        const auto& p1 = ctrl[static_cast<size_t>(i)];
        const auto& p2 = ctrl[static_cast<size_t>(i + 1)];
        const auto& p3 = ctrl[static_cast<size_t>(std::min(n_ctrl - 1, i + 2))];
        for (int s = 0; s < steps; ++s) {
            const double t = static_cast<double>(s) / steps;
            const double t2 = t * t, t3 = t2 * t;
            const double x = 0.5 * ((2.0 * p1.first) + (-p0.first + p2.first) * t +
                                    (2.0 * p0.first - 5.0 * p1.first + 4.0 * p2.first - p3.first) * t2 +
                                    (-p0.first + 3.0 * p1.first - 3.0 * p2.first + p3.first) * t3);
            const double y = 0.5 * ((2.0 * p1.second) + (-p0.second + p2.second) * t +
                                    (2.0 * p0.second - 5.0 * p1.second + 4.0 * p2.second - p3.second) * t2 +
                                    (-p0.second + 3.0 * p1.second - 3.0 * p2.second + p3.second) * t3);
            path.pts.emplace_back(x, y);
        }
    }
    path.pts.push_back(ctrl.back());
    return path;
}

// Sharp segment clusters: angular jump material.
Path2D wolff_path(Rng& rng, double cx, double cy, double extent) {
    const int segments = 3 + static_cast<int>(rng.uniform_index(5)); // 3..7
    Path2D path;
    double x = cx + extent * rng.uniform(-0.5, 0.5);
    double y = cy + extent * rng.uniform(-0.5, 0.5);
    path.pts.emplace_back(x, y);
    double angle = rng.uniform(0.0, kTau);
    for (int i = 0; i < segments; ++i) {
        // sharp direction change every segment
        angle += rng.uniform(kTau / 6.0, kTau / 2.5) * (rng.uniform01() < 0.5 ? 1.0 : -1.0);
        const double len = extent * rng.uniform(0.25, 0.6);
        x = clamp(x + len * std::cos(angle), cx - extent, cx + extent);
        y = clamp(y + len * std::sin(angle), cy - extent, cy + extent);
        path.pts.emplace_back(x, y);
    }
    return path;
}

// One irregular stroke with light perpendicular wobble.
Path2D line_stroke_path(Rng& rng, double cx, double cy, double extent) {
    const double angle = rng.uniform(0.0, kTau);
    const double half = extent / 2.0;
    const double x0 = cx - half * std::cos(angle), y0 = cy - half * std::sin(angle);
    const double x1 = cx + half * std::cos(angle), y1 = cy + half * std::sin(angle);
    const double nx = -std::sin(angle), ny = std::cos(angle);
    Path2D path;
    const int steps = 12;
    for (int i = 0; i <= steps; ++i) {
        const double t = static_cast<double>(i) / steps;
        const double wobble = (i == 0 || i == steps) ? 0.0
                                                     : extent * 0.06 * rng.uniform(-1.0, 1.0);
        path.pts.emplace_back(x0 + (x1 - x0) * t + wobble * nx,
                              y0 + (y1 - y0) * t + wobble * ny);
    }
    return path;
}

} // namespace

Trajectory realize(GestureType type, const GestureParams& params, const SafetyFence& fence) {
    fence.validate();
    params.validate();
    if (type == GestureType::OffPage3D) {
        Rng rng(params.glyph_seed);
        SpeedRange range;
        range.speed_min = range.speed_max = params.speed_mm_s;
        range.accel_min = range.accel_max = params.accel_mm_s2;
        return off_page_gesture(rng, fence, range, params.pen_index);
    }

    const double factor = 0.25 + 0.75 * params.modulation;
    const double extent = params.size_mm * factor;
    const double speed = params.speed_mm_s * factor;

    Rng rng(params.glyph_seed);
    Path2D path;
    switch (type) {
    case GestureType::Shape:
        path = shape_path(params.shape, params.center_x, params.center_y, extent);
        break;
    case GestureType::TreatiseGlyph:
        path = treatise_path(rng, params.center_x, params.center_y, extent);
        break;
    case GestureType::WolffGlyph:
        path = wolff_path(rng, params.center_x, params.center_y, extent);
        break;
    case GestureType::LineStroke:
        path = line_stroke_path(rng, params.center_x, params.center_y, extent);
        break;
    case GestureType::OffPage3D:
        break; // handled above
    }

    // clamp into the page (the page sits inside the fence)
    for (auto& [x, y] : path.pts) {
        x = clamp(x, fence.page.x0, fence.page.x1);
        y = clamp(y, fence.page.y0, fence.page.y1);
    }

    Trajectory traj;
    traj.label = gesture_name(type);
    const double hover = fence.hover_z();
    Waypoint wp;
    wp.speed = speed;
    wp.accel = params.accel_mm_s2;
    wp.pen_index = params.pen_index;

    // approach above the first point, touch down, draw, lift
    wp.x = path.pts.front().first;
    wp.y = path.pts.front().second;
    wp.z = hover;
    wp.pen_down = false;
    traj.points.push_back(wp);

    wp.z = fence.z_draw;
    wp.pen_down = true;
    traj.points.push_back(wp);

    for (size_t i = 1; i < path.pts.size(); ++i) {
        wp.x = path.pts[i].first;
        wp.y = path.pts[i].second;
        wp.z = fence.z_draw;
        wp.pen_down = true;
        traj.points.push_back(wp);
    }

    wp.pen_down = false;
    wp.z = hover;
    traj.points.push_back(wp);
    return traj;
}

Trajectory off_page_gesture(Rng& rng, const SafetyFence& fence, const SpeedRange& range,
                            int pen_index) {
    fence.validate();
    Trajectory traj;
    traj.label = gesture_name(GestureType::OffPage3D);
    const int n = 2 + static_cast<int>(rng.uniform_index(4)); // 2..5
    const double mx = std::min(kEdgeMargin, 0.25 * (fence.x1 - fence.x0));
    const double my = std::min(kEdgeMargin, 0.25 * (fence.y1 - fence.y0));
    const double z_span = fence.z1 - fence.z_draw;
    const double z_lo = fence.z_draw + 0.1 * z_span;
    const double z_hi = fence.z1 - std::min(kEdgeMargin, 0.1 * z_span);
    for (int i = 0; i < n; ++i) {
        Waypoint wp;
        wp.x = rng.uniform(fence.x0 + mx, fence.x1 - mx);
        wp.y = rng.uniform(fence.y0 + my, fence.y1 - my);
        wp.z = rng.uniform(z_lo, std::max(z_lo, z_hi));
        wp.speed = rng.uniform(range.speed_min, range.speed_max);
        wp.accel = rng.uniform(range.accel_min, range.accel_max);
        wp.pen_down = false;
        wp.pen_index = pen_index;
        traj.points.push_back(wp);
    }
    return traj;
}

int maybe_change_pen(ToolMode tool, Rng& rng, int current_pen) {
    if (tool != ToolMode::Pens4) return current_pen;
    return static_cast<int>(rng.uniform_index(4));
}

namespace {

Trajectory pointing_sequence(const SafetyFence& fence, const char* label) {
    fence.validate();
    Trajectory traj;
    traj.label = label;
    const double y_mid = (fence.y0 + fence.y1) / 2.0;
    const double hover = fence.hover_z();

    Waypoint wp;
    wp.speed = 80.0;
    wp.accel = 600.0;
    wp.pen_down = false;
    wp.z = hover;

    // both sides of the maximum horizontal extent, with a pause at each
    wp.x = fence.x0 + kEdgeMargin;
    wp.y = y_mid;
    wp.dwell_s = 0.5;
    traj.points.push_back(wp);

    wp.x = fence.x1 - kEdgeMargin;
    traj.points.push_back(wp);

    wp.x = (fence.page.x0 + fence.page.x1) / 2.0;
    wp.y = (fence.page.y0 + fence.page.y1) / 2.0;
    wp.dwell_s = 0.0;
    traj.points.push_back(wp);
    return traj;
}

} // namespace

Trajectory initiating_sequence(const SafetyFence& fence) {
    return pointing_sequence(fence, "initiating_sequence");
}

Trajectory terminating_sequence(const SafetyFence& fence) {
    Trajectory traj = pointing_sequence(fence, "terminating_sequence");
    // parked pose: high above the page center
    Waypoint wp = traj.points.back();
    wp.z = fence.z1 - kEdgeMargin;
    wp.dwell_s = 0.0;
    traj.points.push_back(wp);
    return traj;
}

} // namespace jess::language
