#include "jess/arm.hpp"

#include "jess/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace jess::arm {

using language::SafetyFence;
using language::ToolMode;
using language::Trajectory;
using language::Waypoint;

const char* trace_kind_name(TraceEvent::Kind k) {
    switch (k) {
    case TraceEvent::Kind::Move: return "move";
    case TraceEvent::Kind::Interrupt: return "interrupt";
    case TraceEvent::Kind::PenChange: return "pen_change";
    case TraceEvent::Kind::Sequence: return "sequence";
    }
    return "?";
}

ArmSim::ArmSim(const SafetyFence& fence, ToolMode tool, language::RobotModel model)
    : fence_(fence), tool_(tool) {
    fence_.validate();
    state_.model = model;
    // parked start pose above the page center
    state_.x = (fence_.page.x0 + fence_.page.x1) / 2.0;
    state_.y = (fence_.page.y0 + fence_.page.y1) / 2.0;
    state_.z = fence_.hover_z();
    state_.pen_index = 0;
    state_.pen_down = false;
    state_.busy = false;
}

double ArmSim::segment_time(double distance, double speed, double accel) {
    if (distance <= 0.0) return 0.0;
    const double d_ramp = speed * speed / accel; // accelerate + decelerate distance
    if (d_ramp >= distance) {
        return 2.0 * std::sqrt(distance / accel); // triangular
    }
    return 2.0 * speed / accel + (distance - d_ramp) / speed;
}

double ArmSim::segment_pos(const Segment& s, double tau) {
    if (s.t_total <= 0.0) return s.distance;
    tau = std::min(tau, s.t_total);
    const double v = s.peak_speed, a = s.accel;
    const double t_acc = v / a;
    const double d_acc = 0.5 * v * v / a;
    if (2.0 * d_acc >= s.distance) {
        // triangular profile
        const double t_half = s.t_total / 2.0;
        if (tau <= t_half) return 0.5 * a * tau * tau;
        const double rem = s.t_total - tau;
        return s.distance - 0.5 * a * rem * rem;
    }
    if (tau <= t_acc) return 0.5 * a * tau * tau;
    const double t_cruise_end = s.t_total - t_acc;
    if (tau <= t_cruise_end) return d_acc + v * (tau - t_acc);
    const double rem = s.t_total - tau;
    return s.distance - 0.5 * a * rem * rem;
}

ArmSim::Segment ArmSim::make_segment(const Waypoint& from, const Waypoint& to, bool ink) {
    Segment s;
    s.x0 = from.x;
    s.y0 = from.y;
    s.z0 = from.z;
    s.x1 = to.x;
    s.y1 = to.y;
    s.z1 = to.z;
    s.distance = std::sqrt((to.x - from.x) * (to.x - from.x) +
                           (to.y - from.y) * (to.y - from.y) +
                           (to.z - from.z) * (to.z - from.z));
    s.peak_speed = std::max(1e-9, to.speed);
    s.accel = std::max(1e-9, to.accel);
    s.t_total = segment_time(s.distance, s.peak_speed, s.accel);
    s.dwell = std::max(0.0, to.dwell_s);
    s.ink = ink;
    s.pen = to.pen_index;
    return s;
}

void ArmSim::start(const Trajectory& traj) {
    if (state_.busy) throw InputError("arm is busy; interrupt before starting a new trajectory");

    for (const Waypoint& wp : traj.points) {
        if (!fence_.contains(wp.x, wp.y, wp.z)) {
            char buf[128];
            std::snprintf(buf, sizeof(buf), "waypoint (%.1f, %.1f, %.1f) lies outside the fence",
                          wp.x, wp.y, wp.z);
            throw SafetyError(buf);
        }
        if (wp.pen_down && wp.z != fence_.z_draw) {
            throw SafetyError("pen-down waypoint is not on the drawing plane");
        }
    }

    segments_.clear();
    seg_index_ = 0;
    seg_tau_ = 0.0;
    report_ = {};
    if (traj.points.empty()) {
        return; // nothing to do; stays idle with a zero-segment report
    }

    Waypoint pose;
    pose.x = state_.x;
    pose.y = state_.y;
    pose.z = state_.z;
    pose.pen_down = false;
    const Waypoint* prev = &pose;
    for (const Waypoint& wp : traj.points) {
        // ink flows only between consecutive pen-down waypoints; a feather
        // never inks
        const bool ink = tool_ != ToolMode::Feather && prev->pen_down && wp.pen_down;
        segments_.push_back(make_segment(*prev, wp, ink));
        prev = &wp;
    }
    state_.busy = true;
    report_.segments = static_cast<int>(segments_.size());
}

void ArmSim::step(double t_now, double dt) {
    double t = t_now;
    double remaining = dt;
    while (state_.busy && remaining > 0.0) {
        Segment& s = segments_[seg_index_];
        state_.pen_down = s.ink && tool_ != ToolMode::Feather;
        const double seg_end = s.t_total + s.dwell;
        const double left = seg_end - seg_tau_;
        if (left > remaining) {
            seg_tau_ += remaining;
            t += remaining;
            remaining = 0.0;
            if (s.distance > 0.0 && seg_tau_ < s.t_total) {
                const double frac = segment_pos(s, seg_tau_) / s.distance;
                state_.x = s.x0 + (s.x1 - s.x0) * frac;
                state_.y = s.y0 + (s.y1 - s.y0) * frac;
                state_.z = s.z0 + (s.z1 - s.z0) * frac;
            } else {
                state_.x = s.x1;
                state_.y = s.y1;
                state_.z = s.z1;
            }
        } else {
            // segment (incl. dwell) completes within this step
            seg_tau_ = 0.0;
            t += left;
            remaining -= left;
            state_.x = s.x1;
            state_.y = s.y1;
            state_.z = s.z1;
            state_.pen_index = s.pen;
            report_.duration_s += s.t_total + s.dwell;
            trace_.push_back({t, state_.x, state_.y, state_.z, state_.pen_index,
                              state_.pen_down, TraceEvent::Kind::Move});
            ++seg_index_;
            if (seg_index_ >= segments_.size()) {
                finish_trajectory();
            }
        }
    }
}

void ArmSim::finish_trajectory() {
    state_.busy = false;
    state_.pen_down = false;
    segments_.clear();
    seg_index_ = 0;
    seg_tau_ = 0.0;
    report_.completed = true;
}

void ArmSim::interrupt(double t_now) {
    if (!state_.busy) return;
    // close the partial stroke so the drawn trace matches the paper path
    if (state_.pen_down) {
        trace_.push_back({t_now, state_.x, state_.y, state_.z, state_.pen_index, true,
                          TraceEvent::Kind::Move});
    }
    state_.busy = false;
    state_.pen_down = false;
    state_.z = fence_.hover_z(); // pen lift
    segments_.clear();
    seg_index_ = 0;
    seg_tau_ = 0.0;
    report_.completed = false;
    trace_.push_back({t_now, state_.x, state_.y, state_.z, state_.pen_index, false,
                      TraceEvent::Kind::Interrupt});
}

void ArmSim::set_pen_index(int pen, double t_now) {
    if (pen < 0 || pen > 3) throw InputError("pen index must lie in 0..3");
    if (pen == state_.pen_index) return;
    state_.pen_index = pen;
    trace_.push_back({t_now, state_.x, state_.y, state_.z, pen, false,
                      TraceEvent::Kind::PenChange});
}

void ArmSim::mark_sequence(double t_now) {
    trace_.push_back({t_now, state_.x, state_.y, state_.z, state_.pen_index, false,
                      TraceEvent::Kind::Sequence});
}

ExecutionReport ArmSim::execute(const Trajectory& traj, double& clock_s, double tick_dt) {
    start(traj);
    while (busy()) {
        step(clock_s, tick_dt);
        clock_s += tick_dt;
    }
    return report_;
}

double ArmSim::trajectory_duration(const Trajectory& traj, double from_x, double from_y,
                                   double from_z) {
    double total = 0.0;
    double x = from_x, y = from_y, z = from_z;
    for (const Waypoint& wp : traj.points) {
        const double d = std::sqrt((wp.x - x) * (wp.x - x) + (wp.y - y) * (wp.y - y) +
                                   (wp.z - z) * (wp.z - z));
        total += segment_time(d, std::max(1e-9, wp.speed), std::max(1e-9, wp.accel)) +
                 std::max(0.0, wp.dwell_s);
        x = wp.x;
        y = wp.y;
        z = wp.z;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Trace CSV + SVG
// ---------------------------------------------------------------------------

void write_trace_csv(const std::vector<TraceEvent>& events, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    os << "t,x,y,z,pen,pen_down,kind\n";
    char buf[160];
    for (const TraceEvent& e : events) {
        std::snprintf(buf, sizeof(buf), "%.4f,%.3f,%.3f,%.3f,%d,%d,%s\n", e.t, e.x, e.y, e.z,
                      e.pen, e.pen_down ? 1 : 0, trace_kind_name(e.kind));
        os << buf;
    }
    if (!os) throw IoError("write failed: " + path.string());
}

std::vector<TraceEvent> read_trace_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(is, line)) throw FormatError("trace CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "t,x,y,z,pen,pen_down,kind") {
        throw FormatError("trace CSV header mismatch");
    }
    std::vector<TraceEvent> events;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        TraceEvent e;
        char kind[32] = {0};
        int pen = 0, down = 0;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%d,%d,%31s", &e.t, &e.x, &e.y, &e.z, &pen,
                        &down, kind) != 7) {
            throw FormatError("bad trace CSV row: " + line);
        }
        e.pen = pen;
        e.pen_down = down != 0;
        if (std::string(kind) == "move") {
            e.kind = TraceEvent::Kind::Move;
        } else if (std::string(kind) == "interrupt") {
            e.kind = TraceEvent::Kind::Interrupt;
        } else if (std::string(kind) == "pen_change") {
            e.kind = TraceEvent::Kind::PenChange;
        } else if (std::string(kind) == "sequence") {
            e.kind = TraceEvent::Kind::Sequence;
        } else {
            throw FormatError(std::string("unknown trace event kind: ") + kind);
        }
        events.push_back(e);
    }
    return events;
}

namespace {

const char* kPenColors[4] = {"#1a1a1a", "#c0392b", "#2457a8", "#1e8449"};

struct SvgPoint {
    double x, y;
};

} // namespace

std::string render_svg(const std::vector<TraceEvent>& events, const language::Rect& page) {
    const double w = page.width();
    const double h = page.height();
    char buf[256];
    std::string svg;
    std::snprintf(buf, sizeof(buf),
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 %.3f %.3f\" "
                  "width=\"%.3fmm\" height=\"%.3fmm\">\n",
                  w, h, w, h);
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "<rect x=\"0\" y=\"0\" width=\"%.3f\" height=\"%.3f\" fill=\"#ffffff\" "
                  "stroke=\"#cccccc\" stroke-width=\"0.5\"/>\n",
                  w, h);
    svg += buf;

    auto to_page = [&](double x, double y) {
        return SvgPoint{x - page.x0, page.y1 - y};
    };

    // pen-down runs become polylines; the run starts at the position held
    // before its first inked move
    std::vector<SvgPoint> run;
    int run_pen = 0;
    bool have_prev = false;
    SvgPoint prev{0.0, 0.0};

    auto flush_run = [&] {
        if (run.size() >= 2) {
            std::snprintf(buf, sizeof(buf), "<path fill=\"none\" stroke=\"%s\" "
                                            "stroke-width=\"1.2\" stroke-linecap=\"round\" "
                                            "stroke-linejoin=\"round\" d=\"",
                          kPenColors[run_pen & 3]);
            svg += buf;
            for (size_t i = 0; i < run.size(); ++i) {
                std::snprintf(buf, sizeof(buf), "%s%.3f %.3f", i == 0 ? "M" : " L", run[i].x,
                              run[i].y);
                svg += buf;
            }
            svg += "\"/>\n";
        }
        run.clear();
    };

    for (const TraceEvent& e : events) {
        const SvgPoint p = to_page(e.x, e.y);
        if (e.kind == TraceEvent::Kind::Move && e.pen_down) {
            if (run.empty() && have_prev) {
                run.push_back(prev);
                run_pen = e.pen;
            }
            run.push_back(p);
            run_pen = e.pen;
        } else {
            flush_run();
        }
        prev = p;
        have_prev = true;
    }
    flush_run();
    svg += "</svg>\n";
    return svg;
}

void write_svg(const std::vector<TraceEvent>& events, const language::Rect& page,
               const std::filesystem::path& path) {
    const std::string svg = render_svg(events, page);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    os << svg;
    if (!os) throw IoError("write failed: " + path.string());
}

} // namespace jess::arm
