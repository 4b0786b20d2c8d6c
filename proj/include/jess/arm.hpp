#pragma once

#include "jess/language.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace jess::arm {

struct ArmState {
    double x = 0.0, y = 0.0, z = 0.0;
    int pen_index = 0;
    bool pen_down = false;
    bool busy = false;
    language::RobotModel model = language::RobotModel::Xarm;
};

struct TraceEvent {
    enum class Kind { Move, Interrupt, PenChange, Sequence };
    double t = 0.0;
    double x = 0.0, y = 0.0, z = 0.0;
    int pen = 0;
    bool pen_down = false;
    Kind kind = Kind::Move;
};

const char* trace_kind_name(TraceEvent::Kind k);

struct ExecutionReport {
    int segments = 0;
    double duration_s = 0.0;
    bool completed = false;
};

// Straight-line point-to-point motion with a trapezoidal speed profile
// (triangular for short segments); each segment starts and ends at rest.
// Time advances only through step(); the clock is owned by the caller.
class ArmSim {
public:
    ArmSim(const language::SafetyFence& fence, language::ToolMode tool,
           language::RobotModel model);

    // Validates the trajectory against the fence before any motion starts.
    void start(const language::Trajectory& traj);

    // Advance simulated time by dt starting at absolute time t_now.
    void step(double t_now, double dt);

    // Abort the in-flight segment, lift the pen, go idle.
    void interrupt(double t_now);

    void set_pen_index(int pen, double t_now);
    void mark_sequence(double t_now);

    bool busy() const { return state_.busy; }
    const ArmState& state() const { return state_; }
    std::pair<double, double> sample_position() const { return {state_.x, state_.y}; }
    const language::SafetyFence& fence() const { return fence_; }
    language::ToolMode tool() const { return tool_; }

    const std::vector<TraceEvent>& trace() const { return trace_; }
    const ExecutionReport& last_report() const { return report_; }

    // Run a whole trajectory in tick steps; returns the report.
    ExecutionReport execute(const language::Trajectory& traj, double& clock_s,
                            double tick_dt = 0.1);

    // Closed-form duration of a trajectory started from a given pose.
    static double trajectory_duration(const language::Trajectory& traj, double from_x,
                                      double from_y, double from_z);

private:
    struct Segment {
        double x0, y0, z0;
        double x1, y1, z1;
        double distance;
        double peak_speed;
        double accel;
        double t_total; // motion time, excluding dwell
        double dwell;
        bool ink;
        int pen;
    };

    static Segment make_segment(const language::Waypoint& from_pose_wp,
                                const language::Waypoint& to, bool ink);
    static double segment_time(double distance, double speed, double accel);
    static double segment_pos(const Segment& s, double tau); // distance along segment

    void finish_trajectory();

    language::SafetyFence fence_;
    language::ToolMode tool_;
    ArmState state_;
    std::vector<Segment> segments_;
    size_t seg_index_ = 0;
    double seg_tau_ = 0.0; // time into the current segment (motion + dwell)
    ExecutionReport report_;
    std::vector<TraceEvent> trace_;
};

// Trace CSV: header t,x,y,z,pen,pen_down,kind, one row per event.
void write_trace_csv(const std::vector<TraceEvent>& events, const std::filesystem::path& path);
std::vector<TraceEvent> read_trace_csv(const std::filesystem::path& path);

// One SVG path element per pen-down run, colored by pen index, page rectangle
// as the viewport. Byte-deterministic for identical event lists.
std::string render_svg(const std::vector<TraceEvent>& events, const language::Rect& page);
void write_svg(const std::vector<TraceEvent>& events, const language::Rect& page,
               const std::filesystem::path& path);

} // namespace jess::arm
