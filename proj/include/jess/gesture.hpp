#pragma once

#include "jess/factory.hpp"
#include "jess/language.hpp"
#include "jess/rng.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace jess::gesture {

// One scheduled phrase: the stream being listened to and for how long.
struct PhrasePlan {
    factory::StreamId stream = factory::StreamId::RandomPoetry;
    double duration_s = 0.0; // [3,8]
    double started_at = 0.0; // piece-clock seconds
    int64_t id = 0;
};

enum class AffectKind { Low, Medium, High };

struct AffectResponse {
    AffectKind kind = AffectKind::Medium;
    double value = 0.0;
};

// Low < 0.1, Medium in [0.1, 0.7], High > 0.7.
AffectResponse classify_affect(double value);
const char* affect_name(AffectKind k);

// Audio amplitude is chosen with probability 0.36 when eligible; the rest of
// the mass spreads uniformly over the other eligible streams.
factory::StreamId select_stream(const std::vector<factory::StreamId>& eligible, Rng& rng);

PhrasePlan plan_phrase(double clock_s, const std::vector<factory::StreamId>& eligible, Rng& rng,
                       int64_t id);

struct Command {
    enum class Kind { OffPage, OnPage, Interrupt };
    Kind kind = Kind::OnPage;
    language::GestureType gesture = language::GestureType::Shape;
    double modulation = 0.0;
    int64_t phrase_id = 0;
};

struct ManagerEvent {
    enum class Kind { PhraseStart, PhraseEnd, Startle };
    Kind kind;
    double t = 0.0;
    int64_t phrase_id = 0;
    factory::StreamId stream = factory::StreamId::RandomPoetry;
    const char* detail = "";
};

// Layer 3 state machine: one phrase at a time, a rhythm tick every 0.5-2 s,
// and a startle interrupt checked on every tick.
class GestureManager {
public:
    GestureManager(Rng rng, double startle_threshold);

    void begin(double clock_s, const std::vector<factory::StreamId>& eligible);

    struct TickResult {
        std::vector<Command> commands;
        std::vector<ManagerEvent> events;
        std::optional<AffectResponse> affect; // set on rhythm ticks
    };

    // Startle check, phrase expiry, then the rhythm loop.
    TickResult tick(double clock_s, const factory::ThoughtTrains& trains, double live_amplitude,
                    const std::vector<factory::StreamId>& eligible);

    const PhrasePlan& phrase() const { return phrase_; }
    double startle_threshold() const { return startle_threshold_; }

private:
    PhrasePlan new_phrase(double clock_s, const std::vector<factory::StreamId>& eligible,
                          TickResult& out);

    Rng rng_;
    double startle_threshold_;
    PhrasePlan phrase_;
    double next_rhythm_at_ = 0.0;
    int64_t next_phrase_id_ = 1;
    bool startle_armed_ = true;
    bool running_ = false;
};

} // namespace jess::gesture
