#include "jess/gesture.hpp"

#include "jess/errors.hpp"

#include <algorithm>

namespace jess::gesture {

using factory::StreamId;

AffectResponse classify_affect(double value) {
    if (value < 0.0 || value > 1.0) {
        throw InputError("affect value must lie in [0,1]");
    }
    AffectResponse r;
    r.value = value;
    if (value < 0.1) {
        r.kind = AffectKind::Low;
    } else if (value <= 0.7) {
        r.kind = AffectKind::Medium;
    } else {
        r.kind = AffectKind::High;
    }
    return r;
}

const char* affect_name(AffectKind k) {
    switch (k) {
    case AffectKind::Low: return "low";
    case AffectKind::Medium: return "medium";
    case AffectKind::High: return "high";
    }
    return "?";
}

StreamId select_stream(const std::vector<StreamId>& eligible, Rng& rng) {
    if (eligible.empty()) throw ConfigError("stream selection needs a non-empty eligible set");
    const bool audio_in =
        std::find(eligible.begin(), eligible.end(), StreamId::AudioAmplitude) != eligible.end();
    if (audio_in) {
        if (eligible.size() == 1 || rng.uniform01() < 0.36) return StreamId::AudioAmplitude;
        std::vector<StreamId> rest;
        rest.reserve(eligible.size() - 1);
        for (StreamId id : eligible) {
            if (id != StreamId::AudioAmplitude) rest.push_back(id);
        }
        return rest[rng.uniform_index(static_cast<uint32_t>(rest.size()))];
    }
    return eligible[rng.uniform_index(static_cast<uint32_t>(eligible.size()))];
}

PhrasePlan plan_phrase(double clock_s, const std::vector<StreamId>& eligible, Rng& rng,
                       int64_t id) {
    PhrasePlan p;
    p.stream = select_stream(eligible, rng);
    p.duration_s = rng.uniform(3.0, 8.0);
    p.started_at = clock_s;
    p.id = id;
    return p;
}

GestureManager::GestureManager(Rng rng, double startle_threshold)
    : rng_(rng), startle_threshold_(startle_threshold) {
    if (!(startle_threshold > 0.0 && startle_threshold <= 1.0)) {
        throw ConfigError("startle threshold must lie in (0,1]");
    }
}

PhrasePlan GestureManager::new_phrase(double clock_s, const std::vector<StreamId>& eligible,
                                      TickResult& out) {
    phrase_ = plan_phrase(clock_s, eligible, rng_, next_phrase_id_++);
    next_rhythm_at_ = clock_s + rng_.uniform(0.5, 2.0);
    out.events.push_back(
        {ManagerEvent::Kind::PhraseStart, clock_s, phrase_.id, phrase_.stream, ""});
    return phrase_;
}

void GestureManager::begin(double clock_s, const std::vector<StreamId>& eligible) {
    TickResult scratch;
    new_phrase(clock_s, eligible, scratch);
    running_ = true;
}

GestureManager::TickResult GestureManager::tick(double clock_s,
                                                const factory::ThoughtTrains& trains,
                                                double live_amplitude,
                                                const std::vector<StreamId>& eligible) {
    if (!running_) throw InputError("gesture manager tick before begin");
    TickResult out;

    // Startle: checked every tick, independent of the rhythm loop. Re-arms
    // only after the amplitude drops below the threshold again.
    if (live_amplitude >= startle_threshold_) {
        if (startle_armed_) {
            startle_armed_ = false;
            out.events.push_back(
                {ManagerEvent::Kind::Startle, clock_s, phrase_.id, phrase_.stream, ""});
            out.events.push_back({ManagerEvent::Kind::PhraseEnd, clock_s, phrase_.id,
                                  phrase_.stream, "startle"});
            Command cmd;
            cmd.kind = Command::Kind::Interrupt;
            cmd.phrase_id = phrase_.id;
            out.commands.push_back(cmd);
            new_phrase(clock_s, eligible, out);
            return out;
        }
    } else {
        startle_armed_ = true;
    }

    // Phrase expiry, evaluated on every tick.
    if (clock_s >= phrase_.started_at + phrase_.duration_s) {
        out.events.push_back(
            {ManagerEvent::Kind::PhraseEnd, clock_s, phrase_.id, phrase_.stream, "finished"});
        new_phrase(clock_s, eligible, out);
    }

    // Rhythm loop.
    if (clock_s >= next_rhythm_at_) {
        next_rhythm_at_ = clock_s + rng_.uniform(0.5, 2.0);

        const size_t idx = static_cast<size_t>(phrase_.stream);
        // A stream can lose availability mid-phrase (e.g. source dropout);
        // replanning on the next tick keeps the invariant that the selected
        // stream is always eligible.
        if (!trains.available[idx] ||
            std::find(eligible.begin(), eligible.end(), phrase_.stream) == eligible.end()) {
            out.events.push_back({ManagerEvent::Kind::PhraseEnd, clock_s, phrase_.id,
                                  phrase_.stream, "stream_unavailable"});
            new_phrase(clock_s, eligible, out);
            return out;
        }

        const AffectResponse affect = classify_affect(trains.value[idx]);
        out.affect = affect;
        switch (affect.kind) {
        case AffectKind::Low: {
            Command cmd;
            cmd.kind = Command::Kind::OffPage;
            cmd.gesture = language::GestureType::OffPage3D;
            cmd.modulation = affect.value;
            cmd.phrase_id = phrase_.id;
            out.commands.push_back(cmd);
            break;
        }
        case AffectKind::Medium: {
            Command cmd;
            cmd.kind = Command::Kind::OnPage;
            cmd.gesture = language::kOnPageTypes[rng_.uniform_index(4)];
            cmd.modulation = affect.value;
            cmd.phrase_id = phrase_.id;
            out.commands.push_back(cmd);
            break;
        }
        case AffectKind::High: {
            Command cmd;
            cmd.kind = Command::Kind::Interrupt;
            cmd.phrase_id = phrase_.id;
            out.commands.push_back(cmd);
            out.events.push_back({ManagerEvent::Kind::PhraseEnd, clock_s, phrase_.id,
                                  phrase_.stream, "high_affect"});
            new_phrase(clock_s, eligible, out);
            break;
        }
        }
    }
    return out;
}

} // namespace jess::gesture
