#include "jess/emd.hpp"

#include "jess/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>

namespace jess::emd {

namespace fs = std::filesystem;

int channel_count(FeatureKind kind) {
    switch (kind) {
    case FeatureKind::AudioEnvelope: return 1;
    case FeatureKind::Core: return 2;
    case FeatureKind::Eeg: return 4;
    case FeatureKind::Eda: return 1;
    case FeatureKind::Flow: return 1;
    }
    throw InputError("unknown feature kind");
}

const char* kind_name(FeatureKind kind) {
    switch (kind) {
    case FeatureKind::AudioEnvelope: return "audio_envelope";
    case FeatureKind::Core: return "core";
    case FeatureKind::Eeg: return "eeg";
    case FeatureKind::Eda: return "eda";
    case FeatureKind::Flow: return "flow";
    }
    return "?";
}

const std::vector<FeatureKind>& all_kinds() {
    static const std::vector<FeatureKind> kinds = {FeatureKind::AudioEnvelope, FeatureKind::Core,
                                                   FeatureKind::Eeg, FeatureKind::Eda,
                                                   FeatureKind::Flow};
    return kinds;
}

void PerformanceRecording::validate() const {
    dsp::validate(audio);
    if (audio.rate_hz != kAudioRateHz) throw FormatError("audio must be 44,100 Hz");
    const size_t n10 = flow.length();
    for (const dsp::MultiChannelBuffer* buf : {&shoulder_left, &shoulder_right, &eeg, &eda, &flow}) {
        dsp::validate(*buf);
        if (buf->rate_hz() != kTickRateHz) throw FormatError("stream rates must be 10 Hz");
        if (buf->length() != n10) throw LengthMismatchError("10 Hz stream lengths differ");
    }
    if (shoulder_left.channel_count() != 2 || shoulder_right.channel_count() != 2 ||
        eeg.channel_count() != 4 || eda.channel_count() != 1 || flow.channel_count() != 1) {
        throw FormatError("unexpected channel counts");
    }
    if (audio.size() != n10 * 4410) {
        throw LengthMismatchError("audio length does not match the 10 Hz stream length");
    }
}

dsp::MultiChannelBuffer compute_core(const dsp::MultiChannelBuffer& shoulder_left,
                                     const dsp::MultiChannelBuffer& shoulder_right) {
    dsp::validate(shoulder_left);
    dsp::validate(shoulder_right);
    if (shoulder_left.channel_count() != shoulder_right.channel_count() ||
        shoulder_left.length() != shoulder_right.length()) {
        throw LengthMismatchError("shoulder streams differ in shape");
    }
    dsp::MultiChannelBuffer core;
    for (size_t c = 0; c < shoulder_left.channel_count(); ++c) {
        dsp::SampleBuffer ch;
        ch.rate_hz = shoulder_left.rate_hz();
        ch.samples.resize(shoulder_left.length());
        for (size_t i = 0; i < ch.samples.size(); ++i) {
            ch.samples[i] = 0.5 * (shoulder_left.channels[c].samples[i] +
                                   shoulder_right.channels[c].samples[i]);
        }
        core.channels.push_back(std::move(ch));
    }
    return core;
}

dsp::SampleBuffer audio_envelope_10hz(const dsp::SampleBuffer& audio) {
    return dsp::downsample_to(dsp::hilbert_envelope(audio), kTickRateHz);
}

FeatureMap extract_features(const PerformanceRecording& rec) {
    rec.validate();
    FeatureMap out;

    dsp::MultiChannelBuffer env;
    env.channels.push_back(audio_envelope_10hz(rec.audio));
    out[FeatureKind::AudioEnvelope] = std::move(env);

    out[FeatureKind::Core] = compute_core(rec.shoulder_left, rec.shoulder_right);

    dsp::MultiChannelBuffer eeg;
    for (const auto& ch : rec.eeg.channels) {
        eeg.channels.push_back(dsp::butterworth_highpass(ch, 1.0));
    }
    out[FeatureKind::Eeg] = std::move(eeg);

    out[FeatureKind::Eda] = rec.eda;
    out[FeatureKind::Flow] = rec.flow;

    // Cut every stream to the common length.
    size_t len = SIZE_MAX;
    for (const auto& [kind, buf] : out) len = std::min(len, buf.length());
    for (auto& [kind, buf] : out) {
        for (auto& ch : buf.channels) ch.samples.resize(len);
    }
    return out;
}

std::vector<AlignedChunk> chunk(const FeatureMap& features, const std::string& source_id) {
    if (features.empty()) throw InputError("no features to chunk");
    size_t len = SIZE_MAX;
    for (const auto& [kind, buf] : features) {
        if (buf.length() != features.begin()->second.length()) {
            throw LengthMismatchError("feature streams differ in length");
        }
        len = std::min(len, buf.length());
    }
    const size_t n_chunks = len / kChunkLen;

    std::vector<AlignedChunk> out;
    out.reserve(n_chunks);
    for (size_t k = 0; k < n_chunks; ++k) {
        AlignedChunk ac;
        ac.source_id = source_id;
        ac.chunk_index = static_cast<int>(k);
        for (const auto& [kind, buf] : features) {
            FeatureChunk fc;
            fc.kind = kind;
            fc.channels = static_cast<int>(buf.channel_count());
            fc.source_id = source_id;
            fc.chunk_index = static_cast<int>(k);
            fc.values.resize(static_cast<size_t>(fc.channels) * kChunkLen);
            for (int c = 0; c < fc.channels; ++c) {
                for (int t = 0; t < kChunkLen; ++t) {
                    fc.values[static_cast<size_t>(c) * kChunkLen + t] =
                        buf.channels[c].samples[k * kChunkLen + t];
                }
            }
            ac.by_kind[kind] = std::move(fc);
        }
        out.push_back(std::move(ac));
    }
    return out;
}

DatasetSplit split(int n_examples, uint64_t seed) {
    if (n_examples < 4) throw InputError("split needs at least 4 examples");
    std::vector<int> idx(static_cast<size_t>(n_examples));
    for (int i = 0; i < n_examples; ++i) idx[static_cast<size_t>(i)] = i;
    Rng rng(seed);
    for (size_t i = idx.size() - 1; i > 0; --i) {
        const size_t j = rng.uniform_index(static_cast<uint32_t>(i + 1));
        std::swap(idx[i], idx[j]);
    }
    const size_t n_train = static_cast<size_t>(std::llround(0.75 * n_examples));
    DatasetSplit out;
    out.seed = seed;
    out.train.assign(idx.begin(), idx.begin() + static_cast<long>(n_train));
    out.validation.assign(idx.begin() + static_cast<long>(n_train), idx.end());
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.validation.begin(), out.validation.end());
    return out;
}

NormStats compute_norm_stats(const std::vector<AlignedChunk>& chunks,
                             const std::vector<int>& train_indices) {
    if (train_indices.empty()) throw InputError("training set is empty");
    NormStats stats;
    for (FeatureKind kind : all_kinds()) {
        stats.minmax[kind].assign(static_cast<size_t>(channel_count(kind)),
                                  {std::numeric_limits<double>::infinity(),
                                   -std::numeric_limits<double>::infinity()});
    }
    for (int i : train_indices) {
        const AlignedChunk& ac = chunks.at(static_cast<size_t>(i));
        for (const auto& [kind, fc] : ac.by_kind) {
            auto& mm = stats.minmax[kind];
            for (int c = 0; c < fc.channels; ++c) {
                for (int t = 0; t < kChunkLen; ++t) {
                    const double v = fc.at(c, t);
                    mm[c].first = std::min(mm[c].first, v);
                    mm[c].second = std::max(mm[c].second, v);
                }
            }
        }
    }
    return stats;
}

double NormStats::normalize(FeatureKind kind, int channel, double v) const {
    const auto it = minmax.find(kind);
    if (it == minmax.end()) throw InputError("no stats for feature kind");
    const auto& [mn, mx] = it->second.at(static_cast<size_t>(channel));
    if (mx == mn) return 0.5;
    return (v - mn) / (mx - mn);
}

nlohmann::json NormStats::to_json() const {
    nlohmann::json j;
    for (const auto& [kind, mm] : minmax) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& [mn, mx] : mm) arr.push_back({{"min", mn}, {"max", mx}});
        j[kind_name(kind)] = arr;
    }
    return j;
}

NormStats NormStats::from_json(const nlohmann::json& j) {
    NormStats s;
    for (FeatureKind kind : all_kinds()) {
        if (!j.contains(kind_name(kind))) continue;
        std::vector<std::pair<double, double>> mm;
        for (const auto& e : j[kind_name(kind)]) {
            mm.emplace_back(e.at("min").get<double>(), e.at("max").get<double>());
        }
        s.minmax[kind] = std::move(mm);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Synthetic generator
// ---------------------------------------------------------------------------

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

struct SlowDrift {
    // Three seeded sinusoids with periods between 31 and 67 seconds.
    double amp[3], period[3], phase[3];

    explicit SlowDrift(Rng& rng) {
        for (int i = 0; i < 3; ++i) {
            amp[i] = rng.uniform(0.2, 0.4);
            period[i] = rng.uniform(31.0, 67.0);
            phase[i] = rng.uniform(0.0, kTau);
        }
    }

    double operator()(double t) const {
        double acc = 0.0;
        for (int i = 0; i < 3; ++i) acc += amp[i] * std::sin(kTau * t / period[i] + phase[i]);
        return acc;
    }
};

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

} // namespace

PerformanceRecording synthesize_recording(uint64_t seed, double duration_s) {
    if (duration_s < 10.0) throw InputError("synthetic recordings must be at least 10 s long");

    Rng root(seed);
    Rng env_rng = root.split(1);
    Rng eeg_rng = root.split(2);
    Rng eda_rng = root.split(3);
    Rng misc_rng = root.split(4);

    const size_t n10 = static_cast<size_t>(std::llround(duration_s * kTickRateHz));
    const size_t n_audio = n10 * 4410;
    const double dur = static_cast<double>(n10) / kTickRateHz;

    // Envelope target: 23 s sinusoid plus slower drift, kept in [0.05, 0.98].
    const SlowDrift drift(env_rng);
    const double phi0 = env_rng.uniform(0.0, kTau);
    auto env_target = [&](double t) {
        return clamp(0.5 + 0.28 * std::sin(kTau * t / 23.0 + phi0) + 0.17 * drift(t), 0.05, 0.98);
    };

    PerformanceRecording rec;
    rec.duration_s = dur;

    // Audio: AM tone on a 220 Hz carrier, pre-quantized to the 16-bit grid so
    // a WAV round trip is exact.
    rec.audio.rate_hz = kAudioRateHz;
    rec.audio.samples.resize(n_audio);
    const double carrier_phase = misc_rng.uniform(0.0, kTau);
    for (size_t i = 0; i < n_audio; ++i) {
        const double t = static_cast<double>(i) / kAudioRateHz;
        const double x = env_target(t) * std::sin(kTau * 220.0 * t + carrier_phase);
        rec.audio.samples[i] = std::round(clamp(x, -1.0, 1.0) * 32767.0) / 32767.0;
    }

    // Envelope target on the 10 Hz grid.
    std::vector<double> e10(n10);
    for (size_t i = 0; i < n10; ++i) e10[i] = env_target(static_cast<double>(i) / kTickRateHz);

    // Flow: 2 s running mean of the envelope target, lagged 0.5 s.
    std::vector<double> flow(n10);
    for (size_t i = 0; i < n10; ++i) {
        const size_t j1 = i >= 5 ? i - 5 : 0;
        const size_t j0 = i >= 24 ? i - 24 : 0;
        double acc = 0.0;
        for (size_t j = j0; j <= j1; ++j) acc += e10[j];
        flow[i] = acc / static_cast<double>(j1 - j0 + 1);
    }

    auto make_mcb = [&](int chans) {
        dsp::MultiChannelBuffer b;
        for (int c = 0; c < chans; ++c) {
            dsp::SampleBuffer ch;
            ch.rate_hz = kTickRateHz;
            ch.samples.resize(n10);
            b.channels.push_back(std::move(ch));
        }
        return b;
    };

    rec.flow = make_mcb(1);
    rec.flow.channels[0].samples = flow;

    // Smoothed flow (2 s running mean) for the core y coordinate.
    std::vector<double> flow_smooth(n10);
    for (size_t i = 0; i < n10; ++i) {
        const size_t j0 = i >= 19 ? i - 19 : 0;
        double acc = 0.0;
        for (size_t j = j0; j <= i; ++j) acc += flow[j];
        flow_smooth[i] = acc / static_cast<double>(i - j0 + 1);
    }

    // Core drifts with (lagged/smoothed) flow; a small slow oscillation whose
    // amplitude tracks flow is added on top.
    dsp::MultiChannelBuffer core = make_mcb(2);
    for (size_t i = 0; i < n10; ++i) {
        const double t = static_cast<double>(i) / kTickRateHz;
        const size_t lag = i >= 3 ? i - 3 : 0;
        core.channels[0].samples[i] = 0.5 + 0.18 * (flow[lag] - 0.5) +
                                      0.012 * flow[i] * std::sin(kTau * t / 9.0);
        core.channels[1].samples[i] = 0.6 + 0.12 * (flow_smooth[i] - 0.5) +
                                      0.012 * flow[i] * std::cos(kTau * t / 11.0);
    }

    // Shoulders stay symmetric about the core, so the midpoint recovers it.
    rec.shoulder_left = make_mcb(2);
    rec.shoulder_right = make_mcb(2);
    for (size_t i = 0; i < n10; ++i) {
        const double t = static_cast<double>(i) / kTickRateHz;
        const double dx = 0.17 + 0.01 * std::sin(kTau * t / 41.0);
        const double dy = 0.02 + 0.005 * std::sin(kTau * t / 37.0 + 1.0);
        rec.shoulder_left.channels[0].samples[i] = core.channels[0].samples[i] + dx;
        rec.shoulder_left.channels[1].samples[i] = core.channels[1].samples[i] + dy;
        rec.shoulder_right.channels[0].samples[i] = core.channels[0].samples[i] - dx;
        rec.shoulder_right.channels[1].samples[i] = core.channels[1].samples[i] - dy;
    }

    // EEG: flow-amplitude-modulated carriers (1.7-3.7 Hz) + noise + slow drift.
    rec.eeg = make_mcb(4);
    const double eeg_freq[4] = {1.7, 2.3, 2.9, 3.7};
    double eeg_phase[4], drift_phase[4];
    for (int c = 0; c < 4; ++c) {
        eeg_phase[c] = eeg_rng.uniform(0.0, kTau);
        drift_phase[c] = eeg_rng.uniform(0.0, kTau);
    }
    for (int c = 0; c < 4; ++c) {
        for (size_t i = 0; i < n10; ++i) {
            const double t = static_cast<double>(i) / kTickRateHz;
            const double carrier = std::sin(kTau * eeg_freq[c] * t + eeg_phase[c]);
            const double slow = 0.4 * std::sin(kTau * t / 97.0 + drift_phase[c]) + 0.3;
            rec.eeg.channels[c].samples[i] =
                0.9 * flow[i] * carrier + 0.22 * eeg_rng.gaussian() + slow;
        }
    }

    // EDA: slow drift plus a 2.5 s zero-order hold of 0.6*flow.
    rec.eda = make_mcb(1);
    const double eda_phase = eda_rng.uniform(0.0, kTau);
    double hold = 0.6 * flow[0];
    for (size_t i = 0; i < n10; ++i) {
        const double t = static_cast<double>(i) / kTickRateHz;
        if (i % 25 == 0) hold = 0.6 * flow[i] + 0.01 * eda_rng.gaussian();
        rec.eda.channels[0].samples[i] =
            1.5 + 0.35 * std::sin(kTau * t / 113.0 + eda_phase) + hold;
    }

    return rec;
}

// ---------------------------------------------------------------------------
// WAV + CSV IO
// ---------------------------------------------------------------------------

namespace {

void put_u32(std::string& s, uint32_t v) {
    s.push_back(static_cast<char>(v & 0xff));
    s.push_back(static_cast<char>((v >> 8) & 0xff));
    s.push_back(static_cast<char>((v >> 16) & 0xff));
    s.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16(std::string& s, uint16_t v) {
    s.push_back(static_cast<char>(v & 0xff));
    s.push_back(static_cast<char>((v >> 8) & 0xff));
}

uint32_t get_u32(const unsigned char* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t get_u16(const unsigned char* p) {
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

} // namespace

void write_wav(const fs::path& path, const dsp::SampleBuffer& audio) {
    dsp::validate(audio);
    const uint32_t n = static_cast<uint32_t>(audio.size());
    const uint32_t rate = static_cast<uint32_t>(std::llround(audio.rate_hz));
    const uint32_t data_bytes = n * 2;

    std::string header;
    header.reserve(44);
    header += "RIFF";
    put_u32(header, 36 + data_bytes);
    header += "WAVEfmt ";
    put_u32(header, 16);
    put_u16(header, 1);  // PCM
    put_u16(header, 1);  // mono
    put_u32(header, rate);
    put_u32(header, rate * 2); // byte rate
    put_u16(header, 2);  // block align
    put_u16(header, 16); // bits per sample
    header += "data";
    put_u32(header, data_bytes);

    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    os.write(header.data(), static_cast<std::streamsize>(header.size()));
    std::vector<char> buf(data_bytes);
    for (uint32_t i = 0; i < n; ++i) {
        const double v = std::min(1.0, std::max(-1.0, audio.samples[i]));
        const int16_t q = static_cast<int16_t>(std::lround(v * 32767.0));
        buf[2 * i] = static_cast<char>(q & 0xff);
        buf[2 * i + 1] = static_cast<char>((q >> 8) & 0xff);
    }
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!os) throw IoError("write failed: " + path.string());
}

dsp::SampleBuffer read_wav(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (bytes.size() < 44) throw FormatError("WAV too short: " + path.string());
    const unsigned char* p = reinterpret_cast<const unsigned char*>(bytes.data());
    if (std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0) {
        throw FormatError("not a RIFF/WAVE file: " + path.string());
    }

    size_t pos = 12;
    uint16_t channels = 0, bits = 0;
    uint32_t rate = 0;
    size_t data_pos = 0, data_len = 0;
    while (pos + 8 <= bytes.size()) {
        const uint32_t chunk_len = get_u32(p + pos + 4);
        if (std::memcmp(p + pos, "fmt ", 4) == 0) {
            if (chunk_len < 16) throw FormatError("bad fmt chunk");
            if (get_u16(p + pos + 8) != 1) throw FormatError("only PCM WAV is supported");
            channels = get_u16(p + pos + 10);
            rate = get_u32(p + pos + 12);
            bits = get_u16(p + pos + 22);
        } else if (std::memcmp(p + pos, "data", 4) == 0) {
            data_pos = pos + 8;
            data_len = chunk_len;
        }
        pos += 8 + chunk_len + (chunk_len & 1);
    }
    if (channels != 1 || bits != 16) throw FormatError("WAV must be 16-bit mono");
    if (data_pos == 0 || data_pos + data_len > bytes.size()) {
        throw FormatError("WAV data chunk missing or truncated");
    }

    dsp::SampleBuffer out;
    out.rate_hz = static_cast<double>(rate);
    out.samples.resize(data_len / 2);
    for (size_t i = 0; i < out.samples.size(); ++i) {
        const int16_t q = static_cast<int16_t>(get_u16(p + data_pos + 2 * i));
        out.samples[i] = static_cast<double>(q) / 32767.0;
    }
    return out;
}

namespace {

const char* kStreamsHeader =
    "t,shoulder_lx,shoulder_ly,shoulder_rx,shoulder_ry,eeg1,eeg2,eeg3,eeg4,eda,flow";

std::string format_tick_time(int64_t tick) {
    const bool neg = tick < 0;
    const int64_t a = neg ? -tick : tick;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%lld.%lld", neg ? "-" : "",
                  static_cast<long long>(a / 10), static_cast<long long>(a % 10));
    return buf;
}

} // namespace

void save_recording(const PerformanceRecording& rec, const fs::path& dir) {
    rec.validate();
    fs::create_directories(dir);
    write_wav(dir / "audio.wav", rec.audio);

    std::ofstream os(dir / "streams.csv", std::ios::binary);
    if (!os) throw IoError("cannot write " + (dir / "streams.csv").string());
    os << kStreamsHeader << "\n";
    char buf[64];
    const size_t n = rec.flow.length();
    for (size_t i = 0; i < n; ++i) {
        os << format_tick_time(static_cast<int64_t>(i));
        const double row[10] = {
            rec.shoulder_left.channels[0].samples[i], rec.shoulder_left.channels[1].samples[i],
            rec.shoulder_right.channels[0].samples[i], rec.shoulder_right.channels[1].samples[i],
            rec.eeg.channels[0].samples[i], rec.eeg.channels[1].samples[i],
            rec.eeg.channels[2].samples[i], rec.eeg.channels[3].samples[i],
            rec.eda.channels[0].samples[i], rec.flow.channels[0].samples[i]};
        for (double v : row) {
            std::snprintf(buf, sizeof(buf), ",%.17g", v);
            os << buf;
        }
        os << "\n";
    }
    if (!os) throw IoError("write failed: " + (dir / "streams.csv").string());
}

PerformanceRecording load_recording(const fs::path& dir) {
    PerformanceRecording rec;
    rec.audio = read_wav(dir / "audio.wav");
    if (rec.audio.rate_hz != kAudioRateHz) {
        throw FormatError("audio.wav must be 44,100 Hz in " + dir.string());
    }

    std::ifstream is(dir / "streams.csv", std::ios::binary);
    if (!is) throw IoError("cannot open " + (dir / "streams.csv").string());
    std::string line;
    if (!std::getline(is, line)) throw FormatError("streams.csv is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kStreamsHeader) {
        throw FormatError("streams.csv header mismatch (expected \"" +
                          std::string(kStreamsHeader) + "\")");
    }

    std::vector<std::array<double, 10>> rows;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::array<double, 10> row;
        const char* s = line.c_str();
        char* end = nullptr;
        // skip the t column
        std::strtod(s, &end);
        if (end == s) throw FormatError("bad t value in streams.csv");
        s = end;
        for (int c = 0; c < 10; ++c) {
            if (*s != ',') throw FormatError("streams.csv row has too few columns");
            ++s;
            row[static_cast<size_t>(c)] = std::strtod(s, &end);
            if (end == s) throw FormatError("bad numeric value in streams.csv");
            s = end;
        }
        if (*s != '\0') throw FormatError("streams.csv row has too many columns");
        rows.push_back(row);
    }
    if (rows.empty()) throw FormatError("streams.csv has no data rows");

    const size_t n = rows.size();
    auto make_mcb = [&](int chans) {
        dsp::MultiChannelBuffer b;
        for (int c = 0; c < chans; ++c) {
            dsp::SampleBuffer ch;
            ch.rate_hz = kTickRateHz;
            ch.samples.resize(n);
            b.channels.push_back(std::move(ch));
        }
        return b;
    };
    rec.shoulder_left = make_mcb(2);
    rec.shoulder_right = make_mcb(2);
    rec.eeg = make_mcb(4);
    rec.eda = make_mcb(1);
    rec.flow = make_mcb(1);
    for (size_t i = 0; i < n; ++i) {
        rec.shoulder_left.channels[0].samples[i] = rows[i][0];
        rec.shoulder_left.channels[1].samples[i] = rows[i][1];
        rec.shoulder_right.channels[0].samples[i] = rows[i][2];
        rec.shoulder_right.channels[1].samples[i] = rows[i][3];
        for (int c = 0; c < 4; ++c) rec.eeg.channels[c].samples[i] = rows[i][4 + c];
        rec.eda.channels[0].samples[i] = rows[i][8];
        rec.flow.channels[0].samples[i] = rows[i][9];
    }
    rec.duration_s = static_cast<double>(n) / kTickRateHz;
    rec.validate(); // length cross-checks audio vs streams
    return rec;
}

void write_manifest(const fs::path& root, const std::vector<std::string>& dirs) {
    fs::create_directories(root);
    std::ofstream os(root / "manifest.csv", std::ios::binary);
    if (!os) throw IoError("cannot write manifest.csv");
    os << "dir\n";
    for (const auto& d : dirs) os << d << "\n";
}

std::vector<std::string> read_manifest(const fs::path& root) {
    std::ifstream is(root / "manifest.csv");
    if (!is) throw IoError("cannot open " + (root / "manifest.csv").string());
    std::string line;
    if (!std::getline(is, line)) throw FormatError("manifest.csv is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "dir") throw FormatError("manifest.csv header must be \"dir\"");
    std::vector<std::string> dirs;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) dirs.push_back(line);
    }
    return dirs;
}

std::vector<AlignedChunk> load_dataset_chunks(const fs::path& root) {
    const std::vector<std::string> dirs = read_manifest(root);
    std::vector<std::vector<AlignedChunk>> per_rec(dirs.size());
    std::exception_ptr error;

    // Feature extraction is independent per recording. Exceptions must not
    // escape the parallel region; the first one is rethrown afterwards.
#pragma omp parallel for schedule(dynamic)
    for (int64_t i = 0; i < static_cast<int64_t>(dirs.size()); ++i) {
        try {
            const PerformanceRecording rec = load_recording(root / dirs[static_cast<size_t>(i)]);
            per_rec[static_cast<size_t>(i)] =
                chunk(extract_features(rec), dirs[static_cast<size_t>(i)]);
        } catch (...) {
#pragma omp critical
            {
                if (!error) error = std::current_exception();
            }
        }
    }
    if (error) std::rethrow_exception(error);

    std::vector<AlignedChunk> all;
    for (auto& v : per_rec) {
        for (auto& c : v) all.push_back(std::move(c));
    }
    return all;
}

} // namespace jess::emd
