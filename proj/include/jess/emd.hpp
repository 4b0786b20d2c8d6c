#pragma once

#include "jess/dsp.hpp"
#include "jess/rng.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace jess::emd {

inline constexpr double kTickRateHz = 10.0;
inline constexpr double kAudioRateHz = 44100.0;
inline constexpr int kChunkLen = 50; // 5 seconds at 10 Hz

enum class FeatureKind { AudioEnvelope, Core, Eeg, Eda, Flow };

int channel_count(FeatureKind kind);
const char* kind_name(FeatureKind kind);
const std::vector<FeatureKind>& all_kinds();

// One performance: mono audio at 44.1 kHz plus the 10 Hz streams.
struct PerformanceRecording {
    dsp::SampleBuffer audio;            // 44,100 Hz
    dsp::MultiChannelBuffer shoulder_left;  // 2 channels (x, y) @ 10 Hz
    dsp::MultiChannelBuffer shoulder_right; // 2 channels (x, y) @ 10 Hz
    dsp::MultiChannelBuffer eeg;        // 4 channels @ 10 Hz
    dsp::MultiChannelBuffer eda;        // 1 channel @ 10 Hz
    dsp::MultiChannelBuffer flow;       // 1 channel @ 10 Hz
    double duration_s = 0.0;

    void validate() const;
};

// channels x 50 matrix of one feature kind.
struct FeatureChunk {
    FeatureKind kind = FeatureKind::Flow;
    int channels = 1;
    std::vector<double> values; // row-major channels x kChunkLen
    std::string source_id;
    int chunk_index = 0;

    double at(int c, int t) const { return values[static_cast<size_t>(c) * kChunkLen + t]; }
};

// All five feature kinds over the same 5-second span.
struct AlignedChunk {
    std::string source_id;
    int chunk_index = 0;
    std::map<FeatureKind, FeatureChunk> by_kind;
};

// Per-kind, per-channel minima and maxima over a training set.
struct NormStats {
    std::map<FeatureKind, std::vector<std::pair<double, double>>> minmax;

    // Min-max scale into [0,1]; a degenerate channel (max == min) maps to 0.5.
    double normalize(FeatureKind kind, int channel, double v) const;

    nlohmann::json to_json() const;
    static NormStats from_json(const nlohmann::json& j);
};

struct DatasetSplit {
    std::vector<int> train;
    std::vector<int> validation;
    uint64_t seed = 0;
};

using FeatureMap = std::map<FeatureKind, dsp::MultiChannelBuffer>;

// Midpoint of the two shoulder points, per sample.
dsp::MultiChannelBuffer compute_core(const dsp::MultiChannelBuffer& shoulder_left,
                                     const dsp::MultiChannelBuffer& shoulder_right);

// Hilbert envelope of the audio, block-averaged down to 10 Hz.
dsp::SampleBuffer audio_envelope_10hz(const dsp::SampleBuffer& audio);

// Envelope + core + high-passed EEG + raw EDA and flow, all @ 10 Hz and cut
// to a common length.
FeatureMap extract_features(const PerformanceRecording& rec);

// Non-overlapping aligned 50-sample chunks; the trailing remainder is dropped.
std::vector<AlignedChunk> chunk(const FeatureMap& features, const std::string& source_id);

// Deterministic 75/25 shuffle split over example indices.
DatasetSplit split(int n_examples, uint64_t seed);

NormStats compute_norm_stats(const std::vector<AlignedChunk>& chunks,
                             const std::vector<int>& train_indices);

// Deterministic synthetic performance with documented, learnable couplings:
//  - audio is an amplitude-modulated 220 Hz tone; the modulation envelope is
//    a slow positive signal e(t) (a 23 s sinusoid plus slower seeded drift),
//  - flow is the 2 s running mean of e lagged by 0.5 s,
//  - the shoulder midpoint (core) drifts with lagged/smoothed flow and adds a
//    low-amplitude slow oscillation whose amplitude tracks flow,
//  - EEG channels carry flow-amplitude-modulated 1.7-3.7 Hz carriers plus
//    noise and sub-1-Hz drift,
//  - EDA is a slow drift plus a 2.5 s zero-order hold of 0.6*flow.
PerformanceRecording synthesize_recording(uint64_t seed, double duration_s);

// On-disk layout: one directory per performance holding audio.wav (PCM16
// mono, 44,100 Hz) and streams.csv (t,shoulder_lx,shoulder_ly,shoulder_rx,
// shoulder_ry,eeg1..eeg4,eda,flow at 10 Hz).
void save_recording(const PerformanceRecording& rec, const std::filesystem::path& dir);
PerformanceRecording load_recording(const std::filesystem::path& dir);

// manifest.csv in a dataset root lists the performance directories.
void write_manifest(const std::filesystem::path& root, const std::vector<std::string>& dirs);
std::vector<std::string> read_manifest(const std::filesystem::path& root);

// Convenience: load every performance in a dataset root and chunk it.
std::vector<AlignedChunk> load_dataset_chunks(const std::filesystem::path& root);

// WAV helpers (PCM16 mono little-endian).
void write_wav(const std::filesystem::path& path, const dsp::SampleBuffer& audio);
dsp::SampleBuffer read_wav(const std::filesystem::path& path);

} // namespace jess::emd
