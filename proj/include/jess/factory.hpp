#pragma once

#include "jess/emd.hpp"
#include "jess/neural/model.hpp"
#include "jess/rng.hpp"

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace jess::factory {

// The seven prediction roles. Input/output feature kinds fix the channel
// counts of each hourglass.
enum class ModelRole { R1, R2, R3, R4, R5, R6, R7 };

struct RoleSpec {
    ModelRole role;
    const char* id;
    emd::FeatureKind input;
    emd::FeatureKind output;
    int n; // input channels
    int m; // output channels
};

const RoleSpec& role_spec(ModelRole role);
const std::vector<ModelRole>& all_roles();
std::optional<ModelRole> role_from_id(const std::string& id); // "r4", "4", "R4"

struct Hyperparams {
    double lr = 5e-5;
    int batch = 32;
    int max_epochs = 200;
    int patience = 20; // early stop after this many non-improving epochs
};

// R4 and R6 carry their published settings; the rest reuse R4's.
Hyperparams default_hyperparams(ModelRole role);

struct TrainedModel {
    neural::HourglassConfig config;
    neural::ModelWeights weights;
    nlohmann::json meta;
};

struct EpochStats {
    double train_mse = 0.0;
    double val_mse = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;
    double best_val = 0.0;
};

enum class SplitMode { Chunk, Performance };

struct TrainOptions {
    std::vector<ModelRole> roles = all_roles();
    std::map<ModelRole, Hyperparams> hyperparams; // missing roles use defaults
    uint64_t seed = 0;
    SplitMode split_mode = SplitMode::Chunk;
    std::string dataset_id;
    std::ostream* log = nullptr; // per-epoch curves when set
};

struct FactoryBundle {
    std::map<ModelRole, TrainedModel> models;
    nlohmann::json manifest;

    bool has(ModelRole role) const { return models.count(role) > 0; }
};

// Train the requested roles on aligned chunks (needs >= 8 examples). Targets
// and inputs are min-max scaled with training-set stats.
FactoryBundle train_factory(const std::vector<emd::AlignedChunk>& chunks,
                            const TrainOptions& opts,
                            std::map<ModelRole, TrainReport>* reports = nullptr);

// Bundle directory: r1.jessw ... r7.jessw plus bundle.json.
void save_bundle(const std::filesystem::path& dir, const FactoryBundle& bundle);
FactoryBundle load_bundle(const std::filesystem::path& dir);

// A bundle with freshly initialized (untrained) weights; valid for inference.
FactoryBundle seeded_bundle(uint64_t seed);

// 5-second sliding windows at 10 Hz. EEG/EDA are absent when the wearables
// are off.
struct LiveBuffers {
    dsp::MultiChannelBuffer audio_env; // 1 channel
    dsp::MultiChannelBuffer arm_xy;    // 2 channels
    std::optional<dsp::MultiChannelBuffer> eeg; // 4 channels
    std::optional<dsp::MultiChannelBuffer> eda; // 1 channel
};

// Live preprocessing: EEG/EDA are detrended, then every buffer is min-max
// normalized across its own 5-second window.
LiveBuffers normalize_live(const LiveBuffers& raw);

enum class StreamId { M1, M2, M3, M4, M5, M6, M7, AudioAmplitude, RandomPoetry };
inline constexpr int kStreamCount = 9;
inline constexpr std::array<StreamId, kStreamCount> kAllStreams = {
    StreamId::M1, StreamId::M2, StreamId::M3, StreamId::M4, StreamId::M5,
    StreamId::M6, StreamId::M7, StreamId::AudioAmplitude, StreamId::RandomPoetry};

const char* stream_name(StreamId id);
std::optional<StreamId> stream_from_name(const std::string& name);

// The nine 10 Hz scalar streams, each in [0,1].
struct ThoughtTrains {
    std::array<double, kStreamCount> value{};
    std::array<bool, kStreamCount> available{};
    int64_t tick = 0;

    double get(StreamId id) const { return value[static_cast<size_t>(id)]; }
    bool is_available(StreamId id) const { return available[static_cast<size_t>(id)]; }
};

// Streams the gesture manager may select from. Model streams require a
// bundle; m4-m7 additionally require the wearable sensors. Empty result ->
// configuration error.
std::vector<StreamId> set_stream_availability(bool sensors_enabled, bool bundle_loaded,
                                              const std::optional<std::vector<StreamId>>& filter);

// One inference pass of a single role on a (channels x 50) buffer.
neural::Tensor run_role(const FactoryBundle& bundle, ModelRole role,
                        const dsp::MultiChannelBuffer& input);

// The per-tick pipeline a)-g): models 1-5 read the live buffers, models 6 and
// 7 consume the same-tick output of model 4. Each model output is averaged
// over channels and time. audio_amplitude is the RMS of the normalized
// envelope buffer; random_poetry is a fresh uniform draw.
ThoughtTrains predict_tick(const FactoryBundle* bundle, const LiveBuffers& normalized,
                           Rng& poetry_rng, int64_t tick);

} // namespace jess::factory
