#include "jess/factory.hpp"

#include "jess/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <set>

namespace jess::factory {

namespace fs = std::filesystem;
using emd::FeatureKind;
using neural::Tensor;

namespace {

const std::array<RoleSpec, 7> kRoles = {{
    {ModelRole::R1, "r1", FeatureKind::AudioEnvelope, FeatureKind::Flow, 1, 1},
    {ModelRole::R2, "r2", FeatureKind::AudioEnvelope, FeatureKind::Core, 1, 2},
    {ModelRole::R3, "r3", FeatureKind::Core, FeatureKind::Flow, 2, 1},
    {ModelRole::R4, "r4", FeatureKind::Eeg, FeatureKind::Flow, 4, 1},
    {ModelRole::R5, "r5", FeatureKind::Eda, FeatureKind::Flow, 1, 1},
    {ModelRole::R6, "r6", FeatureKind::Flow, FeatureKind::Core, 1, 2},
    {ModelRole::R7, "r7", FeatureKind::Flow, FeatureKind::AudioEnvelope, 1, 1},
}};

} // namespace

const RoleSpec& role_spec(ModelRole role) { return kRoles[static_cast<size_t>(role)]; }

const std::vector<ModelRole>& all_roles() {
    static const std::vector<ModelRole> roles = {ModelRole::R1, ModelRole::R2, ModelRole::R3,
                                                 ModelRole::R4, ModelRole::R5, ModelRole::R6,
                                                 ModelRole::R7};
    return roles;
}

std::optional<ModelRole> role_from_id(const std::string& id) {
    std::string s = id;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    for (const RoleSpec& spec : kRoles) {
        if (s == spec.id || s == std::string(spec.id).substr(1)) return spec.role;
    }
    return std::nullopt;
}

Hyperparams default_hyperparams(ModelRole role) {
    Hyperparams hp; // lr 5e-5, batch 32
    if (role == ModelRole::R6) {
        hp.lr = 1e-5;
        hp.batch = 16;
    }
    return hp;
}

const char* stream_name(StreamId id) {
    switch (id) {
    case StreamId::M1: return "m1";
    case StreamId::M2: return "m2";
    case StreamId::M3: return "m3";
    case StreamId::M4: return "m4";
    case StreamId::M5: return "m5";
    case StreamId::M6: return "m6";
    case StreamId::M7: return "m7";
    case StreamId::AudioAmplitude: return "audio_amplitude";
    case StreamId::RandomPoetry: return "random_poetry";
    }
    return "?";
}

std::optional<StreamId> stream_from_name(const std::string& name) {
    for (StreamId id : kAllStreams) {
        if (name == stream_name(id)) return id;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace {

neural::HourglassConfig config_for(ModelRole role) {
    const RoleSpec& spec = role_spec(role);
    neural::HourglassConfig cfg;
    cfg.in_channels = spec.n;
    cfg.out_channels = spec.m;
    cfg.validate();
    return cfg;
}

// Normalized (x, y) tensors for one role over the given chunk indices.
void build_tensors(const std::vector<emd::AlignedChunk>& chunks, const std::vector<int>& indices,
                   const RoleSpec& spec, const emd::NormStats& stats, Tensor& x, Tensor& y) {
    const int n_ex = static_cast<int>(indices.size());
    x = Tensor::zeros({n_ex, spec.n, emd::kChunkLen});
    y = Tensor::zeros({n_ex, spec.m, emd::kChunkLen});
    for (int e = 0; e < n_ex; ++e) {
        const emd::AlignedChunk& ac = chunks[static_cast<size_t>(indices[static_cast<size_t>(e)])];
        const emd::FeatureChunk& in = ac.by_kind.at(spec.input);
        const emd::FeatureChunk& out = ac.by_kind.at(spec.output);
        for (int c = 0; c < spec.n; ++c) {
            for (int t = 0; t < emd::kChunkLen; ++t) {
                x.at(e, c, t) = stats.normalize(spec.input, c, in.at(c, t));
            }
        }
        for (int c = 0; c < spec.m; ++c) {
            for (int t = 0; t < emd::kChunkLen; ++t) {
                y.at(e, c, t) = stats.normalize(spec.output, c, out.at(c, t));
            }
        }
    }
}

Tensor slice_batch(const Tensor& all, const std::vector<int>& order, size_t start, size_t count) {
    Tensor out = Tensor::zeros({static_cast<int>(count), all.shape[1], all.shape[2]});
    const size_t stride = static_cast<size_t>(all.shape[1]) * all.shape[2];
    for (size_t b = 0; b < count; ++b) {
        const size_t src = static_cast<size_t>(order[start + b]) * stride;
        std::copy(all.data.begin() + static_cast<long>(src),
                  all.data.begin() + static_cast<long>(src + stride),
                  out.data.begin() + static_cast<long>(b * stride));
    }
    return out;
}

double validation_mse(const neural::HourglassConfig& cfg, neural::ModelWeights& w,
                      const Tensor& vx, const Tensor& vy) {
    const Tensor pred = neural::hourglass_forward(cfg, w, vx, neural::Mode::Infer);
    return neural::mse_loss(pred, vy);
}

// 75/25 split of chunk indices, either directly or grouped by source
// performance.
emd::DatasetSplit make_split(const std::vector<emd::AlignedChunk>& chunks, SplitMode mode,
                             uint64_t seed) {
    const int n = static_cast<int>(chunks.size());
    if (mode == SplitMode::Chunk) return emd::split(n, seed);

    std::vector<std::string> sources;
    for (const auto& c : chunks) {
        if (std::find(sources.begin(), sources.end(), c.source_id) == sources.end()) {
            sources.push_back(c.source_id);
        }
    }
    const emd::DatasetSplit src_split = emd::split(static_cast<int>(sources.size()), seed);
    std::set<std::string> train_sources;
    for (int i : src_split.train) train_sources.insert(sources[static_cast<size_t>(i)]);

    emd::DatasetSplit out;
    out.seed = seed;
    for (int i = 0; i < n; ++i) {
        if (train_sources.count(chunks[static_cast<size_t>(i)].source_id)) {
            out.train.push_back(i);
        } else {
            out.validation.push_back(i);
        }
    }
    if (out.train.empty() || out.validation.empty()) {
        throw InputError("performance-level split produced an empty side");
    }
    return out;
}

} // namespace

FactoryBundle train_factory(const std::vector<emd::AlignedChunk>& chunks, const TrainOptions& opts,
                            std::map<ModelRole, TrainReport>* reports) {
    if (chunks.size() < 8) {
        throw InputError("training needs at least 8 examples, got " +
                         std::to_string(chunks.size()));
    }
    const emd::DatasetSplit split = make_split(chunks, opts.split_mode, opts.seed);
    const emd::NormStats stats = emd::compute_norm_stats(chunks, split.train);

    FactoryBundle bundle;
    bundle.manifest = {{"seed", opts.seed},
                       {"dataset_id", opts.dataset_id},
                       {"examples", chunks.size()},
                       {"train_examples", split.train.size()},
                       {"validation_examples", split.validation.size()},
                       {"split_mode", opts.split_mode == SplitMode::Chunk ? "chunk" : "performance"},
                       {"norm_stats", stats.to_json()},
                       {"roles", nlohmann::json::object()}};

    Rng root(opts.seed);
    for (ModelRole role : opts.roles) {
        const RoleSpec& spec = role_spec(role);
        Hyperparams hp = default_hyperparams(role);
        if (auto it = opts.hyperparams.find(role); it != opts.hyperparams.end()) hp = it->second;

        const neural::HourglassConfig cfg = config_for(role);
        Rng init_rng = root.split(static_cast<uint64_t>(role) + 10);
        Rng shuffle_rng = root.split(static_cast<uint64_t>(role) + 100);

        Tensor train_x, train_y, val_x, val_y;
        build_tensors(chunks, split.train, spec, stats, train_x, train_y);
        build_tensors(chunks, split.validation, spec, stats, val_x, val_y);

        neural::ModelWeights weights = neural::ModelWeights::init(cfg, init_rng);
        neural::AdamState adam = neural::AdamState::for_weights(weights, hp.lr);

        TrainReport report;
        neural::ModelWeights best_weights = weights;
        double best_val = std::numeric_limits<double>::infinity();
        int best_epoch = -1;

        std::vector<int> order(split.train.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

        try {
            for (int epoch = 0; epoch < hp.max_epochs; ++epoch) {
                for (size_t i = order.size() - 1; i > 0; --i) {
                    const size_t j = shuffle_rng.uniform_index(static_cast<uint32_t>(i + 1));
                    std::swap(order[i], order[j]);
                }
                double train_acc = 0.0;
                int n_batches = 0;
                const size_t bs = static_cast<size_t>(hp.batch);
                for (size_t start = 0; start + bs <= order.size(); start += bs) {
                    const Tensor bx = slice_batch(train_x, order, start, bs);
                    const Tensor by = slice_batch(train_y, order, start, bs);
                    train_acc += neural::train_step(cfg, weights, adam, bx, by);
                    ++n_batches;
                }
                if (n_batches == 0) {
                    throw InputError("batch size exceeds the training set for role " +
                                     std::string(spec.id));
                }
                EpochStats es;
                es.train_mse = train_acc / n_batches;
                es.val_mse = validation_mse(cfg, weights, val_x, val_y);
                report.epochs.push_back(es);
                if (opts.log) {
                    (*opts.log) << spec.id << " epoch " << (epoch + 1) << " train_mse "
                                << es.train_mse << " val_mse " << es.val_mse << "\n";
                }
                if (es.val_mse < best_val) {
                    best_val = es.val_mse;
                    best_epoch = epoch;
                    best_weights = weights;
                } else if (epoch - best_epoch >= hp.patience) {
                    break;
                }
            }
        } catch (const DivergenceError& e) {
            throw DivergenceError(std::string("role ") + spec.id + ": " + e.what());
        }

        report.best_epoch = best_epoch;
        report.best_val = best_val;
        if (reports) (*reports)[role] = report;

        TrainedModel model;
        model.config = cfg;
        model.weights = best_weights;
        model.meta = {{"role", spec.id},
                      {"seed", opts.seed},
                      {"hyperparameters",
                       {{"lr", hp.lr},
                        {"batch", hp.batch},
                        {"max_epochs", hp.max_epochs},
                        {"patience", hp.patience}}},
                      {"epochs_trained", report.epochs.size()},
                      {"best_epoch", best_epoch + 1},
                      {"best_val_mse", best_val},
                      {"norm_stats",
                       {{kind_name(spec.input), stats.to_json()[kind_name(spec.input)]},
                        {kind_name(spec.output), stats.to_json()[kind_name(spec.output)]}}}};
        bundle.models[role] = std::move(model);
        bundle.manifest["roles"][spec.id] = std::string(spec.id) + ".jessw";
    }
    return bundle;
}

void save_bundle(const fs::path& dir, const FactoryBundle& bundle) {
    fs::create_directories(dir);
    nlohmann::json manifest = bundle.manifest.is_null() ? nlohmann::json::object()
                                                        : bundle.manifest;
    manifest["roles"] = nlohmann::json::object();
    for (const auto& [role, model] : bundle.models) {
        const std::string file = std::string(role_spec(role).id) + ".jessw";
        neural::save_weights(dir / file, model.meta, model.config, model.weights);
        manifest["roles"][role_spec(role).id] = file;
    }
    std::ofstream os(dir / "bundle.json");
    if (!os) throw IoError("cannot write " + (dir / "bundle.json").string());
    os << manifest.dump(2) << "\n";
}

FactoryBundle load_bundle(const fs::path& dir) {
    std::ifstream is(dir / "bundle.json");
    if (!is) throw IoError("cannot open " + (dir / "bundle.json").string());
    nlohmann::json manifest;
    try {
        is >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bundle.json is not valid JSON: ") + e.what());
    }
    if (!manifest.contains("roles")) throw FormatError("bundle.json lacks a roles map");

    FactoryBundle bundle;
    bundle.manifest = manifest;
    for (ModelRole role : all_roles()) {
        const RoleSpec& spec = role_spec(role);
        if (!manifest["roles"].contains(spec.id)) {
            throw FormatError("bundle.json lacks role " + std::string(spec.id));
        }
        const std::string file = manifest["roles"][spec.id].get<std::string>();
        neural::LoadedModel loaded = neural::load_weights(dir / file);
        if (loaded.config.in_channels != spec.n || loaded.config.out_channels != spec.m) {
            throw ShapeError("role " + std::string(spec.id) + " weights have channels " +
                             std::to_string(loaded.config.in_channels) + "->" +
                             std::to_string(loaded.config.out_channels) + ", expected " +
                             std::to_string(spec.n) + "->" + std::to_string(spec.m));
        }
        TrainedModel model;
        model.config = loaded.config;
        model.weights = std::move(loaded.weights);
        model.meta = std::move(loaded.meta);
        bundle.models[role] = std::move(model);
    }
    return bundle;
}

FactoryBundle seeded_bundle(uint64_t seed) {
    FactoryBundle bundle;
    Rng root(seed);
    for (ModelRole role : all_roles()) {
        const RoleSpec& spec = role_spec(role);
        TrainedModel model;
        model.config = config_for(role);
        Rng init = root.split(static_cast<uint64_t>(role) + 10);
        model.weights = neural::ModelWeights::init(model.config, init);
        model.meta = {{"role", spec.id}, {"seed", seed}, {"untrained", true}};
        bundle.models[role] = std::move(model);
    }
    bundle.manifest = {{"seed", seed}, {"dataset_id", "untrained"}};
    return bundle;
}

// ---------------------------------------------------------------------------
// Live pipeline
// ---------------------------------------------------------------------------

namespace {

void check_live_buffer(const dsp::MultiChannelBuffer& buf, int channels, const char* what) {
    if (static_cast<int>(buf.channel_count()) != channels) {
        throw InputError(std::string(what) + ": expected " + std::to_string(channels) +
                         " channels");
    }
    if (buf.length() != static_cast<size_t>(emd::kChunkLen)) {
        throw InputError(std::string(what) + ": live buffers must hold " +
                         std::to_string(emd::kChunkLen) + " samples");
    }
}

dsp::MultiChannelBuffer detrend_channels(const dsp::MultiChannelBuffer& buf) {
    dsp::MultiChannelBuffer out;
    for (const auto& ch : buf.channels) out.channels.push_back(dsp::detrend(ch));
    return out;
}

double tensor_mean(const Tensor& t) {
    double acc = 0.0;
    for (double v : t.data) acc += v;
    return acc / static_cast<double>(t.numel());
}

Tensor tensor_from_buffer(const dsp::MultiChannelBuffer& buf) {
    Tensor t = Tensor::zeros({1, static_cast<int>(buf.channel_count()),
                              static_cast<int>(buf.length())});
    for (size_t c = 0; c < buf.channel_count(); ++c) {
        for (size_t i = 0; i < buf.length(); ++i) {
            t.at(0, static_cast<int>(c), static_cast<int>(i)) = buf.channels[c].samples[i];
        }
    }
    return t;
}

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

void set_stream(ThoughtTrains& t, StreamId id, double v) {
    t.value[static_cast<size_t>(id)] = clamp01(v);
    t.available[static_cast<size_t>(id)] = true;
}

} // namespace

LiveBuffers normalize_live(const LiveBuffers& raw) {
    check_live_buffer(raw.audio_env, 1, "audio envelope buffer");
    check_live_buffer(raw.arm_xy, 2, "arm position buffer");
    LiveBuffers out;
    out.audio_env = dsp::buffer_normalize(raw.audio_env);
    out.arm_xy = dsp::buffer_normalize(raw.arm_xy);
    if (raw.eeg) {
        check_live_buffer(*raw.eeg, 4, "EEG buffer");
        out.eeg = dsp::buffer_normalize(detrend_channels(*raw.eeg));
    }
    if (raw.eda) {
        check_live_buffer(*raw.eda, 1, "EDA buffer");
        out.eda = dsp::buffer_normalize(detrend_channels(*raw.eda));
    }
    return out;
}

std::vector<StreamId> set_stream_availability(bool sensors_enabled, bool bundle_loaded,
                                              const std::optional<std::vector<StreamId>>& filter) {
    std::vector<StreamId> eligible;
    if (bundle_loaded) {
        eligible.insert(eligible.end(), {StreamId::M1, StreamId::M2, StreamId::M3});
        if (sensors_enabled) {
            eligible.insert(eligible.end(),
                            {StreamId::M4, StreamId::M5, StreamId::M6, StreamId::M7});
        }
    }
    eligible.insert(eligible.end(), {StreamId::AudioAmplitude, StreamId::RandomPoetry});

    if (filter) {
        std::vector<StreamId> filtered;
        for (StreamId id : eligible) {
            if (std::find(filter->begin(), filter->end(), id) != filter->end()) {
                filtered.push_back(id);
            }
        }
        eligible = std::move(filtered);
    }
    if (eligible.empty()) {
        throw ConfigError("no thought-train streams are enabled");
    }
    return eligible;
}

neural::Tensor run_role(const FactoryBundle& bundle, ModelRole role,
                        const dsp::MultiChannelBuffer& input) {
    const auto it = bundle.models.find(role);
    if (it == bundle.models.end()) {
        throw ConfigError("bundle lacks role " + std::string(role_spec(role).id));
    }
    const Tensor x = tensor_from_buffer(input);
    return neural::hourglass_forward(it->second.config, it->second.weights, x,
                                     neural::Mode::Infer);
}

ThoughtTrains predict_tick(const FactoryBundle* bundle, const LiveBuffers& normalized,
                           Rng& poetry_rng, int64_t tick) {
    check_live_buffer(normalized.audio_env, 1, "audio envelope buffer");
    check_live_buffer(normalized.arm_xy, 2, "arm position buffer");

    ThoughtTrains trains;
    trains.tick = tick;

    if (bundle) {
        set_stream(trains, StreamId::M1,
                   tensor_mean(run_role(*bundle, ModelRole::R1, normalized.audio_env)));
        set_stream(trains, StreamId::M2,
                   tensor_mean(run_role(*bundle, ModelRole::R2, normalized.audio_env)));
        set_stream(trains, StreamId::M3,
                   tensor_mean(run_role(*bundle, ModelRole::R3, normalized.arm_xy)));
        if (normalized.eeg) {
            const Tensor flow_d = run_role(*bundle, ModelRole::R4, *normalized.eeg);
            set_stream(trains, StreamId::M4, tensor_mean(flow_d));

            // models 6 and 7 consume the same-tick output of model 4
            dsp::MultiChannelBuffer flow_buf;
            dsp::SampleBuffer ch;
            ch.rate_hz = emd::kTickRateHz;
            ch.samples.assign(flow_d.data.begin(), flow_d.data.end());
            flow_buf.channels.push_back(std::move(ch));
            set_stream(trains, StreamId::M6,
                       tensor_mean(run_role(*bundle, ModelRole::R6, flow_buf)));
            set_stream(trains, StreamId::M7,
                       tensor_mean(run_role(*bundle, ModelRole::R7, flow_buf)));
        }
        if (normalized.eda) {
            set_stream(trains, StreamId::M5,
                       tensor_mean(run_role(*bundle, ModelRole::R5, *normalized.eda)));
        }
    }

    set_stream(trains, StreamId::AudioAmplitude,
               dsp::amplitude(normalized.audio_env.channels[0]));
    set_stream(trains, StreamId::RandomPoetry, poetry_rng.uniform01());
    return trains;
}

} // namespace jess::factory
