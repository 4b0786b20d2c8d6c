#include "jess/neural/model.hpp"

#include "jess/errors.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace jess::neural {

void HourglassConfig::validate() const {
    if (in_channels < 1 || out_channels < 1) throw ShapeError("channel counts must be >= 1");
    if (conv_out_len() != 16) {
        throw ShapeError("conv output length must be 16, got " + std::to_string(conv_out_len()));
    }
    if (flatten_size() != fc2) {
        throw ShapeError("flatten size must equal fc2 (" + std::to_string(flatten_size()) +
                         " != " + std::to_string(fc2) + ")");
    }
    const int tlen = (conv_out_len() - 1) * stride + kernel;
    if (tlen != time_len) {
        throw ShapeError("transposed conv output length must equal time_len");
    }
}

nlohmann::json HourglassConfig::to_json() const {
    return {{"in_channels", in_channels}, {"out_channels", out_channels},
            {"conv_channels", conv_channels}, {"kernel", kernel}, {"stride", stride},
            {"time_len", time_len}, {"fc1", fc1}, {"fc2", fc2},
            {"second_batchnorm", second_batchnorm}};
}

HourglassConfig HourglassConfig::from_json(const nlohmann::json& j) {
    HourglassConfig c;
    c.in_channels = j.at("in_channels").get<int>();
    c.out_channels = j.at("out_channels").get<int>();
    c.conv_channels = j.at("conv_channels").get<int>();
    c.kernel = j.at("kernel").get<int>();
    c.stride = j.at("stride").get<int>();
    c.time_len = j.at("time_len").get<int>();
    c.fc1 = j.at("fc1").get<int>();
    c.fc2 = j.at("fc2").get<int>();
    c.second_batchnorm = j.value("second_batchnorm", true);
    c.validate();
    return c;
}

namespace {

Tensor uniform_fan_in(std::vector<int> shape, int fan_in, Rng& rng) {
    Tensor t = Tensor::zeros(std::move(shape));
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double& v : t.data) v = rng.uniform(-bound, bound);
    return t;
}

} // namespace

ModelWeights ModelWeights::init(const HourglassConfig& cfg, Rng& rng) {
    cfg.validate();
    ModelWeights w;
    w.conv_w = uniform_fan_in({cfg.conv_channels, cfg.in_channels, cfg.kernel},
                              cfg.in_channels * cfg.kernel, rng);
    w.conv_b = Tensor::zeros({cfg.conv_channels});
    w.bn1_gamma = Tensor::full({cfg.conv_channels}, 1.0);
    w.bn1_beta = Tensor::zeros({cfg.conv_channels});
    w.bn1_mean = Tensor::zeros({cfg.conv_channels});
    w.bn1_var = Tensor::full({cfg.conv_channels}, 1.0);
    w.bn2_gamma = Tensor::full({cfg.conv_channels}, 1.0);
    w.bn2_beta = Tensor::zeros({cfg.conv_channels});
    w.bn2_mean = Tensor::zeros({cfg.conv_channels});
    w.bn2_var = Tensor::full({cfg.conv_channels}, 1.0);
    w.fc1_w = uniform_fan_in({cfg.fc1, cfg.flatten_size()}, cfg.flatten_size(), rng);
    w.fc1_b = Tensor::zeros({cfg.fc1});
    w.fc2_w = uniform_fan_in({cfg.fc2, cfg.fc1}, cfg.fc1, rng);
    w.fc2_b = Tensor::zeros({cfg.fc2});
    w.tconv_w = uniform_fan_in({cfg.conv_channels, cfg.out_channels, cfg.kernel},
                               cfg.conv_channels * cfg.kernel, rng);
    w.tconv_b = Tensor::zeros({cfg.out_channels});
    return w;
}

std::vector<Tensor*> ModelWeights::params() {
    return {&conv_w, &conv_b, &bn1_gamma, &bn1_beta, &bn2_gamma, &bn2_beta,
            &fc1_w,  &fc1_b,  &fc2_w,     &fc2_b,    &tconv_w,   &tconv_b};
}

std::vector<const Tensor*> ModelWeights::params() const {
    return {&conv_w, &conv_b, &bn1_gamma, &bn1_beta, &bn2_gamma, &bn2_beta,
            &fc1_w,  &fc1_b,  &fc2_w,     &fc2_b,    &tconv_w,   &tconv_b};
}

std::vector<const Tensor*> ModelWeights::fields() const {
    return {&conv_w,    &conv_b,   &bn1_gamma, &bn1_beta, &bn1_mean, &bn1_var,
            &bn2_gamma, &bn2_beta, &bn2_mean,  &bn2_var,  &fc1_w,    &fc1_b,
            &fc2_w,     &fc2_b,    &tconv_w,   &tconv_b};
}

std::vector<Tensor*> ModelWeights::fields() {
    return {&conv_w,    &conv_b,   &bn1_gamma, &bn1_beta, &bn1_mean, &bn1_var,
            &bn2_gamma, &bn2_beta, &bn2_mean,  &bn2_var,  &fc1_w,    &fc1_b,
            &fc2_w,     &fc2_b,    &tconv_w,   &tconv_b};
}

void ModelWeights::validate_shapes(const HourglassConfig& cfg) const {
    conv_w.require_shape({cfg.conv_channels, cfg.in_channels, cfg.kernel}, "conv_w");
    conv_b.require_shape({cfg.conv_channels}, "conv_b");
    for (const Tensor* t : {&bn1_gamma, &bn1_beta, &bn1_mean, &bn1_var, &bn2_gamma, &bn2_beta,
                            &bn2_mean, &bn2_var}) {
        t->require_shape({cfg.conv_channels}, "bn field");
    }
    fc1_w.require_shape({cfg.fc1, cfg.fc2}, "fc1_w");
    fc1_b.require_shape({cfg.fc1}, "fc1_b");
    fc2_w.require_shape({cfg.fc2, cfg.fc1}, "fc2_w");
    fc2_b.require_shape({cfg.fc2}, "fc2_b");
    tconv_w.require_shape({cfg.conv_channels, cfg.out_channels, cfg.kernel}, "tconv_w");
    tconv_b.require_shape({cfg.out_channels}, "tconv_b");
    for (double v : bn1_var.data) {
        if (v < 0.0) throw FormatError("bn1 running variance is negative");
    }
    for (double v : bn2_var.data) {
        if (v < 0.0) throw FormatError("bn2 running variance is negative");
    }
}

namespace {

void update_running(Tensor& running, const Tensor& batch_stat) {
    for (size_t i = 0; i < running.data.size(); ++i) {
        running.data[i] = (1.0 - kBatchNormMomentum) * running.data[i] +
                          kBatchNormMomentum * batch_stat.data[i];
    }
}

Tensor reshape(const Tensor& t, std::vector<int> shape) {
    Tensor out = t;
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    if (n != t.numel()) throw ShapeError("reshape: element count mismatch");
    out.shape = std::move(shape);
    return out;
}

} // namespace

Tensor hourglass_forward(const HourglassConfig& cfg, const ModelWeights& w, const Tensor& x,
                         Mode mode, ForwardCache* cache) {
    cfg.validate();
    if (x.shape.size() != 3 || x.shape[1] != cfg.in_channels || x.shape[2] != cfg.time_len) {
        throw ShapeError("hourglass input must be (B," + std::to_string(cfg.in_channels) + "," +
                         std::to_string(cfg.time_len) + "), got " + Tensor::shape_str(x.shape));
    }
    const int batch = x.shape[0];
    ForwardCache local;
    ForwardCache& c = cache ? *cache : local;
    c.x = x;

    kops::conv1d_forward(x, w.conv_w, w.conv_b, cfg.stride, c.conv_out);

    if (mode == Mode::Train) {
        kops::batchnorm_forward_train(c.conv_out, w.bn1_gamma, w.bn1_beta, kBatchNormEps,
                                      c.bn1_out, c.bn1_mean, c.bn1_var);
    } else {
        kops::batchnorm_forward_infer(c.conv_out, w.bn1_gamma, w.bn1_beta, w.bn1_mean, w.bn1_var,
                                      kBatchNormEps, c.bn1_out);
    }

    kops::relu_forward(c.bn1_out, c.relu1_out);

    const Tensor* encoded = &c.relu1_out;
    if (cfg.second_batchnorm) {
        if (mode == Mode::Train) {
            kops::batchnorm_forward_train(c.relu1_out, w.bn2_gamma, w.bn2_beta, kBatchNormEps,
                                          c.bn2_out, c.bn2_mean, c.bn2_var);
        } else {
            kops::batchnorm_forward_infer(c.relu1_out, w.bn2_gamma, w.bn2_beta, w.bn2_mean,
                                          w.bn2_var, kBatchNormEps, c.bn2_out);
        }
        encoded = &c.bn2_out;
    }

    const Tensor flat = reshape(*encoded, {batch, cfg.flatten_size()});
    kops::dense_forward(flat, w.fc1_w, w.fc1_b, c.fc1_out);
    kops::relu_forward(c.fc1_out, c.relu2_out);
    kops::dense_forward(c.relu2_out, w.fc2_w, w.fc2_b, c.fc2_out);
    kops::relu_forward(c.fc2_out, c.relu3_out);

    const Tensor unflat = reshape(c.relu3_out, {batch, cfg.conv_channels, cfg.conv_out_len()});
    kops::tconv1d_forward(unflat, w.tconv_w, w.tconv_b, cfg.stride, c.tconv_out);
    kops::sigmoid_forward(c.tconv_out, c.sigmoid_out);
    return c.sigmoid_out;
}

void update_running_stats(const HourglassConfig& cfg, ModelWeights& w, const ForwardCache& cache) {
    update_running(w.bn1_mean, cache.bn1_mean);
    update_running(w.bn1_var, cache.bn1_var);
    if (cfg.second_batchnorm) {
        update_running(w.bn2_mean, cache.bn2_mean);
        update_running(w.bn2_var, cache.bn2_var);
    }
}

std::vector<Tensor> hourglass_backward(const HourglassConfig& cfg, const ModelWeights& w,
                                       const ForwardCache& c, const Tensor& gy, Tensor* gx) {
    const int batch = c.x.shape[0];

    Tensor g_tconv_out;
    kops::sigmoid_backward(c.sigmoid_out, gy, g_tconv_out);

    const Tensor unflat = reshape(c.relu3_out, {batch, cfg.conv_channels, cfg.conv_out_len()});
    Tensor g_unflat, g_tconv_w, g_tconv_b;
    kops::tconv1d_backward(unflat, w.tconv_w, cfg.stride, g_tconv_out, g_unflat, g_tconv_w,
                           g_tconv_b);

    Tensor g_relu3 = reshape(g_unflat, {batch, cfg.fc2});
    Tensor g_fc2_out;
    kops::relu_backward(c.fc2_out, g_relu3, g_fc2_out);
    Tensor g_relu2, g_fc2_w, g_fc2_b;
    kops::dense_backward(c.relu2_out, w.fc2_w, g_fc2_out, g_relu2, g_fc2_w, g_fc2_b);

    Tensor g_fc1_out;
    kops::relu_backward(c.fc1_out, g_relu2, g_fc1_out);
    const Tensor* enc =
        cfg.second_batchnorm ? &c.bn2_out : &c.relu1_out;
    const Tensor flat = reshape(*enc, {batch, cfg.flatten_size()});
    Tensor g_flat, g_fc1_w, g_fc1_b;
    kops::dense_backward(flat, w.fc1_w, g_fc1_out, g_flat, g_fc1_w, g_fc1_b);

    Tensor g_enc = reshape(g_flat, {batch, cfg.conv_channels, cfg.conv_out_len()});

    Tensor g_relu1, g_bn2_gamma, g_bn2_beta;
    if (cfg.second_batchnorm) {
        kops::batchnorm_backward(c.relu1_out, w.bn2_gamma, c.bn2_mean, c.bn2_var, kBatchNormEps,
                                 g_enc, g_relu1, g_bn2_gamma, g_bn2_beta);
    } else {
        g_relu1 = g_enc;
        g_bn2_gamma = Tensor::zeros({cfg.conv_channels});
        g_bn2_beta = Tensor::zeros({cfg.conv_channels});
    }

    Tensor g_bn1_out;
    kops::relu_backward(c.bn1_out, g_relu1, g_bn1_out);
    Tensor g_conv_out, g_bn1_gamma, g_bn1_beta;
    kops::batchnorm_backward(c.conv_out, w.bn1_gamma, c.bn1_mean, c.bn1_var, kBatchNormEps,
                             g_bn1_out, g_conv_out, g_bn1_gamma, g_bn1_beta);

    Tensor g_x, g_conv_w, g_conv_b;
    kops::conv1d_backward(c.x, w.conv_w, cfg.stride, g_conv_out, g_x, g_conv_w, g_conv_b);
    if (gx) *gx = g_x;

    std::vector<Tensor> grads;
    grads.reserve(12);
    grads.push_back(std::move(g_conv_w));
    grads.push_back(std::move(g_conv_b));
    grads.push_back(std::move(g_bn1_gamma));
    grads.push_back(std::move(g_bn1_beta));
    grads.push_back(std::move(g_bn2_gamma));
    grads.push_back(std::move(g_bn2_beta));
    grads.push_back(std::move(g_fc1_w));
    grads.push_back(std::move(g_fc1_b));
    grads.push_back(std::move(g_fc2_w));
    grads.push_back(std::move(g_fc2_b));
    grads.push_back(std::move(g_tconv_w));
    grads.push_back(std::move(g_tconv_b));
    return grads;
}

AdamState AdamState::for_weights(const ModelWeights& w, double lr) {
    AdamState s;
    s.lr = lr;
    for (const Tensor* p : w.params()) {
        s.m.push_back(Tensor::zeros(p->shape));
        s.v.push_back(Tensor::zeros(p->shape));
    }
    return s;
}

void adam_update(AdamState& adam, std::vector<Tensor*> params, const std::vector<Tensor>& grads) {
    if (params.size() != grads.size() || params.size() != adam.m.size()) {
        throw ShapeError("adam: parameter/gradient count mismatch");
    }
    adam.step += 1;
    const double bc1 = 1.0 - std::pow(adam.beta1, static_cast<double>(adam.step));
    const double bc2 = 1.0 - std::pow(adam.beta2, static_cast<double>(adam.step));
    for (size_t p = 0; p < params.size(); ++p) {
        Tensor& param = *params[p];
        const Tensor& g = grads[p];
        Tensor& m = adam.m[p];
        Tensor& v = adam.v[p];
        for (size_t i = 0; i < param.data.size(); ++i) {
            m.data[i] = adam.beta1 * m.data[i] + (1.0 - adam.beta1) * g.data[i];
            v.data[i] = adam.beta2 * v.data[i] + (1.0 - adam.beta2) * g.data[i] * g.data[i];
            const double m_hat = m.data[i] / bc1;
            const double v_hat = v.data[i] / bc2;
            param.data[i] -= adam.lr * m_hat / (std::sqrt(v_hat) + adam.eps);
        }
    }
}

double mse_loss(const Tensor& pred, const Tensor& target) {
    if (!pred.same_shape(target)) throw ShapeError("mse: prediction/target shape mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < pred.data.size(); ++i) {
        const double d = pred.data[i] - target.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.numel());
}

double train_step(const HourglassConfig& cfg, ModelWeights& w, AdamState& adam,
                  const Tensor& batch_x, const Tensor& batch_y) {
    ForwardCache cache;
    const Tensor pred = hourglass_forward(cfg, w, batch_x, Mode::Train, &cache);
    update_running_stats(cfg, w, cache);
    const double loss = mse_loss(pred, batch_y);
    if (!std::isfinite(loss)) {
        throw DivergenceError("training loss is not finite");
    }

    Tensor gy = Tensor::zeros(pred.shape);
    const double scale = 2.0 / static_cast<double>(pred.numel());
    for (size_t i = 0; i < gy.data.size(); ++i) {
        gy.data[i] = scale * (pred.data[i] - batch_y.data[i]);
    }
    const std::vector<Tensor> grads = hourglass_backward(cfg, w, cache, gy);
    adam_update(adam, w.params(), grads);
    return loss;
}

namespace {

void write_u32_le(std::ostream& os, uint32_t v) {
    unsigned char buf[4] = {static_cast<unsigned char>(v & 0xff),
                            static_cast<unsigned char>((v >> 8) & 0xff),
                            static_cast<unsigned char>((v >> 16) & 0xff),
                            static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(buf), 4);
}

uint32_t read_u32_le(std::istream& is) {
    unsigned char buf[4];
    is.read(reinterpret_cast<char*>(buf), 4);
    if (!is) throw FormatError("weights file truncated in header");
    return static_cast<uint32_t>(buf[0]) | (static_cast<uint32_t>(buf[1]) << 8) |
           (static_cast<uint32_t>(buf[2]) << 16) | (static_cast<uint32_t>(buf[3]) << 24);
}

void write_f32_le(std::ostream& os, const Tensor& t) {
    std::vector<unsigned char> buf(t.data.size() * 4);
    for (size_t i = 0; i < t.data.size(); ++i) {
        const float f = static_cast<float>(t.data[i]);
        uint32_t bits;
        std::memcpy(&bits, &f, 4);
        buf[4 * i + 0] = static_cast<unsigned char>(bits & 0xff);
        buf[4 * i + 1] = static_cast<unsigned char>((bits >> 8) & 0xff);
        buf[4 * i + 2] = static_cast<unsigned char>((bits >> 16) & 0xff);
        buf[4 * i + 3] = static_cast<unsigned char>((bits >> 24) & 0xff);
    }
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

void read_f32_le(std::istream& is, Tensor& t) {
    std::vector<unsigned char> buf(t.data.size() * 4);
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!is) throw FormatError("weights file truncated in parameter data");
    for (size_t i = 0; i < t.data.size(); ++i) {
        const uint32_t bits = static_cast<uint32_t>(buf[4 * i + 0]) |
                              (static_cast<uint32_t>(buf[4 * i + 1]) << 8) |
                              (static_cast<uint32_t>(buf[4 * i + 2]) << 16) |
                              (static_cast<uint32_t>(buf[4 * i + 3]) << 24);
        float f;
        std::memcpy(&f, &bits, 4);
        t.data[i] = static_cast<double>(f);
    }
}

} // namespace

void save_weights(const std::filesystem::path& path, const nlohmann::json& meta,
                  const HourglassConfig& cfg, const ModelWeights& w) {
    cfg.validate();
    w.validate_shapes(cfg);
    nlohmann::json full = meta;
    full["config"] = cfg.to_json();

    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    os.write(kWeightsMagic, sizeof(kWeightsMagic));
    const std::string meta_str = full.dump();
    write_u32_le(os, static_cast<uint32_t>(meta_str.size()));
    os.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));
    for (const Tensor* t : w.fields()) write_f32_le(os, *t);
    if (!os) throw IoError("write failed: " + path.string());
}

LoadedModel load_weights(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path.string());
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kWeightsMagic, 8) != 0) {
        throw FormatError("bad weights magic in " + path.string());
    }
    const uint32_t meta_len = read_u32_le(is);
    std::string meta_str(meta_len, '\0');
    is.read(meta_str.data(), meta_len);
    if (!is) throw FormatError("weights file truncated in metadata");

    LoadedModel out;
    try {
        out.meta = nlohmann::json::parse(meta_str);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("weights metadata is not valid JSON: ") + e.what());
    }
    if (!out.meta.contains("config")) throw FormatError("weights metadata lacks config");
    out.config = HourglassConfig::from_json(out.meta["config"]);

    Rng dummy(0);
    out.weights = ModelWeights::init(out.config, dummy);

    // The payload carries no per-tensor headers, so its total size must match
    // the config exactly.
    size_t expected = 0;
    for (const Tensor* t : out.weights.fields()) expected += t->numel() * 4;
    const auto payload_start = is.tellg();
    is.seekg(0, std::ios::end);
    const auto file_end = is.tellg();
    is.seekg(payload_start);
    const size_t actual = static_cast<size_t>(file_end - payload_start);
    if (actual != expected) {
        throw ShapeError("weights payload is " + std::to_string(actual) + " bytes, config needs " +
                         std::to_string(expected));
    }

    for (Tensor* t : out.weights.fields()) read_f32_le(is, *t);
    out.weights.validate_shapes(out.config);
    return out;
}

} // namespace jess::neural
