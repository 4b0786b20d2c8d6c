#include "jess/neural/model.hpp"

#include "jess/errors.hpp"
#include "jess/neural/kernels.hpp"
#include "jess/rng.hpp"

#include "doctest.h"
#include "gradcheck.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace jess;
using namespace jess::neural;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

// Scalar probe loss: fixed random projection of the output tensor.
struct Projection {
    Tensor r;
    double operator()(const Tensor& y) const {
        double acc = 0.0;
        for (size_t i = 0; i < y.data.size(); ++i) acc += r.data[i] * y.data[i];
        return acc;
    }
};

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("jess_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

// Backends must agree bit for bit.
void check_backends_match(const Tensor& a, const Tensor& b) {
    REQUIRE(a.shape == b.shape);
    for (size_t i = 0; i < a.data.size(); ++i) REQUIRE(a.data[i] == b.data[i]);
}

} // namespace

TEST_SUITE_BEGIN("neural");

TEST_CASE("conv1d with length 50, kernel 5, stride 3 yields length 16") {
    Rng rng(1);
    const Tensor x = random_tensor({2, 3, 50}, rng);
    const Tensor w = random_tensor({8, 3, 5}, rng);
    const Tensor b = random_tensor({8}, rng);
    Tensor y;
    kops::conv1d_forward(x, w, b, 3, y);
    CHECK(y.shape == std::vector<int>{2, 8, 16});
}

TEST_CASE("conv1d with a single center tap passes a constant through") {
    Tensor x = Tensor::full({1, 1, 50}, 0.37);
    Tensor w = Tensor::zeros({1, 1, 5});
    w.at(0, 0, 2) = 1.0;
    const Tensor b = Tensor::zeros({1});
    Tensor y;
    kops::conv1d_forward(x, w, b, 3, y);
    REQUIRE(y.shape == std::vector<int>{1, 1, 16});
    for (double v : y.data) CHECK(v == doctest::Approx(0.37));
}

TEST_CASE("conv1d rejects mismatched shapes") {
    Rng rng(2);
    const Tensor x = random_tensor({1, 2, 50}, rng);
    const Tensor w = random_tensor({8, 3, 5}, rng); // wrong input channels
    const Tensor b = random_tensor({8}, rng);
    Tensor y;
    CHECK_THROWS_AS(kops::conv1d_forward(x, w, b, 3, y), ShapeError);
}

TEST_CASE("tconv1d maps length 16 back to 50") {
    Rng rng(3);
    const Tensor x = random_tensor({2, 8, 16}, rng);
    const Tensor w = random_tensor({8, 4, 5}, rng);
    const Tensor b = random_tensor({4}, rng);
    Tensor y;
    kops::tconv1d_forward(x, w, b, 3, y);
    CHECK(y.shape == std::vector<int>{2, 4, 50});
}

TEST_CASE("activation basics") {
    Tensor x = Tensor::zeros({1, 3});
    x.data = {0.0, -2.0, 2.0};
    Tensor s, r;
    kops::sigmoid_forward(x, s);
    kops::relu_forward(x, r);
    CHECK(s.data[0] == doctest::Approx(0.5));
    CHECK(r.data[1] == 0.0);
    CHECK(r.data[2] == 2.0);
}

TEST_CASE("conv1d gradients match finite differences") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(100 + seed);
        Tensor x = random_tensor({3, 2, 23}, rng);
        Tensor w = random_tensor({4, 2, 5}, rng);
        Tensor b = random_tensor({4}, rng);
        Tensor y;
        kops::conv1d_forward(x, w, b, 3, y);
        Projection proj{random_tensor(y.shape, rng)};

        Tensor gx, gw, gb;
        kops::conv1d_backward(x, w, 3, proj.r, gx, gw, gb);

        auto loss = [&] {
            Tensor out;
            kops::conv1d_forward(x, w, b, 3, out);
            return proj(out);
        };
        Rng pick(seed);
        for (Tensor* t : {&x, &w, &b}) {
            const Tensor& g = (t == &x) ? gx : (t == &w) ? gw : gb;
            const auto coords = gradcheck::pick_coords(*t, 25, pick);
            const double err =
                gradcheck::max_rel_error(*t, coords, gradcheck::gather(g, coords), loss);
            REQUIRE(err < 1e-3);
        }
    }
}

TEST_CASE("tconv1d gradients match finite differences") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(200 + seed);
        Tensor x = random_tensor({2, 3, 9}, rng);
        Tensor w = random_tensor({3, 2, 5}, rng);
        Tensor b = random_tensor({2}, rng);
        Tensor y;
        kops::tconv1d_forward(x, w, b, 3, y);
        Projection proj{random_tensor(y.shape, rng)};

        Tensor gx, gw, gb;
        kops::tconv1d_backward(x, w, 3, proj.r, gx, gw, gb);

        auto loss = [&] {
            Tensor out;
            kops::tconv1d_forward(x, w, b, 3, out);
            return proj(out);
        };
        Rng pick(seed);
        for (Tensor* t : {&x, &w, &b}) {
            const Tensor& g = (t == &x) ? gx : (t == &w) ? gw : gb;
            const auto coords = gradcheck::pick_coords(*t, 25, pick);
            const double err =
                gradcheck::max_rel_error(*t, coords, gradcheck::gather(g, coords), loss);
            REQUIRE(err < 1e-3);
        }
    }
}

TEST_CASE("dense gradients match finite differences") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(300 + seed);
        Tensor x = random_tensor({4, 7}, rng);
        Tensor w = random_tensor({5, 7}, rng);
        Tensor b = random_tensor({5}, rng);
        Tensor y;
        kops::dense_forward(x, w, b, y);
        Projection proj{random_tensor(y.shape, rng)};

        Tensor gx, gw, gb;
        kops::dense_backward(x, w, proj.r, gx, gw, gb);

        auto loss = [&] {
            Tensor out;
            kops::dense_forward(x, w, b, out);
            return proj(out);
        };
        Rng pick(seed);
        for (Tensor* t : {&x, &w, &b}) {
            const Tensor& g = (t == &x) ? gx : (t == &w) ? gw : gb;
            const auto coords = gradcheck::pick_coords(*t, 25, pick);
            const double err =
                gradcheck::max_rel_error(*t, coords, gradcheck::gather(g, coords), loss);
            REQUIRE(err < 1e-3);
        }
    }
}

TEST_CASE("batchnorm training mode normalizes per channel") {
    Rng rng(4);
    Tensor x = random_tensor({8, 3, 10}, rng);
    for (double& v : x.data) v = 3.0 + 2.0 * v; // mean ~3, var ~4/3 scaled
    const Tensor gamma = Tensor::full({3}, 1.0);
    const Tensor beta = Tensor::zeros({3});
    Tensor y, mean, var;
    kops::batchnorm_forward_train(x, gamma, beta, 1e-5, y, mean, var);

    for (int c = 0; c < 3; ++c) {
        double sum = 0.0, sq = 0.0;
        int count = 0;
        for (int n = 0; n < 8; ++n) {
            for (int t = 0; t < 10; ++t) {
                sum += y.at(n, c, t);
                ++count;
            }
        }
        const double mu = sum / count;
        for (int n = 0; n < 8; ++n) {
            for (int t = 0; t < 10; ++t) {
                sq += (y.at(n, c, t) - mu) * (y.at(n, c, t) - mu);
            }
        }
        CHECK(mu == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(sq / count == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("batchnorm inference with unit running stats is the identity") {
    Rng rng(5);
    const Tensor x = random_tensor({1, 2, 6}, rng);
    const Tensor gamma = Tensor::full({2}, 1.0);
    const Tensor beta = Tensor::zeros({2});
    const Tensor mean = Tensor::zeros({2});
    const Tensor var = Tensor::full({2}, 1.0);
    Tensor y;
    kops::batchnorm_forward_infer(x, gamma, beta, mean, var, 1e-5, y);
    for (size_t i = 0; i < x.data.size(); ++i) {
        CHECK(y.data[i] == doctest::Approx(x.data[i]).epsilon(1e-4));
    }
}

TEST_CASE("batchnorm training mode rejects batch of one") {
    Rng rng(6);
    const Tensor x = random_tensor({1, 2, 6}, rng);
    const Tensor gamma = Tensor::full({2}, 1.0);
    const Tensor beta = Tensor::zeros({2});
    Tensor y, mean, var;
    CHECK_THROWS_AS(kops::batchnorm_forward_train(x, gamma, beta, 1e-5, y, mean, var), InputError);
}

TEST_CASE("batchnorm gradients match finite differences") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(400 + seed);
        Tensor x = random_tensor({4, 3, 7}, rng);
        Tensor gamma = random_tensor({3}, rng, 0.5, 1.5);
        Tensor beta = random_tensor({3}, rng, -0.5, 0.5);
        Tensor y, mean, var;
        kops::batchnorm_forward_train(x, gamma, beta, 1e-5, y, mean, var);
        Projection proj{random_tensor(y.shape, rng)};

        Tensor gx, ggamma, gbeta;
        kops::batchnorm_backward(x, gamma, mean, var, 1e-5, proj.r, gx, ggamma, gbeta);

        auto loss = [&] {
            Tensor out, m, v;
            kops::batchnorm_forward_train(x, gamma, beta, 1e-5, out, m, v);
            return proj(out);
        };
        Rng pick(seed);
        for (Tensor* t : {&x, &gamma, &beta}) {
            const Tensor& g = (t == &x) ? gx : (t == &gamma) ? ggamma : gbeta;
            const auto coords = gradcheck::pick_coords(*t, 25, pick);
            const double err =
                gradcheck::max_rel_error(*t, coords, gradcheck::gather(g, coords), loss);
            REQUIRE(err < 1e-3);
        }
    }
}

TEST_CASE("hourglass forward produces (m,50) outputs strictly inside (0,1)") {
    struct RolePair {
        int n, m;
    };
    const RolePair pairs[] = {{1, 1}, {1, 2}, {2, 1}, {4, 1}, {1, 1}, {1, 2}, {1, 1}};
    Rng rng(7);
    for (const auto& p : pairs) {
        HourglassConfig cfg;
        cfg.in_channels = p.n;
        cfg.out_channels = p.m;
        CHECK(cfg.conv_out_len() == 16);
        CHECK(cfg.flatten_size() == 128);
        ModelWeights w = ModelWeights::init(cfg, rng);
        const Tensor x = random_tensor({1, p.n, 50}, rng, 0.0, 1.0);
        const Tensor y = hourglass_forward(cfg, w, x, Mode::Infer);
        REQUIRE(y.shape == std::vector<int>{1, p.m, 50});
        for (double v : y.data) {
            REQUIRE(v > 0.0);
            REQUIRE(v < 1.0);
        }
    }
}

TEST_CASE("hourglass inference is bit-deterministic") {
    Rng rng(8);
    HourglassConfig cfg;
    cfg.in_channels = 4;
    cfg.out_channels = 1;
    ModelWeights w = ModelWeights::init(cfg, rng);
    const Tensor x = random_tensor({1, 4, 50}, rng, 0.0, 1.0);
    const Tensor y1 = hourglass_forward(cfg, w, x, Mode::Infer);
    const Tensor y2 = hourglass_forward(cfg, w, x, Mode::Infer);
    check_backends_match(y1, y2);
}

TEST_CASE("serial and OpenMP backends agree bit for bit") {
    Rng rng(9);
    HourglassConfig cfg;
    cfg.in_channels = 2;
    cfg.out_channels = 2;
    ModelWeights w = ModelWeights::init(cfg, rng);
    const Tensor x = random_tensor({4, 2, 50}, rng, 0.0, 1.0);
    const Tensor target = random_tensor({4, 2, 50}, rng, 0.0, 1.0);

    const Backend saved = backend();

    set_backend(Backend::Serial);
    ForwardCache cache_ser;
    const Tensor y_ser = hourglass_forward(cfg, w, x, Mode::Train, &cache_ser);
    Tensor gy = Tensor::zeros(y_ser.shape);
    for (size_t i = 0; i < gy.data.size(); ++i) {
        gy.data[i] = 2.0 * (y_ser.data[i] - target.data[i]) / static_cast<double>(y_ser.numel());
    }
    const auto grads_ser = hourglass_backward(cfg, w, cache_ser, gy);

    set_backend(Backend::Parallel);
    ForwardCache cache_par;
    const Tensor y_par = hourglass_forward(cfg, w, x, Mode::Train, &cache_par);
    const auto grads_par = hourglass_backward(cfg, w, cache_par, gy);

    set_backend(saved);

    check_backends_match(y_ser, y_par);
    REQUIRE(grads_ser.size() == grads_par.size());
    for (size_t i = 0; i < grads_ser.size(); ++i) {
        check_backends_match(grads_ser[i], grads_par[i]);
    }
}

TEST_CASE("train_step with zero learning rate keeps weights and loss fixed") {
    Rng rng(10);
    HourglassConfig cfg;
    cfg.in_channels = 1;
    cfg.out_channels = 1;
    ModelWeights w = ModelWeights::init(cfg, rng);
    AdamState adam = AdamState::for_weights(w, 0.0);
    const Tensor x = random_tensor({4, 1, 50}, rng, 0.0, 1.0);
    const Tensor y = random_tensor({4, 1, 50}, rng, 0.0, 1.0);
    const ModelWeights before = w;
    const double l1 = train_step(cfg, w, adam, x, y);
    // running stats move, trainable parameters must not
    auto pb = before.params();
    auto pa = w.params();
    for (size_t p = 0; p < pa.size(); ++p) {
        for (size_t i = 0; i < pa[p]->data.size(); ++i) {
            REQUIRE(pa[p]->data[i] == pb[p]->data[i]);
        }
    }
    const double l2 = train_step(cfg, w, adam, x, y);
    CHECK(l1 == doctest::Approx(l2).epsilon(1e-12));
}

TEST_CASE("two hundred steps on one batch overfit it by 10x") {
    Rng rng(11);
    HourglassConfig cfg;
    cfg.in_channels = 1;
    cfg.out_channels = 1;
    ModelWeights w = ModelWeights::init(cfg, rng);
    AdamState adam = AdamState::for_weights(w, 1e-3);
    const Tensor x = random_tensor({8, 1, 50}, rng, 0.0, 1.0);
    Tensor y = random_tensor({8, 1, 50}, rng, 0.2, 0.8);
    const double first = train_step(cfg, w, adam, x, y);
    double last = first;
    for (int i = 0; i < 199; ++i) last = train_step(cfg, w, adam, x, y);
    CHECK(last <= first / 10.0);
}

TEST_CASE("end-to-end MSE gradient matches finite differences") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(500 + seed);
        HourglassConfig cfg;
        cfg.in_channels = 2;
        cfg.out_channels = 1;
        ModelWeights w = ModelWeights::init(cfg, rng);
        const Tensor x = random_tensor({3, 2, 50}, rng, 0.0, 1.0);
        const Tensor target = random_tensor({3, 1, 50}, rng, 0.0, 1.0);

        ForwardCache cache;
        const Tensor pred = hourglass_forward(cfg, w, x, Mode::Train, &cache);
        Tensor gy = Tensor::zeros(pred.shape);
        for (size_t i = 0; i < gy.data.size(); ++i) {
            gy.data[i] = 2.0 * (pred.data[i] - target.data[i]) / static_cast<double>(pred.numel());
        }
        const auto grads = hourglass_backward(cfg, w, cache, gy);

        auto loss = [&] {
            const Tensor out = hourglass_forward(cfg, w, x, Mode::Train);
            return mse_loss(out, target);
        };
        Rng pick(seed);
        auto params = w.params();
        for (size_t p = 0; p < params.size(); ++p) {
            const auto coords = gradcheck::pick_coords(*params[p], 10, pick);
            const double err = gradcheck::max_rel_error(
                *params[p], coords, gradcheck::gather(grads[p], coords), loss);
            REQUIRE(err < 1e-3);
        }
    }
}

TEST_CASE("weight files round-trip byte-identically") {
    TempDir tmp;
    Rng rng(12);
    HourglassConfig cfg;
    cfg.in_channels = 4;
    cfg.out_channels = 1;
    ModelWeights w = ModelWeights::init(cfg, rng);
    nlohmann::json meta = {{"role", "r4"}, {"seed", 12}};

    const auto p1 = tmp.path / "a.jessw";
    const auto p2 = tmp.path / "b.jessw";
    save_weights(p1, meta, cfg, w);
    LoadedModel m = load_weights(p1);
    CHECK(m.meta["role"] == "r4");
    save_weights(p2, m.meta, m.config, m.weights);

    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    REQUIRE(!b1.empty());
    CHECK(b1 == b2);
}

TEST_CASE("weight loader rejects corrupted files") {
    TempDir tmp;
    Rng rng(13);
    HourglassConfig cfg;
    cfg.in_channels = 2;
    cfg.out_channels = 2;
    ModelWeights w = ModelWeights::init(cfg, rng);
    const auto path = tmp.path / "m.jessw";
    save_weights(path, {{"role", "r6"}}, cfg, w);

    SUBCASE("bad magic") {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.write("BOGUS123", 8);
        f.close();
        CHECK_THROWS_AS(load_weights(path), FormatError);
    }
    SUBCASE("truncation") {
        const auto size = std::filesystem::file_size(path);
        std::filesystem::resize_file(path, size - 17);
        CHECK_THROWS_AS(load_weights(path), ShapeError);
    }
    SUBCASE("config/payload mismatch") {
        // declare 4 input channels but keep the 2-channel payload
        LoadedModel m = load_weights(path);
        std::ifstream in(path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        in.close();
        nlohmann::json meta = m.meta;
        meta["config"]["in_channels"] = 4;
        const std::string meta_str = meta.dump();
        std::ofstream out(path, std::ios::binary);
        out.write(bytes.data(), 8);
        const uint32_t len = static_cast<uint32_t>(meta_str.size());
        const unsigned char lenb[4] = {
            static_cast<unsigned char>(len & 0xff), static_cast<unsigned char>((len >> 8) & 0xff),
            static_cast<unsigned char>((len >> 16) & 0xff),
            static_cast<unsigned char>((len >> 24) & 0xff)};
        out.write(reinterpret_cast<const char*>(lenb), 4);
        out.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));
        // old payload (sized for 2 input channels)
        uint32_t old_len = static_cast<uint32_t>(bytes[8]) |
                           (static_cast<uint32_t>(static_cast<unsigned char>(bytes[9])) << 8) |
                           (static_cast<uint32_t>(static_cast<unsigned char>(bytes[10])) << 16) |
                           (static_cast<uint32_t>(static_cast<unsigned char>(bytes[11])) << 24);
        out.write(bytes.data() + 12 + old_len,
                  static_cast<std::streamsize>(bytes.size() - 12 - old_len));
        out.close();
        CHECK_THROWS_AS(load_weights(path), ShapeError);
    }
    SUBCASE("missing file") { CHECK_THROWS_AS(load_weights(tmp.path / "nope.jessw"), IoError); }
}

TEST_SUITE_END();
