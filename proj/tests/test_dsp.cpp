#include "jess/dsp.hpp"

#include "jess/errors.hpp"
#include "jess/rng.hpp"

#include "doctest.h"

#include <cmath>
#include <complex>
#include <numbers>

using namespace jess;
using dsp::MultiChannelBuffer;
using dsp::SampleBuffer;

namespace {

constexpr double kPi = std::numbers::pi;

SampleBuffer sine(double amp, double freq_hz, double rate_hz, double dur_s, double phase = 0.0) {
    SampleBuffer b;
    b.rate_hz = rate_hz;
    const size_t n = static_cast<size_t>(std::llround(dur_s * rate_hz));
    b.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
        b.samples[i] = amp * std::sin(2.0 * kPi * freq_hz * static_cast<double>(i) / rate_hz + phase);
    }
    return b;
}

// Independent O(n^2) DFT analytic-signal oracle.
std::vector<double> dft_envelope_oracle(const std::vector<double>& x) {
    const size_t n = x.size();
    std::vector<std::complex<double>> spec(n);
    for (size_t k = 0; k < n; ++k) {
        std::complex<double> acc(0.0, 0.0);
        for (size_t i = 0; i < n; ++i) {
            const double ang = -2.0 * kPi * static_cast<double>(k * i) / static_cast<double>(n);
            acc += x[i] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        spec[k] = acc;
    }
    for (size_t k = 1; k < n / 2; ++k) spec[k] *= 2.0;
    for (size_t k = n / 2 + 1; k < n; ++k) spec[k] = 0.0;
    std::vector<double> env(n);
    for (size_t i = 0; i < n; ++i) {
        std::complex<double> acc(0.0, 0.0);
        for (size_t k = 0; k < n; ++k) {
            const double ang = 2.0 * kPi * static_cast<double>(k * i) / static_cast<double>(n);
            acc += spec[k] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        env[i] = std::abs(acc / static_cast<double>(n));
    }
    return env;
}

} // namespace

TEST_SUITE_BEGIN("dsp");

TEST_CASE("hilbert envelope of a unit sine is one away from the edges") {
    const SampleBuffer sig = sine(1.0, 440.0, 44100.0, 5.0);
    const SampleBuffer env = dsp::hilbert_envelope(sig);
    REQUIRE(env.size() == sig.size());
    CHECK(env.rate_hz == sig.rate_hz);
    const size_t lo = static_cast<size_t>(0.5 * 44100.0);
    const size_t hi = static_cast<size_t>(4.5 * 44100.0);
    for (size_t i = lo; i < hi; ++i) {
        REQUIRE(env.samples[i] == doctest::Approx(1.0).epsilon(0.01));
        REQUIRE(env.samples[i] >= 0.0);
    }
}

TEST_CASE("hilbert envelope of the zero signal is zero") {
    SampleBuffer sig;
    sig.rate_hz = 100.0;
    sig.samples.assign(256, 0.0);
    const SampleBuffer env = dsp::hilbert_envelope(sig);
    for (double v : env.samples) CHECK(v == 0.0);
}

TEST_CASE("hilbert envelope recovers amplitude modulation") {
    const double rate = 44100.0;
    SampleBuffer sig;
    sig.rate_hz = rate;
    const size_t n = static_cast<size_t>(5.0 * rate);
    sig.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / rate;
        sig.samples[i] = (1.0 + 0.5 * std::sin(2.0 * kPi * 2.0 * t)) *
                         std::sin(2.0 * kPi * 440.0 * t);
    }
    const SampleBuffer env = dsp::hilbert_envelope(sig);
    const size_t lo = static_cast<size_t>(1.0 * rate);
    const size_t hi = static_cast<size_t>(4.0 * rate);
    for (size_t i = lo; i < hi; i += 37) {
        const double t = static_cast<double>(i) / rate;
        const double expect = 1.0 + 0.5 * std::sin(2.0 * kPi * 2.0 * t);
        REQUIRE(std::abs(env.samples[i] - expect) <= 0.02 * expect);
    }
}

TEST_CASE("hilbert envelope matches a naive DFT oracle") {
    Rng rng(42);
    SampleBuffer sig;
    sig.rate_hz = 512.0;
    sig.samples.resize(512); // power of two, so no zero-padding mismatch
    for (double& v : sig.samples) v = rng.uniform(-1.0, 1.0);
    const SampleBuffer env = dsp::hilbert_envelope(sig);
    const std::vector<double> oracle = dft_envelope_oracle(sig.samples);
    for (size_t i = 0; i < sig.samples.size(); ++i) {
        REQUIRE(env.samples[i] == doctest::Approx(oracle[i]).epsilon(1e-9));
    }
}

TEST_CASE("hilbert envelope rejects invalid input") {
    SampleBuffer empty;
    empty.rate_hz = 10.0;
    CHECK_THROWS_AS(dsp::hilbert_envelope(empty), InputError);
    SampleBuffer nan;
    nan.rate_hz = 10.0;
    nan.samples = {0.0, std::nan("")};
    CHECK_THROWS_AS(dsp::hilbert_envelope(nan), InputError);
}

TEST_CASE("downsample keeps constants exactly") {
    SampleBuffer sig;
    sig.rate_hz = 44100.0;
    sig.samples.assign(static_cast<size_t>(5.0 * 44100.0), 0.7);
    const SampleBuffer out = dsp::downsample_to(sig, 10.0);
    REQUIRE(out.size() == 50);
    CHECK(out.rate_hz == 10.0);
    for (double v : out.samples) CHECK(v == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("five seconds at 44100 Hz downsample to exactly 50 points") {
    SampleBuffer sig = sine(0.3, 440.0, 44100.0, 5.0);
    CHECK(dsp::downsample_to(sig, 10.0).size() == 50);
}

TEST_CASE("downsampling an alternating signal averages to zero") {
    SampleBuffer sig;
    sig.rate_hz = 100.0;
    sig.samples.resize(1000);
    for (size_t i = 0; i < sig.samples.size(); ++i) sig.samples[i] = (i % 2 == 0) ? 1.0 : -1.0;
    const SampleBuffer out = dsp::downsample_to(sig, 10.0);
    REQUIRE(out.size() == 100);
    for (double v : out.samples) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("downsample rejects non-divisible rate ratios") {
    SampleBuffer sig = sine(1.0, 3.0, 44100.0, 1.0);
    CHECK_THROWS_AS(dsp::downsample_to(sig, 13.0), ConfigError);
    CHECK_THROWS_AS(dsp::downsample_to(sig, 0.0), ConfigError);
}

TEST_CASE("high-pass removes DC within two seconds") {
    SampleBuffer sig;
    sig.rate_hz = 10.0;
    sig.samples.assign(100, 5.0);
    const SampleBuffer out = dsp::butterworth_highpass(sig, 1.0);
    for (size_t i = 20; i < out.size(); ++i) {
        REQUIRE(std::abs(out.samples[i]) < 0.05);
    }
}

TEST_CASE("high-pass DC attenuation exceeds 40 dB in steady state") {
    SampleBuffer sig;
    sig.rate_hz = 10.0;
    sig.samples.assign(200, 1.0);
    const SampleBuffer out = dsp::butterworth_highpass(sig, 1.0);
    // > 40 dB means residual below 1% of the input amplitude
    for (size_t i = 20; i < out.size(); ++i) {
        REQUIRE(std::abs(out.samples[i]) < 0.01);
    }
}

TEST_CASE("high-pass of zero input is zero") {
    SampleBuffer sig;
    sig.rate_hz = 10.0;
    sig.samples.assign(64, 0.0);
    const SampleBuffer out = dsp::butterworth_highpass(sig, 1.0);
    for (double v : out.samples) CHECK(v == 0.0);
}

TEST_CASE("high-pass preserves a passband sine") {
    const SampleBuffer sig = sine(1.0, 4.0, 10.0, 50.0);
    const SampleBuffer out = dsp::butterworth_highpass(sig, 1.0);
    // amplitude estimate over the settled middle (whole periods)
    double acc = 0.0;
    const size_t lo = 100, hi = 400;
    for (size_t i = lo; i < hi; ++i) acc += out.samples[i] * out.samples[i];
    const double est_amp = std::sqrt(2.0 * acc / static_cast<double>(hi - lo));
    CHECK(est_amp == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("high-pass is linear") {
    Rng rng(7);
    SampleBuffer x, y;
    x.rate_hz = y.rate_hz = 10.0;
    x.samples.resize(200);
    y.samples.resize(200);
    for (size_t i = 0; i < 200; ++i) {
        x.samples[i] = rng.uniform(-1.0, 1.0);
        y.samples[i] = rng.uniform(-1.0, 1.0);
    }
    SampleBuffer mix;
    mix.rate_hz = 10.0;
    mix.samples.resize(200);
    const double a = 2.5, b = -1.3;
    for (size_t i = 0; i < 200; ++i) mix.samples[i] = a * x.samples[i] + b * y.samples[i];

    const SampleBuffer fx = dsp::butterworth_highpass(x, 1.0);
    const SampleBuffer fy = dsp::butterworth_highpass(y, 1.0);
    const SampleBuffer fmix = dsp::butterworth_highpass(mix, 1.0);
    for (size_t i = 0; i < 200; ++i) {
        const double expect = a * fx.samples[i] + b * fy.samples[i];
        REQUIRE(std::abs(fmix.samples[i] - expect) <= 1e-6 * (1.0 + std::abs(expect)));
    }
}

TEST_CASE("high-pass rejects cutoff at or above Nyquist") {
    SampleBuffer sig = sine(1.0, 1.0, 10.0, 5.0);
    CHECK_THROWS_AS(dsp::butterworth_highpass(sig, 5.0), ConfigError);
}

TEST_CASE("detrend removes a pure ramp") {
    SampleBuffer sig;
    sig.rate_hz = 10.0;
    const size_t n = 1000;
    sig.samples.resize(n);
    const double a = 3.0, b = -2.0;
    for (size_t i = 0; i < n; ++i) sig.samples[i] = a * static_cast<double>(i) + b;
    const SampleBuffer out = dsp::detrend(sig);
    const double bound = 1e-9 * std::abs(a) * static_cast<double>(n);
    for (double v : out.samples) REQUIRE(std::abs(v) < bound);
}

TEST_CASE("detrend matches an independent least-squares fit") {
    Rng rng(11);
    SampleBuffer sig;
    sig.rate_hz = 10.0;
    const size_t n = 500;
    sig.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i);
        sig.samples[i] = std::sin(2.0 * kPi * t / 50.0) + 0.02 * t - 1.0 + 0.1 * rng.uniform01();
    }
    // independent fit in long double via centered sums
    long double sy = 0.0L, sty = 0.0L;
    const long double tm = (static_cast<long double>(n) - 1.0L) / 2.0L;
    long double stt = 0.0L;
    for (size_t i = 0; i < n; ++i) {
        const long double tc = static_cast<long double>(i) - tm;
        sy += sig.samples[i];
        sty += tc * sig.samples[i];
        stt += tc * tc;
    }
    const long double slope = sty / stt;
    const long double mean = sy / static_cast<long double>(n);

    const SampleBuffer out = dsp::detrend(sig);
    for (size_t i = 0; i < n; ++i) {
        const long double tc = static_cast<long double>(i) - tm;
        const double expect = static_cast<double>(sig.samples[i] - (mean + slope * tc));
        REQUIRE(std::abs(out.samples[i] - expect) <= 1e-6 * (1.0 + std::abs(expect)));
    }
}

TEST_CASE("detrend of a constant buffer is zero") {
    SampleBuffer sig;
    sig.rate_hz = 10.0;
    sig.samples.assign(64, 4.2);
    const SampleBuffer out = dsp::detrend(sig);
    for (double v : out.samples) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("detrend is idempotent") {
    Rng rng(3);
    SampleBuffer sig;
    sig.rate_hz = 10.0;
    sig.samples.resize(300);
    for (double& v : sig.samples) v = rng.uniform(-5.0, 5.0);
    const SampleBuffer once = dsp::detrend(sig);
    const SampleBuffer twice = dsp::detrend(once);
    for (size_t i = 0; i < once.size(); ++i) {
        REQUIRE(std::abs(twice.samples[i] - once.samples[i]) <=
                1e-9 * (1.0 + std::abs(once.samples[i])));
    }
}

TEST_CASE("buffer_normalize scales to [0,1] by channel extremes") {
    MultiChannelBuffer buf;
    buf.channels.push_back({{0.0, 5.0, 10.0}, 10.0});
    const MultiChannelBuffer out = dsp::buffer_normalize(buf);
    CHECK(out.channels[0].samples[0] == doctest::Approx(0.0));
    CHECK(out.channels[0].samples[1] == doctest::Approx(0.5));
    CHECK(out.channels[0].samples[2] == doctest::Approx(1.0));
}

TEST_CASE("buffer_normalize maps a flat channel to 0.5") {
    MultiChannelBuffer buf;
    buf.channels.push_back({{3.0, 3.0, 3.0}, 10.0});
    const MultiChannelBuffer out = dsp::buffer_normalize(buf);
    for (double v : out.channels[0].samples) CHECK(v == 0.5);
    // and normalizing again keeps it at 0.5
    const MultiChannelBuffer again = dsp::buffer_normalize(out);
    for (double v : again.channels[0].samples) CHECK(v == 0.5);
}

TEST_CASE("buffer_normalize leaves an exact [0,1] channel unchanged") {
    MultiChannelBuffer buf;
    buf.channels.push_back({{0.0, 0.25, 1.0, 0.5}, 10.0});
    const MultiChannelBuffer out = dsp::buffer_normalize(buf);
    for (size_t i = 0; i < 4; ++i) {
        CHECK(out.channels[0].samples[i] == buf.channels[0].samples[i]);
    }
}

TEST_CASE("buffer_normalize output always lies in [0,1] and is idempotent") {
    Rng rng(19);
    for (int trial = 0; trial < 50; ++trial) {
        MultiChannelBuffer buf;
        const int chans = 1 + static_cast<int>(rng.uniform_index(4));
        for (int c = 0; c < chans; ++c) {
            SampleBuffer ch;
            ch.rate_hz = 10.0;
            ch.samples.resize(50);
            const double scale = rng.uniform(0.1, 100.0);
            const double off = rng.uniform(-50.0, 50.0);
            for (double& v : ch.samples) v = off + scale * rng.uniform01();
            buf.channels.push_back(std::move(ch));
        }
        const MultiChannelBuffer out = dsp::buffer_normalize(buf);
        for (const auto& ch : out.channels) {
            for (double v : ch.samples) {
                REQUIRE(v >= 0.0);
                REQUIRE(v <= 1.0);
            }
        }
        const MultiChannelBuffer out2 = dsp::buffer_normalize(out);
        for (size_t c = 0; c < out.channels.size(); ++c) {
            for (size_t i = 0; i < out.channels[c].size(); ++i) {
                REQUIRE(std::abs(out2.channels[c].samples[i] - out.channels[c].samples[i]) < 1e-12);
            }
        }
    }
}

TEST_CASE("amplitude is the root mean square") {
    SampleBuffer zero;
    zero.rate_hz = 10.0;
    zero.samples.assign(10, 0.0);
    CHECK(dsp::amplitude(zero) == 0.0);

    SampleBuffer ones;
    ones.rate_hz = 10.0;
    ones.samples.assign(10, 1.0);
    CHECK(dsp::amplitude(ones) == doctest::Approx(1.0));

    const SampleBuffer s = sine(1.0, 10.0, 1000.0, 1.0);
    CHECK(dsp::amplitude(s) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-3));
}

TEST_SUITE_END();
