#include "jess/dsp.hpp"

#include "jess/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace jess::dsp {

void validate(const SampleBuffer& buf, size_t min_len) {
    if (buf.samples.size() < min_len) {
        throw InputError("sample buffer too short: " + std::to_string(buf.samples.size()) +
                         " < " + std::to_string(min_len));
    }
    if (!(buf.rate_hz > 0.0)) {
        throw InputError("sample rate must be positive");
    }
    for (double v : buf.samples) {
        if (!std::isfinite(v)) {
            throw InputError("sample buffer contains a non-finite value");
        }
    }
}

void validate(const MultiChannelBuffer& buf, size_t min_len) {
    if (buf.channels.empty()) {
        throw InputError("multi-channel buffer has no channels");
    }
    size_t len = buf.channels[0].size();
    double rate = buf.channels[0].rate_hz;
    for (const auto& ch : buf.channels) {
        validate(ch, min_len);
        if (ch.size() != len) {
            throw LengthMismatchError("channel lengths differ");
        }
        if (ch.rate_hz != rate) {
            throw InputError("channel rates differ");
        }
    }
}

void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
    const size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0) {
        throw InputError("fft size must be a power of two");
    }
    // bit-reversal permutation
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * std::numbers::pi / static_cast<double>(len) *
                           (inverse ? 1.0 : -1.0);
        const std::complex<double> wstep(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = a[i + k];
                std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wstep;
            }
        }
    }
    if (inverse) {
        const double scale = 1.0 / static_cast<double>(n);
        for (auto& x : a) x *= scale;
    }
}

static size_t next_pow2(size_t n) {
    size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

SampleBuffer hilbert_envelope(const SampleBuffer& signal) {
    validate(signal, 2);
    const size_t len = signal.size();
    const size_t n = next_pow2(len);

    std::vector<std::complex<double>> spec(n);
    for (size_t i = 0; i < len; ++i) spec[i] = signal.samples[i];
    fft_radix2(spec, false);

    // Analytic-signal spectrum: keep DC and Nyquist, double the positive
    // frequencies, zero the negative ones.
    for (size_t i = 1; i < n / 2; ++i) spec[i] *= 2.0;
    for (size_t i = n / 2 + 1; i < n; ++i) spec[i] = 0.0;
    fft_radix2(spec, true);

    SampleBuffer out;
    out.rate_hz = signal.rate_hz;
    out.samples.resize(len);
    for (size_t i = 0; i < len; ++i) out.samples[i] = std::abs(spec[i]);
    return out;
}

SampleBuffer downsample_to(const SampleBuffer& signal, double target_hz) {
    validate(signal);
    if (!(target_hz > 0.0) || signal.rate_hz < target_hz) {
        throw ConfigError("downsample target rate must be positive and <= input rate");
    }
    const double ratio = signal.rate_hz / target_hz;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-6 * ratio || rounded < 1.0) {
        throw ConfigError("input rate is not an integer multiple of the target rate");
    }
    const size_t block = static_cast<size_t>(rounded);
    const size_t out_len = signal.size() / block;

    SampleBuffer out;
    out.rate_hz = target_hz;
    out.samples.resize(out_len);
    for (size_t i = 0; i < out_len; ++i) {
        double acc = 0.0;
        const size_t base = i * block;
        for (size_t k = 0; k < block; ++k) acc += signal.samples[base + k];
        out.samples[i] = acc / static_cast<double>(block);
    }
    return out;
}

namespace {

struct Biquad {
    double b0, b1, b2, a1, a2;
};

// Bilinear-transform high-pass section for a Butterworth pole pair with
// quality factor q.
Biquad highpass_section(double cutoff_hz, double rate_hz, double q) {
    const double k = std::tan(std::numbers::pi * cutoff_hz / rate_hz);
    const double norm = 1.0 / (1.0 + k / q + k * k);
    Biquad s;
    s.b0 = norm;
    s.b1 = -2.0 * norm;
    s.b2 = norm;
    s.a1 = 2.0 * (k * k - 1.0) * norm;
    s.a2 = (1.0 - k / q + k * k) * norm;
    return s;
}

} // namespace

SampleBuffer butterworth_highpass(const SampleBuffer& signal, double cutoff_hz) {
    validate(signal);
    if (!(cutoff_hz > 0.0) || cutoff_hz >= signal.rate_hz / 2.0) {
        throw ConfigError("high-pass cutoff must lie in (0, rate/2)");
    }
    // Order-4 Butterworth: two sections with Q = 1/(2 cos(pi/8)), 1/(2 cos(3pi/8)).
    const Biquad sections[2] = {
        highpass_section(cutoff_hz, signal.rate_hz, 1.0 / (2.0 * std::cos(std::numbers::pi / 8.0))),
        highpass_section(cutoff_hz, signal.rate_hz, 1.0 / (2.0 * std::cos(3.0 * std::numbers::pi / 8.0))),
    };

    SampleBuffer out;
    out.rate_hz = signal.rate_hz;
    out.samples = signal.samples;
    for (const Biquad& s : sections) {
        double z1 = 0.0, z2 = 0.0; // transposed direct form II
        for (double& v : out.samples) {
            const double x = v;
            const double y = s.b0 * x + z1;
            z1 = s.b1 * x - s.a1 * y + z2;
            z2 = s.b2 * x - s.a2 * y;
            v = y;
        }
    }
    return out;
}

SampleBuffer detrend(const SampleBuffer& signal) {
    validate(signal, 2);
    const size_t n = signal.size();
    // Least-squares fit of a + b*i over i = 0..n-1.
    const double nd = static_cast<double>(n);
    double sum_y = 0.0, sum_iy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        sum_y += signal.samples[i];
        sum_iy += static_cast<double>(i) * signal.samples[i];
    }
    const double sum_i = nd * (nd - 1.0) / 2.0;
    const double sum_ii = (nd - 1.0) * nd * (2.0 * nd - 1.0) / 6.0;
    const double denom = nd * sum_ii - sum_i * sum_i;
    const double slope = (nd * sum_iy - sum_i * sum_y) / denom;
    const double intercept = (sum_y - slope * sum_i) / nd;

    SampleBuffer out;
    out.rate_hz = signal.rate_hz;
    out.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
        out.samples[i] = signal.samples[i] - (intercept + slope * static_cast<double>(i));
    }
    return out;
}

SampleBuffer buffer_normalize(const SampleBuffer& buffer) {
    validate(buffer);
    auto [mn_it, mx_it] = std::minmax_element(buffer.samples.begin(), buffer.samples.end());
    const double mn = *mn_it, mx = *mx_it;
    SampleBuffer out;
    out.rate_hz = buffer.rate_hz;
    out.samples.resize(buffer.size());
    if (mx == mn) {
        std::fill(out.samples.begin(), out.samples.end(), 0.5);
    } else {
        const double inv = 1.0 / (mx - mn);
        for (size_t i = 0; i < buffer.size(); ++i) {
            out.samples[i] = (buffer.samples[i] - mn) * inv;
        }
    }
    return out;
}

MultiChannelBuffer buffer_normalize(const MultiChannelBuffer& buffer) {
    validate(buffer);
    MultiChannelBuffer out;
    out.channels.reserve(buffer.channel_count());
    for (const auto& ch : buffer.channels) out.channels.push_back(buffer_normalize(ch));
    return out;
}

double amplitude(const SampleBuffer& buffer) {
    validate(buffer);
    double acc = 0.0;
    for (double v : buffer.samples) acc += v * v;
    return std::sqrt(acc / static_cast<double>(buffer.size()));
}

} // namespace jess::dsp
