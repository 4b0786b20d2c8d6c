#pragma once

#include <complex>
#include <vector>

namespace jess::dsp {

// Uniformly sampled signal. All processing is done in double precision.
struct SampleBuffer {
    std::vector<double> samples;
    double rate_hz = 0.0;

    size_t size() const { return samples.size(); }
    double duration_s() const {
        return rate_hz > 0.0 ? static_cast<double>(samples.size()) / rate_hz : 0.0;
    }
};

// Channels share length and rate.
struct MultiChannelBuffer {
    std::vector<SampleBuffer> channels;

    size_t channel_count() const { return channels.size(); }
    size_t length() const { return channels.empty() ? 0 : channels[0].size(); }
    double rate_hz() const { return channels.empty() ? 0.0 : channels[0].rate_hz; }
};

void validate(const SampleBuffer& buf, size_t min_len = 1);
void validate(const MultiChannelBuffer& buf, size_t min_len = 1);

// In-place iterative radix-2 FFT; size must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& a, bool inverse);

// Magnitude of the analytic signal, computed over the whole buffer
// (zero-padded to the next power of two, negative frequencies zeroed).
SampleBuffer hilbert_envelope(const SampleBuffer& signal);

// Non-overlapping block mean. rate_hz must be an integer multiple of
// target_hz (within 1 ppm); a trailing partial block is dropped.
SampleBuffer downsample_to(const SampleBuffer& signal, double target_hz);

// Causal order-4 Butterworth high-pass, run as two cascaded biquads.
SampleBuffer butterworth_highpass(const SampleBuffer& signal, double cutoff_hz);

// Subtracts the least-squares straight line.
SampleBuffer detrend(const SampleBuffer& signal);

// Per-channel min-max scaling into [0,1] using this buffer's own extremes.
// A flat channel maps to the constant 0.5.
MultiChannelBuffer buffer_normalize(const MultiChannelBuffer& buffer);
SampleBuffer buffer_normalize(const SampleBuffer& buffer);

// Root mean square.
double amplitude(const SampleBuffer& buffer);

} // namespace jess::dsp
