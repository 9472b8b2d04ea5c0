#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "core/common.hpp"
#include "core/dwt.hpp"

namespace efn::dsp {

enum class Condition : uint8_t { Clean = 0, Noisy = 1, Mmse = 2, Transformer = 3 };

const char* condition_name(Condition c);

inline constexpr int kNumChannels = 16;
inline constexpr double kEpochSeconds = 2.691;
inline constexpr std::array<const char*, kNumChannels> kChannelNames = {
    "Fz", "FCz", "FC1", "FC2", "Cz", "C1", "C2", "CPz",
    "CP1", "CP2", "Pz", "P1", "P2", "POz", "PO3", "PO4"};

// One stimulus-locked multichannel EEG segment. Data is channels x samples,
// row-major.
struct RawEpoch {
    int subject_id = 0;
    Condition condition = Condition::Clean;
    int n_channels = kNumChannels;
    int n_samples = 0;
    double fs = 0.0;
    std::vector<float> data;

    float* channel(int c) { return data.data() + static_cast<size_t>(c) * n_samples; }
    const float* channel(int c) const {
        return data.data() + static_cast<size_t>(c) * n_samples;
    }

    static int samples_for(double fs) {
        return static_cast<int>(std::lround(fs * kEpochSeconds));
    }
};

// Band-pass requirements; the realized design is a cascade of biquads.
struct FilterSpec {
    int order = 5;                 // analog prototype order
    double pass_lo_hz = 8.0;
    double pass_hi_hz = 13.0;
    double stop_lo_hz = 6.0;
    double stop_hi_hz = 16.0;
    double stop_atten_db = 40.0;

    void validate(double fs) const;
};

// One second-order section: (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)
struct Biquad {
    double b0, b1, b2, a1, a2;
};

using Sos = std::vector<Biquad>;

// Chebyshev type II band-pass via analog prototype, band transform and the
// bilinear transform with prewarped edges. Attenuation reaches at least
// spec.stop_atten_db at and beyond the stop edges.
Sos design_cheby2_bandpass(const FilterSpec& spec, double fs);

// |H(e^{j 2 pi f / fs})| of the cascade
double sos_magnitude(const Sos& sos, double freq_hz, double fs);

// zero-phase forward-backward filtering of every channel; shape preserved
RawEpoch filter_epoch(const Sos& sos, const RawEpoch& epoch);

// single-channel version used by tests and calibration
std::vector<double> filtfilt(const Sos& sos, const std::vector<double>& x);

// keep every factor-th sample starting at index 0
RawEpoch downsample(const RawEpoch& epoch, int factor = 5);

// per-channel zero mean, unit population variance
RawEpoch znormalize(const RawEpoch& epoch);

// mean over channels of the mean squared sample amplitude
double alpha_power(const RawEpoch& epoch);

// The 2-D network input: per channel the concatenation
// [cA_4, cD_4, cD_3, cD_2, cD_1] of the db4 pyramid.
struct InputMap {
    int subject_id = 0;
    Condition condition = Condition::Clean;
    int n_channels = kNumChannels;
    int n_cols = 0;
    std::vector<float> data;               // n_channels x n_cols, row-major
    std::vector<int> subband_lengths;      // [cA_L, cD_L, ..., cD_1]

    float* row(int c) { return data.data() + static_cast<size_t>(c) * n_cols; }
    const float* row(int c) const { return data.data() + static_cast<size_t>(c) * n_cols; }
};

inline constexpr int kDwtLevels = 4;

// epoch must already be filtered, at 200 Hz and z-normalized
InputMap build_input_map(const RawEpoch& epoch);

// column count of an InputMap built from a signal of length n_samples
int input_map_columns(int n_samples);

}  // namespace efn::dsp
