#pragma once

#include <string>
#include <vector>

#include "core/common.hpp"

namespace efn::dsp {

// Orthonormal wavelet filter bank. dec_* are the analysis filters, rec_* the
// synthesis filters (dec filters are the time-reversed rec filters).
struct WaveletFilters {
    std::string name;
    std::vector<double> dec_lo, dec_hi, rec_lo, rec_hi;
    int length() const { return static_cast<int>(rec_lo.size()); }
};

WaveletFilters haar_wavelet();
WaveletFilters db4_wavelet();

// Multilevel pyramid, stored as [cA_L, cD_L, ..., cD_1] together with the
// per-level input lengths needed for reconstruction.
struct WaveletPyramid {
    std::vector<std::vector<double>> bands;
    std::vector<int> input_lengths;  // length of the signal fed into each level, top-down
    int levels = 0;
};

// Single-level analysis with zero-padding boundary handling. Output length
// follows floor((n + filter_len - 1) / 2); with this convention the transform
// is orthogonal, so coefficient energy equals signal energy exactly.
void dwt_step(const std::vector<double>& x, const WaveletFilters& w,
              std::vector<double>& approx, std::vector<double>& detail);

std::vector<double> idwt_step(const std::vector<double>& approx,
                              const std::vector<double>& detail,
                              const WaveletFilters& w, int out_len);

WaveletPyramid dwt_multilevel(const std::vector<double>& x, const WaveletFilters& w,
                              int levels);

std::vector<double> idwt_multilevel(const WaveletPyramid& p, const WaveletFilters& w);

// Per-level output length for a given input length, applied top-down.
int dwt_output_length(int input_length, int filter_length);

// Band lengths [cA_L, cD_L, ..., cD_1] for a signal of length n.
std::vector<int> pyramid_band_lengths(int n, int filter_length, int levels);

}  // namespace efn::dsp
