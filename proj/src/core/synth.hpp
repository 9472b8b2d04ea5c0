#pragma once

#include <array>
#include <cstdint>

#include "core/dataset.hpp"

namespace efn::data {

// Seeded synthetic-EEG generation. Every epoch is an alpha sinusoid at a
// subject-specific peak frequency, amplitude calibrated so that the
// band-passed power hits the per-condition target times a subject
// multiplier, plus 1/f and white noise.
struct SyntheticConfig {
    int n_source_subjects = 100;
    int n_target_subjects = 20;
    int epochs_per_condition = 26;
    double fs = 1000.0;
    // alpha-power targets, indexed by Condition; defaults follow the
    // clean < transformer < mmse < noisy ordering
    std::array<double, 4> condition_power = {4478.8, 4962.6, 4586.9, 4564.6};
    double subject_sigma = 0.1;      // lognormal sd of the per-subject multiplier
    double alpha_freq_lo = 9.0;      // per-subject peak frequency range
    double alpha_freq_hi = 12.0;
    double pink_level = 0.0;         // 1/f noise amplitude
    double white_level = 0.0;        // white noise sd
    double noise_sigma = 0.0;        // lognormal sd of the per-subject noise multiplier
    uint64_t master_seed = 1;

    void validate() const;
};

struct SyntheticData {
    TaskSequence source;                  // subjects 1..n_source
    std::vector<SubjectDataset> target;   // subjects n_source+1 ..
};

SyntheticData generate_synthetic(const SyntheticConfig& cfg);

// single epoch, fully determined by (cfg, subject_id, condition, epoch index)
dsp::RawEpoch generate_epoch(const SyntheticConfig& cfg, int subject_id,
                             dsp::Condition condition, int epoch_index);

}  // namespace efn::data
