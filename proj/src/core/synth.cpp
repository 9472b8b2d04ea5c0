#include "core/synth.hpp"

#include <cmath>

#include "core/rng.hpp"

namespace efn::data {

void SyntheticConfig::validate() const {
    require(n_source_subjects >= 1 && n_target_subjects >= 0, "synth: bad subject counts");
    require(epochs_per_condition >= 1, "synth: epochs_per_condition must be >= 1");
    require(fs > 0.0, "synth: fs must be positive");
    for (double p : condition_power) require(p > 0.0, "synth: powers must be positive");
    require(alpha_freq_lo >= 8.0 && alpha_freq_hi <= 13.0 && alpha_freq_lo < alpha_freq_hi,
            "synth: alpha frequency range must sit inside 8-13 Hz");
    require(pink_level >= 0.0 && white_level >= 0.0, "synth: noise levels must be >= 0");
    require(noise_sigma >= 0.0, "synth: noise_sigma must be >= 0");
}

namespace {

// per-subject traits, derived from (master seed, subject id) only
struct SubjectTraits {
    double power_multiplier;
    double alpha_freq;
    double noise_multiplier;
};

SubjectTraits subject_traits(const SyntheticConfig& cfg, int subject_id) {
    Rng rng(Rng::derive(cfg.master_seed, static_cast<uint64_t>(subject_id), 0x50bbdd));
    SubjectTraits t;
    t.power_multiplier = std::exp(rng.normal(0.0, cfg.subject_sigma));
    t.alpha_freq = rng.uniform(cfg.alpha_freq_lo, cfg.alpha_freq_hi);
    t.noise_multiplier = std::exp(rng.normal(0.0, cfg.noise_sigma));
    return t;
}

// Kellet economy pink-noise filter, unit-ish variance before scaling
class PinkNoise {
public:
    double next(Rng& rng) {
        const double w = rng.normal();
        b0_ = 0.99765 * b0_ + w * 0.0990460;
        b1_ = 0.96300 * b1_ + w * 0.2965164;
        b2_ = 0.57000 * b2_ + w * 1.0526913;
        return (b0_ + b1_ + b2_ + w * 0.1848) * 0.25;
    }

private:
    double b0_ = 0.0, b1_ = 0.0, b2_ = 0.0;
};

}  // namespace

dsp::RawEpoch generate_epoch(const SyntheticConfig& cfg, int subject_id,
                             dsp::Condition condition, int epoch_index) {
    const SubjectTraits traits = subject_traits(cfg, subject_id);
    const double target_power =
        cfg.condition_power[static_cast<size_t>(condition)] * traits.power_multiplier;
    const double amplitude = std::sqrt(2.0 * target_power);

    dsp::RawEpoch ep;
    ep.subject_id = subject_id;
    ep.condition = condition;
    ep.fs = cfg.fs;
    ep.n_channels = dsp::kNumChannels;
    ep.n_samples = dsp::RawEpoch::samples_for(cfg.fs);
    ep.data.resize(static_cast<size_t>(ep.n_channels) * ep.n_samples);

    const uint64_t epoch_key =
        Rng::derive(cfg.master_seed, static_cast<uint64_t>(subject_id),
                    (static_cast<uint64_t>(condition) << 32) |
                        static_cast<uint64_t>(epoch_index));
    const double omega = 2.0 * M_PI * traits.alpha_freq / cfg.fs;
    const double pink = cfg.pink_level * traits.noise_multiplier;
    const double white = cfg.white_level * traits.noise_multiplier;

    for (int c = 0; c < ep.n_channels; ++c) {
        Rng rng(Rng::derive(epoch_key, static_cast<uint64_t>(c)));
        const double phase = rng.uniform(0.0, 2.0 * M_PI);
        PinkNoise pink_gen;
        float* dst = ep.channel(c);
        for (int i = 0; i < ep.n_samples; ++i) {
            double v = amplitude * std::sin(omega * i + phase);
            if (pink > 0.0) v += pink * pink_gen.next(rng);
            if (white > 0.0) v += white * rng.normal();
            dst[i] = static_cast<float>(v);
        }
    }
    return ep;
}

SyntheticData generate_synthetic(const SyntheticConfig& cfg) {
    cfg.validate();
    SyntheticData out;

    auto make_subject = [&](int subject_id) {
        SubjectDataset s;
        s.subject_id = subject_id;
        for (const auto cond : {dsp::Condition::Clean, dsp::Condition::Noisy,
                                dsp::Condition::Mmse, dsp::Condition::Transformer}) {
            for (int e = 0; e < cfg.epochs_per_condition; ++e) {
                EpochRecord rec;
                rec.subject_id = subject_id;
                rec.condition = cond;
                const auto lab = label_for(cond);
                rec.label = lab ? *lab : kNoLabel;
                rec.is_map = false;
                rec.raw = generate_epoch(cfg, subject_id, cond, e);
                s.records.push_back(std::move(rec));
            }
        }
        return s;
    };

    for (int i = 1; i <= cfg.n_source_subjects; ++i)
        out.source.push_back(make_subject(i));
    for (int i = 1; i <= cfg.n_target_subjects; ++i)
        out.target.push_back(make_subject(cfg.n_source_subjects + i));
    return out;
}

}  // namespace efn::data
