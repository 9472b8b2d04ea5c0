#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/dsp.hpp"
#include "core/nn.hpp"

namespace efn::model {

// stride-1, same-padding conv followed by ReLU and 1 x pool_w max pooling
struct ConvSpec {
    int out_channels;
    int kh, kw;
    int pool_w;
};

struct ModelConfig {
    int in_h = dsp::kNumChannels;
    int in_w = 566;
    std::vector<ConvSpec> conv = {{8, 3, 5, 2}, {16, 3, 5, 2}, {32, 3, 5, 2}, {32, 3, 5, 2}};
    int hidden = 64;

    // training metadata carried inside checkpoints
    uint64_t seed = 0;
    int epochs = 0;
    double lr = 1e-4;

    // input width before each pooling stage, then the final width
    std::vector<int> stage_widths() const;
    int feature_channels() const { return conv.back().out_channels; }
    int feature_width() const { return stage_widths().back(); }
    int feature_dim() const { return feature_channels() * in_h * feature_width(); }

    std::string to_text() const;
    static ModelConfig from_text(const std::string& text);

    void validate() const;
};

// parameter construction; names are prefixed enc./dec./cls.
tc::ParamSet init_encoder(const ModelConfig& cfg, uint64_t seed);
tc::ParamSet init_decoder(const ModelConfig& cfg, uint64_t seed);
tc::ParamSet init_classifier(const ModelConfig& cfg, uint64_t seed);

// forward passes; pass tape = nullptr for inference
tc::Tensor forward_encoder(tc::Tape* tape, const tc::Tensor& x, tc::ParamSet& enc,
                           const ModelConfig& cfg);
tc::Tensor forward_decoder(tc::Tape* tape, const tc::Tensor& features, tc::ParamSet& dec,
                           const ModelConfig& cfg);
tc::Tensor forward_classifier(tc::Tape* tape, const tc::Tensor& features,
                              tc::ParamSet& cls, const ModelConfig& cfg);

tc::Tensor input_tensor(const dsp::InputMap& map);

// probability of the HLE (noisy) class
double predict_prob(tc::ParamSet& enc, tc::ParamSet& cls, const ModelConfig& cfg,
                    const dsp::InputMap& map);

// ---- masking -------------------------------------------------------------

struct MaskSpec {
    double ratio = 0.25;  // fraction of columns to zero
    int span = 8;         // contiguous columns per masked block
    uint64_t seed = 0;
};

struct MaskedInput {
    dsp::InputMap masked;
    std::vector<uint8_t> cell_mask;  // n_channels * n_cols, 1 where zeroed
};

MaskedInput mask_input(const dsp::InputMap& x, const MaskSpec& spec);

// ---- checkpoints -----------------------------------------------------------
// EFNT file: magic "EFNT", version u16, phase u8, length-prefixed canonical
// config text, tensor count u32, per tensor: length-prefixed name, rank u8,
// dims u32[], f32 data; trailing CRC32.

struct Checkpoint {
    uint8_t phase = 0;  // 1 = pretrain, 2 = incremental, 3 = fine-tune
    ModelConfig config;
    tc::ParamSet params;
};

void save_checkpoint(const std::string& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::string& path);

// split a combined checkpoint ParamSet by prefix ("enc.", "cls.", ...)
tc::ParamSet extract_prefixed(const tc::ParamSet& all, const std::string& prefix);

}  // namespace efn::model
