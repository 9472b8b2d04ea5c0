#pragma once

#include <cstdint>
#include <vector>

#include "core/adam.hpp"
#include "core/dataset.hpp"
#include "core/model.hpp"

namespace efn::train {

struct TrainBudget {
    int epochs = 1;
    int batch_size = 16;
    double lr = 1e-4;
};

struct SslResult {
    tc::ParamSet encoder;            // theta*
    std::vector<double> loss_per_epoch;
};

// Phase 1: masked reconstruction on unlabeled input maps. Decoder weights are
// trained alongside but only the encoder is returned.
SslResult ssl_pretrain(const std::vector<dsp::InputMap>& unlabeled,
                       const model::ModelConfig& cfg, const model::MaskSpec& mask,
                       const TrainBudget& budget, uint64_t seed,
                       bool masked_cells_only = false);

struct IlResult {
    tc::ParamSet encoder;     // theta^T
    tc::ParamSet classifier;  // psi^T
};

// Phase 2: sequential per-subject training with replayed past samples.
// init_encoder, when given, seeds theta (from Phase 1); otherwise the encoder
// starts from random init.
IlResult il_train(const data::TaskSequence& tasks, const tc::ParamSet* init_encoder,
                  const model::ModelConfig& cfg, data::ReplayBuffer& replay,
                  double lambda, const TrainBudget& budget, uint64_t seed);

// Phase 3: supervised adaptation on a target subject's train split. An empty
// split returns the init weights unchanged.
IlResult finetune(const std::vector<data::EpochRecord>& train_split,
                  const tc::ParamSet& enc_init, const tc::ParamSet& cls_init,
                  const model::ModelConfig& cfg, const TrainBudget& budget,
                  uint64_t seed);

// mean BCE training loss of a labeled set under the given weights
double supervised_loss(const std::vector<data::EpochRecord>& records,
                       tc::ParamSet& enc, tc::ParamSet& cls,
                       const model::ModelConfig& cfg);

}  // namespace efn::train
