#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/train.hpp"

namespace efn::eval {

// positive class = HLE (noisy); ties at p = 0.5 classify as HLE
struct ConfusionCounts {
    int64_t tp = 0, tn = 0, fp = 0, fn = 0;
    int64_t total() const { return tp + tn + fp + fn; }
};

double accuracy(const ConfusionCounts& counts);

struct SubjectEval {
    ConfusionCounts counts;
    double acc = 0.0;
};

SubjectEval evaluate_subject(tc::ParamSet& enc, tc::ParamSet& cls,
                             const model::ModelConfig& cfg,
                             const std::vector<data::EpochRecord>& test_records);

// fraction of epochs with p(HLE) < 0.5 under one model
double lle_probability(tc::ParamSet& enc, tc::ParamSet& cls,
                       const model::ModelConfig& cfg,
                       const std::vector<data::EpochRecord>& epochs);

// one CSV row of an experiment report
struct ReportRow {
    std::string experiment;
    int subject_id = -1;        // -1 for aggregate rows
    double ratio = -1.0;
    std::string phases;         // "3", "23" or "123"
    std::string condition;      // per-condition rows only
    int64_t n_epochs = 0;
    int64_t tp = 0, tn = 0, fp = 0, fn = 0;
    double acc = -1.0;
    double p_lle = -1.0;
    uint64_t seed = 0;
};

struct ExperimentReport {
    std::vector<ReportRow> rows;

    // unweighted mean/sd of per-subject accuracy rows matching a predicate
    void aggregate(const std::string& experiment, double ratio,
                   const std::string& phases, double* mean, double* sd) const;
};

struct FinetunedModel {
    int subject_id = 0;
    tc::ParamSet enc, cls;
};

// Phase-3 adaptation of the source model to every target subject at one
// ratio; runs subjects in parallel with per-subject derived seeds.
std::vector<FinetunedModel> finetune_per_subject(
    const std::vector<data::SubjectDataset>& targets, const tc::ParamSet& enc_init,
    const tc::ParamSet& cls_init, const model::ModelConfig& cfg, double ratio,
    const train::TrainBudget& budget, uint64_t seed);

// per-subject fine-tune + evaluate over a list of training ratios
ExperimentReport ratio_sweep(const std::vector<data::SubjectDataset>& targets,
                             const tc::ParamSet& enc_init, const tc::ParamSet& cls_init,
                             const model::ModelConfig& cfg,
                             const std::vector<double>& ratios,
                             const train::TrainBudget& budget, uint64_t seed);

// probability-based speech-enhancement evaluation: epochs pooled across
// subjects per condition, each scored by its subject's fine-tuned model
ExperimentReport lle_evaluation(const std::vector<data::SubjectDataset>& targets,
                                const std::vector<FinetunedModel>& models,
                                const model::ModelConfig& cfg, double ratio,
                                uint64_t seed);

}  // namespace efn::eval
