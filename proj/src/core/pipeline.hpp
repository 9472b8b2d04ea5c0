#pragma once

#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/evaluation.hpp"

namespace efn::pipe {

// Command layer shared by the C API and the CLI. Every command creates
// out_dir/{config.echo, checkpoints/, reports/} as needed and is a pure
// function of (input bytes, config, seed). Returned strings are the paths of
// the primary artifacts.

// source_raw.eege + target_raw.eege
std::vector<std::string> cmd_synth(const RunConfig& cfg, const std::string& out_dir);

// raw EEGE -> input-map EEGE; output name derives from the input stem
std::string cmd_preprocess(const RunConfig& cfg, const std::string& in_path,
                           const std::string& out_dir);

// Phase 1 on all epochs of a map file -> checkpoints/phase1.efnt
std::string cmd_pretrain(const RunConfig& cfg, const std::string& maps_path,
                         const std::string& out_dir);

// Phase 2 over the per-subject task sequence; init_ckpt may be empty for a
// random encoder start -> checkpoints/phase2.efnt
std::string cmd_train_il(const RunConfig& cfg, const std::string& maps_path,
                         const std::string& init_ckpt, const std::string& out_dir);

// Phase 3 per target subject -> checkpoints/finetune_s<ID>.efnt. With
// ratio 0.0 the outputs are byte copies of the init checkpoint. subjects empty
// selects every subject in the file.
std::vector<std::string> cmd_finetune(const RunConfig& cfg, const std::string& maps_path,
                                      const std::string& init_ckpt, double ratio,
                                      const std::vector<int>& subjects,
                                      const std::string& out_dir);

// fine-tune at one ratio and score the held-out split per subject
std::string cmd_evaluate(const RunConfig& cfg, const std::string& maps_path,
                         const std::string& init_ckpt, double ratio,
                         const std::string& out_dir);

// cfg.ratios x subjects accuracy grid
std::string cmd_sweep(const RunConfig& cfg, const std::string& maps_path,
                      const std::string& init_ckpt, const std::string& out_dir);

// phase-contribution arms; phases empty runs "3", "23" and "123"
std::string cmd_ablate(const RunConfig& cfg, const std::string& source_maps_path,
                       const std::string& target_maps_path,
                       const std::vector<std::string>& phases,
                       const std::string& out_dir);

// per-condition low-effort probabilities under fine-tuned models
std::string cmd_lle(const RunConfig& cfg, const std::string& maps_path,
                    const std::string& init_ckpt, const std::string& out_dir);

// alpha-power dataset validation on a raw EEGE file
std::string cmd_stats(const RunConfig& cfg, const std::string& raw_path,
                      const std::string& out_dir);

// in-memory ablation arms used by cmd_ablate and the acceptance harness
eval::ExperimentReport ablation_arms(const RunConfig& cfg,
                                     const data::TaskSequence& source,
                                     const std::vector<data::SubjectDataset>& targets,
                                     const std::vector<std::string>& phases);

// trains phases 1+2 on source maps; returns the combined enc+cls weights
train::IlResult train_source_model(const RunConfig& cfg,
                                   const data::TaskSequence& source);

}  // namespace efn::pipe
