#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/dsp.hpp"
#include "core/model.hpp"
#include "core/synth.hpp"
#include "core/train.hpp"

namespace efn {

// Plain-text key = value run configuration. Unknown keys are rejected and the
// effective config is echoed into every output directory.
struct RunConfig {
    data::SyntheticConfig synth;
    dsp::FilterSpec filter;
    int downsample_factor = 5;

    model::ModelConfig model;

    // phase budgets
    int p1_epochs = 30;
    int p2_epochs = 5;
    int p3_epochs = 50;
    int batch_size = 16;
    double lr = 1e-4;
    double lambda = 1.0;
    int replay_capacity = 10;
    double mask_ratio = 0.25;
    int mask_span = 8;
    bool ssl_masked_only = false;

    // experiments
    std::vector<double> ratios = {0.0, 0.2, 0.4, 0.6, 0.8};
    double eval_ratio = 0.4;
    double fdr_q = 0.05;

    uint64_t seed = 1;

    void validate() const;

    // canonical serialization; parse(echo(x)) == x
    std::string echo() const;
    static RunConfig parse_text(const std::string& text);
    static RunConfig load(const std::string& path);

    train::TrainBudget budget(int epochs) const;
};

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace efn
