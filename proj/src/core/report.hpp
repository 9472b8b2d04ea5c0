#pragma once

#include <string>

#include "core/evaluation.hpp"

namespace efn::eval {

// CSV schema: experiment, subject_id, ratio, phases, condition, n_epochs,
// tp, tn, fp, fn, accuracy, p_lle, seed
std::string report_csv(const ExperimentReport& report);

// Deterministic, self-contained SVG charts: a line chart of mean accuracy per
// ratio for ratio_sweep rows, bar charts for ablation and lle rows. Writes one
// file per experiment family present in the report; returns the file count.
int emit_report(const ExperimentReport& report, const std::string& out_dir,
                const std::string& basename);

}  // namespace efn::eval
