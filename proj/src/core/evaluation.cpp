#include "core/evaluation.hpp"

#include <cmath>

#include "core/parallel.hpp"
#include "core/rng.hpp"

namespace efn::eval {

double accuracy(const ConfusionCounts& counts) {
    require(counts.total() > 0, "accuracy: zero total");
    return static_cast<double>(counts.tp + counts.tn) /
           static_cast<double>(counts.total());
}

SubjectEval evaluate_subject(tc::ParamSet& enc, tc::ParamSet& cls,
                             const model::ModelConfig& cfg,
                             const std::vector<data::EpochRecord>& test_records) {
    SubjectEval out;
    for (const auto& r : test_records) {
        require(r.is_map, "evaluate_subject: records must carry input maps");
        require(r.labeled(), "evaluate_subject: unlabeled record");
        const double p = model::predict_prob(enc, cls, cfg, r.map);
        const bool pred_hle = p >= 0.5;
        if (r.label == 1)
            pred_hle ? ++out.counts.tp : ++out.counts.fn;
        else
            pred_hle ? ++out.counts.fp : ++out.counts.tn;
    }
    out.acc = accuracy(out.counts);
    return out;
}

double lle_probability(tc::ParamSet& enc, tc::ParamSet& cls,
                       const model::ModelConfig& cfg,
                       const std::vector<data::EpochRecord>& epochs) {
    require(!epochs.empty(), "lle_probability: empty epoch set");
    int64_t lle = 0;
    for (const auto& r : epochs) {
        require(r.is_map, "lle_probability: records must carry input maps");
        if (model::predict_prob(enc, cls, cfg, r.map) < 0.5) ++lle;
    }
    return static_cast<double>(lle) / static_cast<double>(epochs.size());
}

void ExperimentReport::aggregate(const std::string& experiment, double ratio,
                                 const std::string& phases, double* mean,
                                 double* sd) const {
    std::vector<double> accs;
    for (const auto& r : rows) {
        if (r.experiment != experiment || r.subject_id < 0 || r.acc < 0.0) continue;
        if (ratio >= 0.0 && std::fabs(r.ratio - ratio) > 1e-12) continue;
        if (!phases.empty() && r.phases != phases) continue;
        accs.push_back(r.acc);
    }
    require(!accs.empty(), "aggregate: no matching rows");
    double m = 0.0;
    for (double a : accs) m += a;
    m /= static_cast<double>(accs.size());
    double v = 0.0;
    for (double a : accs) v += (a - m) * (a - m);
    v = accs.size() > 1 ? v / static_cast<double>(accs.size() - 1) : 0.0;
    if (mean) *mean = m;
    if (sd) *sd = std::sqrt(v);
}

std::vector<FinetunedModel> finetune_per_subject(
    const std::vector<data::SubjectDataset>& targets, const tc::ParamSet& enc_init,
    const tc::ParamSet& cls_init, const model::ModelConfig& cfg, double ratio,
    const train::TrainBudget& budget, uint64_t seed) {
    std::vector<FinetunedModel> out(targets.size());
    parallel_for(targets.size(), [&](size_t i) {
        const auto& subj = targets[i];
        const uint64_t subj_seed = Rng::derive(seed, static_cast<uint64_t>(subj.subject_id));
        const auto split = data::split_by_ratio(subj, ratio, subj_seed);
        auto ft = train::finetune(split.train, enc_init, cls_init, cfg, budget, subj_seed);
        out[i] = {subj.subject_id, std::move(ft.encoder), std::move(ft.classifier)};
    });
    return out;
}

ExperimentReport ratio_sweep(const std::vector<data::SubjectDataset>& targets,
                             const tc::ParamSet& enc_init, const tc::ParamSet& cls_init,
                             const model::ModelConfig& cfg,
                             const std::vector<double>& ratios,
                             const train::TrainBudget& budget, uint64_t seed) {
    require(!targets.empty(), "ratio_sweep: no target subjects");
    ExperimentReport report;
    for (double ratio : ratios) {
        std::vector<ReportRow> rows(targets.size());
        parallel_for(targets.size(), [&](size_t i) {
            const auto& subj = targets[i];
            const uint64_t subj_seed =
                Rng::derive(seed, static_cast<uint64_t>(subj.subject_id));
            const auto split = data::split_by_ratio(subj, ratio, subj_seed);
            auto ft =
                train::finetune(split.train, enc_init, cls_init, cfg, budget, subj_seed);
            const auto ev = evaluate_subject(ft.encoder, ft.classifier, cfg, split.test);
            ReportRow row;
            row.experiment = "ratio_sweep";
            row.subject_id = subj.subject_id;
            row.ratio = ratio;
            row.phases = "123";
            row.n_epochs = ev.counts.total();
            row.tp = ev.counts.tp;
            row.tn = ev.counts.tn;
            row.fp = ev.counts.fp;
            row.fn = ev.counts.fn;
            row.acc = ev.acc;
            row.seed = seed;
            rows[i] = std::move(row);
        });
        for (auto& r : rows) report.rows.push_back(std::move(r));
    }
    return report;
}

ExperimentReport lle_evaluation(const std::vector<data::SubjectDataset>& targets,
                                const std::vector<FinetunedModel>& models,
                                const model::ModelConfig& cfg, double ratio,
                                uint64_t seed) {
    require(targets.size() == models.size(), "lle_evaluation: model/subject mismatch");
    ExperimentReport report;
    for (int c = 0; c < 4; ++c) {
        const auto cond = static_cast<dsp::Condition>(c);
        int64_t lle = 0, total = 0;
        for (size_t i = 0; i < targets.size(); ++i) {
            auto enc = models[i].enc;  // shared storage, read-only here
            auto cls = models[i].cls;
            for (const auto& r : targets[i].records) {
                require(r.is_map, "lle_evaluation: records must carry input maps");
                if (r.map.condition != cond) continue;
                if (model::predict_prob(enc, cls, cfg, r.map) < 0.5) ++lle;
                ++total;
            }
        }
        require(total > 0, "lle_evaluation: no epochs for condition");
        ReportRow row;
        row.experiment = "lle";
        row.ratio = ratio;
        row.phases = "123";
        row.condition = dsp::condition_name(cond);
        row.n_epochs = total;
        row.p_lle = static_cast<double>(lle) / static_cast<double>(total);
        row.seed = seed;
        report.rows.push_back(std::move(row));
    }
    return report;
}

}  // namespace efn::eval
