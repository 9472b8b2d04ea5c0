#include "core/pipeline.hpp"

#include <filesystem>
#include <fstream>

#include "core/parallel.hpp"
#include "core/report.hpp"
#include "core/rng.hpp"
#include "core/statistics.hpp"
#include "core/synth.hpp"

namespace fs = std::filesystem;

namespace efn::pipe {

namespace {

void prepare_run_dir(const RunConfig& cfg, const std::string& out_dir) {
    fs::create_directories(out_dir);
    fs::create_directories(out_dir + "/checkpoints");
    fs::create_directories(out_dir + "/reports");
    write_text_file(out_dir + "/config.echo", cfg.echo());
}

std::vector<data::SubjectDataset> load_map_subjects(const std::string& path) {
    auto records = data::read_dataset(path);
    require(!records.empty(), "pipeline: '" + path + "' holds no epochs");
    for (const auto& r : records)
        require(r.is_map, "pipeline: '" + path + "' is raw; run preprocess first");
    return data::group_by_subject(std::move(records));
}

std::vector<dsp::InputMap> all_maps(const std::vector<data::SubjectDataset>& subjects) {
    std::vector<dsp::InputMap> maps;
    for (const auto& s : subjects)
        for (const auto& r : s.records) maps.push_back(r.map);
    return maps;
}

model::ModelConfig stamped_model(const RunConfig& cfg, int epochs) {
    model::ModelConfig m = cfg.model;
    m.seed = cfg.seed;
    m.epochs = epochs;
    m.lr = cfg.lr;
    return m;
}

void save_phase(const std::string& path, uint8_t phase, const model::ModelConfig& mc,
                tc::ParamSet& enc, tc::ParamSet* cls) {
    model::Checkpoint c;
    c.phase = phase;
    c.config = mc;
    c.params.adopt("", enc);
    if (cls) c.params.adopt("", *cls);
    model::save_checkpoint(path, c);
}

// loads enc (and cls when present; otherwise a seed-derived fresh head)
void load_model(const std::string& ckpt_path, const RunConfig& cfg, tc::ParamSet* enc,
                tc::ParamSet* cls, model::ModelConfig* mc) {
    auto c = model::load_checkpoint(ckpt_path);
    require(c.config.in_w == cfg.model.in_w && c.config.hidden == cfg.model.hidden,
            "pipeline: checkpoint dims do not match the config");
    *enc = model::extract_prefixed(c.params, "enc.");
    require(enc->size() > 0, "pipeline: checkpoint '" + ckpt_path + "' has no encoder");
    auto head = model::extract_prefixed(c.params, "cls.");
    if (head.size() > 0)
        *cls = std::move(head);
    else
        *cls = model::init_classifier(cfg.model, Rng::derive(cfg.seed, 0xC1A55u));
    if (mc) *mc = c.config;
}

struct ArmSpec {
    std::string tag;      // "3", "23", "123"
    bool use_ssl, use_il;
};

// fine-tune + evaluate every target subject at one ratio; rows land in
// subject order regardless of thread timing
std::vector<eval::ReportRow> finetune_rows(
    const std::vector<data::SubjectDataset>& targets, const tc::ParamSet& enc_init,
    const tc::ParamSet& cls_init, const RunConfig& cfg, double ratio,
    const std::string& experiment, const std::string& phases) {
    const auto budget = cfg.budget(cfg.p3_epochs);
    std::vector<eval::ReportRow> rows(targets.size());
    parallel_for(targets.size(), [&](size_t i) {
        const auto& subj = targets[i];
        const uint64_t subj_seed =
            Rng::derive(cfg.seed, static_cast<uint64_t>(subj.subject_id));
        const auto split = data::split_by_ratio(subj, ratio, subj_seed);
        auto ft = train::finetune(split.train, enc_init, cls_init, cfg.model, budget,
                                  subj_seed);
        const auto ev = eval::evaluate_subject(ft.encoder, ft.classifier, cfg.model,
                                               split.test);
        eval::ReportRow row;
        row.experiment = experiment;
        row.subject_id = subj.subject_id;
        row.ratio = ratio;
        row.phases = phases;
        row.n_epochs = ev.counts.total();
        row.tp = ev.counts.tp;
        row.tn = ev.counts.tn;
        row.fp = ev.counts.fp;
        row.fn = ev.counts.fn;
        row.acc = ev.acc;
        row.seed = cfg.seed;
        rows[i] = std::move(row);
    });
    return rows;
}

}  // namespace

std::vector<std::string> cmd_synth(const RunConfig& cfg, const std::string& out_dir) {
    prepare_run_dir(cfg, out_dir);
    data::SyntheticConfig sc = cfg.synth;
    sc.master_seed = cfg.seed;
    auto synth = data::generate_synthetic(sc);
    const std::string src = out_dir + "/source_raw.eege";
    const std::string tgt = out_dir + "/target_raw.eege";
    data::write_dataset(src, data::flatten(synth.source));
    data::write_dataset(tgt, data::flatten(synth.target));
    return {src, tgt};
}

std::string cmd_preprocess(const RunConfig& cfg, const std::string& in_path,
                           const std::string& out_dir) {
    prepare_run_dir(cfg, out_dir);
    auto records = data::read_dataset(in_path);
    require(!records.empty(), "preprocess: '" + in_path + "' holds no epochs");
    require(!records.front().is_map, "preprocess: input already holds maps");
    const double fs = records.front().raw.fs;
    const auto sos = dsp::design_cheby2_bandpass(cfg.filter, fs);

    std::vector<data::EpochRecord> out(records.size());
    parallel_for(records.size(), [&](size_t i) {
        const auto& r = records[i];
        auto epoch = dsp::filter_epoch(sos, r.raw);
        epoch = dsp::downsample(epoch, cfg.downsample_factor);
        epoch = dsp::znormalize(epoch);
        data::EpochRecord m;
        m.subject_id = r.subject_id;
        m.condition = r.condition;
        m.label = r.label;
        m.is_map = true;
        m.map = dsp::build_input_map(epoch);
        out[i] = std::move(m);
    });

    std::string stem = fs::path(in_path).stem().string();
    const std::string suffix = "_raw";
    if (stem.size() > suffix.size() &&
        stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) == 0)
        stem.resize(stem.size() - suffix.size());
    const std::string out_path = out_dir + "/" + stem + "_maps.eege";
    data::write_dataset(out_path, out);
    return out_path;
}

std::string cmd_pretrain(const RunConfig& cfg, const std::string& maps_path,
                         const std::string& out_dir) {
    prepare_run_dir(cfg, out_dir);
    const auto subjects = load_map_subjects(maps_path);
    const auto maps = all_maps(subjects);
    model::MaskSpec mask{cfg.mask_ratio, cfg.mask_span, 0};
    auto res = train::ssl_pretrain(maps, cfg.model, mask, cfg.budget(cfg.p1_epochs),
                                   Rng::derive(cfg.seed, 0x551u), cfg.ssl_masked_only);
    const std::string path = out_dir + "/checkpoints/phase1.efnt";
    save_phase(path, 1, stamped_model(cfg, cfg.p1_epochs), res.encoder, nullptr);
    return path;
}

std::string cmd_train_il(const RunConfig& cfg, const std::string& maps_path,
                         const std::string& init_ckpt, const std::string& out_dir) {
    prepare_run_dir(cfg, out_dir);
    const auto tasks = load_map_subjects(maps_path);
    tc::ParamSet enc_init;
    const tc::ParamSet* init = nullptr;
    if (!init_ckpt.empty()) {
        tc::ParamSet unused_cls;
        load_model(init_ckpt, cfg, &enc_init, &unused_cls, nullptr);
        init = &enc_init;
    }
    data::ReplayBuffer replay(cfg.replay_capacity, Rng::derive(cfg.seed, 0x8EBu));
    auto res = train::il_train(tasks, init, cfg.model, replay, cfg.lambda,
                               cfg.budget(cfg.p2_epochs), Rng::derive(cfg.seed, 0x112u));
    const std::string path = out_dir + "/checkpoints/phase2.efnt";
    save_phase(path, 2, stamped_model(cfg, cfg.p2_epochs), res.encoder, &res.classifier);
    return path;
}

std::vector<std::string> cmd_finetune(const RunConfig& cfg, const std::string& maps_path,
                                      const std::string& init_ckpt, double ratio,
                                      const std::vector<int>& subjects,
                                      const std::string& out_dir) {
    require(ratio >= 0.0 && ratio < 1.0, "finetune: ratio out of [0,1)");
    prepare_run_dir(cfg, out_dir);
    auto targets = load_map_subjects(maps_path);
    if (!subjects.empty()) {
        std::vector<data::SubjectDataset> kept;
        for (int id : subjects) {
            bool found = false;
            for (auto& t : targets)
                if (t.subject_id == id) {
                    kept.push_back(std::move(t));
                    found = true;
                    break;
                }
            require(found, "finetune: subject " + std::to_string(id) + " not in file");
        }
        targets = std::move(kept);
    }

    std::vector<std::string> paths;
    if (ratio == 0.0) {
        // subject-independent: emit exact byte copies of the init weights
        const std::string bytes = read_text_file(init_ckpt);
        for (const auto& t : targets) {
            const std::string p = out_dir + "/checkpoints/finetune_s" +
                                  std::to_string(t.subject_id) + ".efnt";
            write_text_file(p, bytes);
            paths.push_back(p);
        }
        return paths;
    }

    tc::ParamSet enc_init, cls_init;
    load_model(init_ckpt, cfg, &enc_init, &cls_init, nullptr);
    auto models = eval::finetune_per_subject(targets, enc_init, cls_init, cfg.model,
                                             ratio, cfg.budget(cfg.p3_epochs), cfg.seed);
    for (auto& m : models) {
        const std::string p = out_dir + "/checkpoints/finetune_s" +
                              std::to_string(m.subject_id) + ".efnt";
        save_phase(p, 3, stamped_model(cfg, cfg.p3_epochs), m.enc, &m.cls);
        paths.push_back(p);
    }
    return paths;
}

std::string cmd_evaluate(const RunConfig& cfg, const std::string& maps_path,
                         const std::string& init_ckpt, double ratio,
                         const std::string& out_dir) {
    prepare_run_dir(cfg, out_dir);
    const auto targets = load_map_subjects(maps_path);
    tc::ParamSet enc_init, cls_init;
    load_model(init_ckpt, cfg, &enc_init, &cls_init, nullptr);
    eval::ExperimentReport report;
    report.rows = finetune_rows(targets, enc_init, cls_init, cfg, ratio, "evaluate",
                                "123");
    eval::emit_report(report, out_dir + "/reports", "evaluate");
    return out_dir + "/reports/evaluate.csv";
}

std::string cmd_sweep(const RunConfig& cfg, const std::string& maps_path,
                      const std::string& init_ckpt, const std::string& out_dir) {
    prepare_run_dir(cfg, out_dir);
    const auto targets = load_map_subjects(maps_path);
    tc::ParamSet enc_init, cls_init;
    load_model(init_ckpt, cfg, &enc_init, &cls_init, nullptr);
    auto report = eval::ratio_sweep(targets, enc_init, cls_init, cfg.model, cfg.ratios,
                                    cfg.budget(cfg.p3_epochs), cfg.seed);
    eval::emit_report(report, out_dir + "/reports", "sweep");
    return out_dir + "/reports/sweep.csv";
}

train::IlResult train_source_model(const RunConfig& cfg,
                                   const data::TaskSequence& source) {
    model::MaskSpec mask{cfg.mask_ratio, cfg.mask_span, 0};
    auto ssl = train::ssl_pretrain(all_maps(source), cfg.model, mask,
                                   cfg.budget(cfg.p1_epochs),
                                   Rng::derive(cfg.seed, 0x551u), cfg.ssl_masked_only);
    data::ReplayBuffer replay(cfg.replay_capacity, Rng::derive(cfg.seed, 0x8EBu));
    return train::il_train(source, &ssl.encoder, cfg.model, replay, cfg.lambda,
                           cfg.budget(cfg.p2_epochs), Rng::derive(cfg.seed, 0x112u));
}

eval::ExperimentReport ablation_arms(const RunConfig& cfg,
                                     const data::TaskSequence& source,
                                     const std::vector<data::SubjectDataset>& targets,
                                     const std::vector<std::string>& phases) {
    std::vector<std::string> arms = phases;
    if (arms.empty()) arms = {"3", "23", "123"};
    eval::ExperimentReport report;
    for (const auto& arm : arms) {
        require(arm == "3" || arm == "23" || arm == "123",
                "ablate: phases must be 3, 23 or 123");
        tc::ParamSet enc_init, cls_init;
        if (arm == "3") {
            enc_init = model::init_encoder(cfg.model, Rng::derive(cfg.seed, 0xE0Cu));
            cls_init = model::init_classifier(cfg.model, Rng::derive(cfg.seed, 0xC15u));
        } else if (arm == "23") {
            data::ReplayBuffer replay(cfg.replay_capacity,
                                      Rng::derive(cfg.seed, 0x8EBu));
            auto il = train::il_train(source, nullptr, cfg.model, replay, cfg.lambda,
                                      cfg.budget(cfg.p2_epochs),
                                      Rng::derive(cfg.seed, 0x112u));
            enc_init = std::move(il.encoder);
            cls_init = std::move(il.classifier);
        } else {
            auto full = train_source_model(cfg, source);
            enc_init = std::move(full.encoder);
            cls_init = std::move(full.classifier);
        }
        auto rows = finetune_rows(targets, enc_init, cls_init, cfg, cfg.eval_ratio,
                                  "ablation", arm);
        for (auto& r : rows) report.rows.push_back(std::move(r));
    }
    return report;
}

std::string cmd_ablate(const RunConfig& cfg, const std::string& source_maps_path,
                       const std::string& target_maps_path,
                       const std::vector<std::string>& phases,
                       const std::string& out_dir) {
    prepare_run_dir(cfg, out_dir);
    const auto source = load_map_subjects(source_maps_path);
    const auto targets = load_map_subjects(target_maps_path);
    auto report = ablation_arms(cfg, source, targets, phases);
    eval::emit_report(report, out_dir + "/reports", "ablation");
    return out_dir + "/reports/ablation.csv";
}

std::string cmd_lle(const RunConfig& cfg, const std::string& maps_path,
                    const std::string& init_ckpt, const std::string& out_dir) {
    prepare_run_dir(cfg, out_dir);
    const auto targets = load_map_subjects(maps_path);
    tc::ParamSet enc_init, cls_init;
    load_model(init_ckpt, cfg, &enc_init, &cls_init, nullptr);
    auto models = eval::finetune_per_subject(targets, enc_init, cls_init, cfg.model,
                                             cfg.eval_ratio, cfg.budget(cfg.p3_epochs),
                                             cfg.seed);
    auto report = eval::lle_evaluation(targets, models, cfg.model, cfg.eval_ratio,
                                       cfg.seed);
    eval::emit_report(report, out_dir + "/reports", "lle");
    return out_dir + "/reports/lle.csv";
}

std::string cmd_stats(const RunConfig& cfg, const std::string& raw_path,
                      const std::string& out_dir) {
    prepare_run_dir(cfg, out_dir);
    auto records = data::read_dataset(raw_path);
    require(!records.empty(), "stats: '" + raw_path + "' holds no epochs");
    require(!records.front().is_map, "stats: expects a raw EEGE file");
    const double fs = records.front().raw.fs;
    const auto sos = dsp::design_cheby2_bandpass(cfg.filter, fs);
    const auto subjects = data::group_by_subject(std::move(records));
    auto report = stats::validate_dataset(
        subjects,
        [&](const dsp::RawEpoch& e) { return dsp::alpha_power(dsp::filter_epoch(sos, e)); },
        cfg.fdr_q);
    const std::string path = out_dir + "/reports/stats.csv";
    write_text_file(path, stats::stats_report_csv(report));
    return path;
}

}  // namespace efn::pipe
