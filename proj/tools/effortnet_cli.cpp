// Batch frontend over the effortnet C API: synthetic data generation,
// preprocessing, the three training phases, experiments and statistics.
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "effortnet.h"

namespace {

struct CtxDeleter {
    void operator()(efn_ctx* c) const { efn_ctx_destroy(c); }
};
using CtxPtr = std::unique_ptr<efn_ctx, CtxDeleter>;

const char* status_name(efn_status s) {
    switch (s) {
        case EFN_OK: return "ok";
        case EFN_ERR_INVALID_ARG: return "invalid-arg";
        case EFN_ERR_CONFIG: return "config";
        case EFN_ERR_IO: return "io";
        case EFN_ERR_FORMAT: return "format";
        case EFN_ERR_RUNTIME: return "runtime";
    }
    return "unknown";
}

int finish(efn_ctx* ctx, efn_status s) {
    if (s == EFN_OK) {
        std::printf("ok %s\n", efn_last_artifact(ctx));
        return 0;
    }
    std::fprintf(stderr, "error: %s: %s\n", status_name(s), efn_last_error(ctx));
    return static_cast<int>(s);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"EEG listening-effort classification pipeline"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_dir, in_path, init_ckpt, target_path, phases;
    uint64_t seed = 0;
    bool seed_given = false;
    double ratio = 0.0;
    std::vector<int> subjects;

    app.add_option("--config", config_path, "key = value run configuration file");
    auto* seed_opt = app.add_option("--seed", seed, "master seed (beats EFFORTNET_SEED)");
    app.add_option("--out", out_dir, "output directory")->required();

    auto* synth = app.add_subcommand("synth", "generate a seeded synthetic corpus");
    auto* preprocess =
        app.add_subcommand("preprocess", "raw EEGE -> band-passed DWT input maps");
    preprocess->add_option("--in", in_path, "raw EEGE file")->required();
    auto* pretrain =
        app.add_subcommand("pretrain", "phase 1: masked self-supervised pretraining");
    pretrain->add_option("--in", in_path, "input-map EEGE file")->required();
    auto* train_il =
        app.add_subcommand("train-il", "phase 2: replay-based incremental learning");
    train_il->add_option("--in", in_path, "input-map EEGE file")->required();
    train_il->add_option("--init", init_ckpt, "phase-1 checkpoint (omit for random init)");
    auto* finetune =
        app.add_subcommand("finetune", "phase 3: per-subject fine-tuning");
    finetune->add_option("--in", in_path, "input-map EEGE file")->required();
    finetune->add_option("--init", init_ckpt, "source-model checkpoint")->required();
    finetune->add_option("--ratio", ratio, "training ratio in [0,1)")->required();
    finetune->add_option("--subjects", subjects, "subject ids (default: all)");
    auto* evaluate =
        app.add_subcommand("evaluate", "fine-tune at one ratio and score held-out epochs");
    evaluate->add_option("--in", in_path, "input-map EEGE file")->required();
    evaluate->add_option("--init", init_ckpt, "source-model checkpoint")->required();
    evaluate->add_option("--ratio", ratio, "training ratio in [0,1)")->required();
    auto* sweep = app.add_subcommand("sweep", "accuracy over the configured ratio grid");
    sweep->add_option("--in", in_path, "input-map EEGE file")->required();
    sweep->add_option("--init", init_ckpt, "source-model checkpoint")->required();
    auto* ablate = app.add_subcommand("ablate", "phase-contribution comparison");
    ablate->add_option("--in", in_path, "source input-map EEGE file")->required();
    ablate->add_option("--target", target_path, "target input-map EEGE file")->required();
    ablate->add_option("--phases", phases, "one arm: 3, 23 or 123 (default: all)")
        ->check(CLI::IsMember({"3", "23", "123"}));
    auto* lle =
        app.add_subcommand("lle", "per-condition low-effort probability evaluation");
    lle->add_option("--in", in_path, "input-map EEGE file")->required();
    lle->add_option("--init", init_ckpt, "source-model checkpoint")->required();
    auto* stats = app.add_subcommand("stats", "alpha-power dataset validation");
    stats->add_option("--in", in_path, "raw EEGE file")->required();

    CLI11_PARSE(app, argc, argv);
    seed_given = seed_opt->count() > 0;

    CtxPtr ctx(efn_ctx_create());
    if (!ctx) {
        std::fprintf(stderr, "error: runtime: cannot create context\n");
        return static_cast<int>(EFN_ERR_RUNTIME);
    }

    if (!config_path.empty()) {
        if (efn_status s = efn_config_load(ctx.get(), config_path.c_str()); s != EFN_OK)
            return finish(ctx.get(), s);
    }
    if (const char* env = std::getenv("EFFORTNET_SEED"); env && !seed_given) {
        char* end = nullptr;
        const uint64_t v = std::strtoull(env, &end, 10);
        if (!end || *end != '\0') {
            std::fprintf(stderr, "error: invalid-arg: bad EFFORTNET_SEED '%s'\n", env);
            return static_cast<int>(EFN_ERR_INVALID_ARG);
        }
        efn_set_seed(ctx.get(), v);
    }
    if (seed_given) efn_set_seed(ctx.get(), seed);

    efn_status s = EFN_OK;
    if (synth->parsed()) {
        s = efn_cmd_synth(ctx.get(), out_dir.c_str());
    } else if (preprocess->parsed()) {
        s = efn_cmd_preprocess(ctx.get(), in_path.c_str(), out_dir.c_str());
    } else if (pretrain->parsed()) {
        s = efn_cmd_pretrain(ctx.get(), in_path.c_str(), out_dir.c_str());
    } else if (train_il->parsed()) {
        s = efn_cmd_train_il(ctx.get(), in_path.c_str(),
                             init_ckpt.empty() ? nullptr : init_ckpt.c_str(),
                             out_dir.c_str());
    } else if (finetune->parsed()) {
        s = efn_cmd_finetune(ctx.get(), in_path.c_str(), init_ckpt.c_str(), ratio,
                             subjects.empty() ? nullptr : subjects.data(),
                             subjects.size(), out_dir.c_str());
    } else if (evaluate->parsed()) {
        s = efn_cmd_evaluate(ctx.get(), in_path.c_str(), init_ckpt.c_str(), ratio,
                             out_dir.c_str());
    } else if (sweep->parsed()) {
        s = efn_cmd_sweep(ctx.get(), in_path.c_str(), init_ckpt.c_str(), out_dir.c_str());
    } else if (ablate->parsed()) {
        s = efn_cmd_ablate(ctx.get(), in_path.c_str(), target_path.c_str(),
                           phases.empty() ? nullptr : phases.c_str(), out_dir.c_str());
    } else if (lle->parsed()) {
        s = efn_cmd_lle(ctx.get(), in_path.c_str(), init_ckpt.c_str(), out_dir.c_str());
    } else if (stats->parsed()) {
        s = efn_cmd_stats(ctx.get(), in_path.c_str(), out_dir.c_str());
    }
    return finish(ctx.get(), s);
}
