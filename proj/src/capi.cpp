#include "effortnet.h"

#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/nn.hpp"
#include "core/pipeline.hpp"

namespace {

constexpr const char* kVersion = "1.0.0";

efn_status classify(const std::string& msg) {
    const auto has = [&](const char* s) { return msg.find(s) != std::string::npos; };
    if (has("config:")) return EFN_ERR_CONFIG;
    if (has("magic") || has("checksum") || has("version") || has("truncated") ||
        has("corrupt") || has("format") || has("is raw") || has("already holds") ||
        has("expects a raw"))
        return EFN_ERR_FORMAT;
    if (has("cannot open") || has("write failed") || has("holds no epochs"))
        return EFN_ERR_IO;
    return EFN_ERR_RUNTIME;
}

}  // namespace

struct efn_ctx {
    efn::RunConfig cfg;
    std::string last_error;
    std::string last_artifact;
    std::string echo_buf;
};

extern "C" {

efn_ctx* efn_ctx_create(void) {
    efn::tc::init_backend();
    try {
        return new efn_ctx();
    } catch (...) {
        return nullptr;
    }
}

void efn_ctx_destroy(efn_ctx* ctx) { delete ctx; }

const char* efn_last_error(const efn_ctx* ctx) {
    return ctx ? ctx->last_error.c_str() : "null context";
}

const char* efn_last_artifact(const efn_ctx* ctx) {
    return ctx ? ctx->last_artifact.c_str() : "";
}

const char* efn_version(void) { return kVersion; }

}  // extern "C"

namespace {

// runs fn, translating exceptions into status codes on the context
template <typename Fn>
efn_status guarded(efn_ctx* ctx, Fn&& fn) {
    if (!ctx) return EFN_ERR_INVALID_ARG;
    ctx->last_error.clear();
    try {
        fn();
        return EFN_OK;
    } catch (const efn::EfnError& e) {
        ctx->last_error = e.what();
        return classify(ctx->last_error);
    } catch (const std::exception& e) {
        ctx->last_error = e.what();
        return EFN_ERR_RUNTIME;
    } catch (...) {
        ctx->last_error = "unknown error";
        return EFN_ERR_RUNTIME;
    }
}

efn_status need(efn_ctx* ctx, bool ok, const char* what) {
    if (ok) return EFN_OK;
    if (ctx) ctx->last_error = std::string("invalid argument: ") + what;
    return EFN_ERR_INVALID_ARG;
}

}  // namespace

extern "C" {

efn_status efn_config_load(efn_ctx* ctx, const char* path) {
    if (auto s = need(ctx, path != nullptr, "path"); s != EFN_OK) return s;
    return guarded(ctx, [&] { ctx->cfg = efn::RunConfig::load(path); });
}

efn_status efn_config_from_text(efn_ctx* ctx, const char* text) {
    if (auto s = need(ctx, text != nullptr, "text"); s != EFN_OK) return s;
    return guarded(ctx, [&] { ctx->cfg = efn::RunConfig::parse_text(text); });
}

efn_status efn_set_seed(efn_ctx* ctx, uint64_t seed) {
    if (!ctx) return EFN_ERR_INVALID_ARG;
    ctx->cfg.seed = seed;
    return EFN_OK;
}

const char* efn_config_echo(efn_ctx* ctx) {
    if (!ctx) return "";
    ctx->echo_buf = ctx->cfg.echo();
    return ctx->echo_buf.c_str();
}

efn_status efn_cmd_synth(efn_ctx* ctx, const char* out_dir) {
    if (auto s = need(ctx, out_dir != nullptr, "out_dir"); s != EFN_OK) return s;
    return guarded(ctx, [&] {
        ctx->last_artifact = efn::pipe::cmd_synth(ctx->cfg, out_dir).front();
    });
}

efn_status efn_cmd_preprocess(efn_ctx* ctx, const char* in_path, const char* out_dir) {
    if (auto s = need(ctx, in_path && out_dir, "in_path/out_dir"); s != EFN_OK) return s;
    return guarded(ctx, [&] {
        ctx->last_artifact = efn::pipe::cmd_preprocess(ctx->cfg, in_path, out_dir);
    });
}

efn_status efn_cmd_pretrain(efn_ctx* ctx, const char* maps_path, const char* out_dir) {
    if (auto s = need(ctx, maps_path && out_dir, "maps_path/out_dir"); s != EFN_OK)
        return s;
    return guarded(ctx, [&] {
        ctx->last_artifact = efn::pipe::cmd_pretrain(ctx->cfg, maps_path, out_dir);
    });
}

efn_status efn_cmd_train_il(efn_ctx* ctx, const char* maps_path, const char* init_ckpt,
                            const char* out_dir) {
    if (auto s = need(ctx, maps_path && out_dir, "maps_path/out_dir"); s != EFN_OK)
        return s;
    return guarded(ctx, [&] {
        ctx->last_artifact = efn::pipe::cmd_train_il(
            ctx->cfg, maps_path, init_ckpt ? init_ckpt : "", out_dir);
    });
}

efn_status efn_cmd_finetune(efn_ctx* ctx, const char* maps_path, const char* init_ckpt,
                            double ratio, const int* subjects, size_t n_subjects,
                            const char* out_dir) {
    if (auto s = need(ctx, maps_path && init_ckpt && out_dir,
                      "maps_path/init_ckpt/out_dir");
        s != EFN_OK)
        return s;
    if (auto s = need(ctx, subjects != nullptr || n_subjects == 0, "subjects");
        s != EFN_OK)
        return s;
    return guarded(ctx, [&] {
        std::vector<int> ids(subjects, subjects + n_subjects);
        auto paths =
            efn::pipe::cmd_finetune(ctx->cfg, maps_path, init_ckpt, ratio, ids, out_dir);
        ctx->last_artifact = paths.empty() ? "" : paths.front();
    });
}

efn_status efn_cmd_evaluate(efn_ctx* ctx, const char* maps_path, const char* init_ckpt,
                            double ratio, const char* out_dir) {
    if (auto s = need(ctx, maps_path && init_ckpt && out_dir,
                      "maps_path/init_ckpt/out_dir");
        s != EFN_OK)
        return s;
    return guarded(ctx, [&] {
        ctx->last_artifact =
            efn::pipe::cmd_evaluate(ctx->cfg, maps_path, init_ckpt, ratio, out_dir);
    });
}

efn_status efn_cmd_sweep(efn_ctx* ctx, const char* maps_path, const char* init_ckpt,
                         const char* out_dir) {
    if (auto s = need(ctx, maps_path && init_ckpt && out_dir,
                      "maps_path/init_ckpt/out_dir");
        s != EFN_OK)
        return s;
    return guarded(ctx, [&] {
        ctx->last_artifact =
            efn::pipe::cmd_sweep(ctx->cfg, maps_path, init_ckpt, out_dir);
    });
}

efn_status efn_cmd_ablate(efn_ctx* ctx, const char* source_maps_path,
                          const char* target_maps_path, const char* phases,
                          const char* out_dir) {
    if (auto s = need(ctx, source_maps_path && target_maps_path && out_dir,
                      "source/target/out_dir");
        s != EFN_OK)
        return s;
    return guarded(ctx, [&] {
        std::vector<std::string> arms;
        if (phases && phases[0] != '\0') arms.emplace_back(phases);
        ctx->last_artifact = efn::pipe::cmd_ablate(ctx->cfg, source_maps_path,
                                                   target_maps_path, arms, out_dir);
    });
}

efn_status efn_cmd_lle(efn_ctx* ctx, const char* maps_path, const char* init_ckpt,
                       const char* out_dir) {
    if (auto s = need(ctx, maps_path && init_ckpt && out_dir,
                      "maps_path/init_ckpt/out_dir");
        s != EFN_OK)
        return s;
    return guarded(ctx, [&] {
        ctx->last_artifact = efn::pipe::cmd_lle(ctx->cfg, maps_path, init_ckpt, out_dir);
    });
}

efn_status efn_cmd_stats(efn_ctx* ctx, const char* raw_path, const char* out_dir) {
    if (auto s = need(ctx, raw_path && out_dir, "raw_path/out_dir"); s != EFN_OK)
        return s;
    return guarded(ctx, [&] {
        ctx->last_artifact = efn::pipe::cmd_stats(ctx->cfg, raw_path, out_dir);
    });
}

}  // extern "C"
