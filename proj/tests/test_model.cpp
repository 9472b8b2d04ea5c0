#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "core/model.hpp"
#include "core/rng.hpp"
#include "helpers.hpp"

using namespace efn;
using namespace efn::model;

namespace {

struct BackendInit {
    BackendInit() { tc::init_backend(); }
} backend_init;

// production channel layout on a narrow map for fast tests
ModelConfig tiny_cfg() {
    ModelConfig cfg;
    cfg.in_w = 48;
    cfg.conv = {{4, 3, 5, 2}, {8, 3, 5, 2}};
    cfg.hidden = 8;
    return cfg;
}

dsp::InputMap random_map(uint64_t seed, int w) {
    dsp::InputMap m;
    m.n_channels = dsp::kNumChannels;
    m.n_cols = w;
    m.data.resize(static_cast<size_t>(m.n_channels) * w);
    Rng rng(seed);
    for (auto& v : m.data) v = static_cast<float>(rng.normal());
    m.subband_lengths = {w};
    return m;
}

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("config dims and serialization round trip") {
    ModelConfig cfg;
    CHECK(cfg.in_w == 566);
    CHECK(cfg.stage_widths() == std::vector<int>({566, 283, 141, 70, 35}));
    CHECK(cfg.feature_dim() == 32 * 16 * 35);

    cfg.seed = 99;
    cfg.epochs = 7;
    auto back = ModelConfig::from_text(cfg.to_text());
    CHECK(back.to_text() == cfg.to_text());
    CHECK(back.in_w == cfg.in_w);
    CHECK(back.seed == 99);

    CHECK_THROWS_AS(ModelConfig::from_text("nonsense_key = 3\n"), EfnError);
}

TEST_CASE("forward shapes and probability range") {
    auto cfg = tiny_cfg();
    auto enc = init_encoder(cfg, 1);
    auto cls = init_classifier(cfg, 2);
    auto map = random_map(3, cfg.in_w);
    auto x = input_tensor(map);
    CHECK(x.shape == std::vector<int>({1, 16, 48}));

    auto feat = forward_encoder(nullptr, x, enc, cfg);
    CHECK(feat.shape == std::vector<int>({8, 16, 12}));

    const double p = predict_prob(enc, cls, cfg, map);
    CHECK(p > 0.0);
    CHECK(p < 1.0);
}

TEST_CASE("zero classifier weights give p = 0.5 exactly") {
    auto cfg = tiny_cfg();
    auto enc = init_encoder(cfg, 1);
    auto cls = init_classifier(cfg, 2);
    for (auto& [name, t] : cls) std::fill(t.data->begin(), t.data->end(), 0.0f);
    CHECK(predict_prob(enc, cls, cfg, random_map(4, cfg.in_w)) == 0.5);
}

TEST_CASE("decoder reconstructs the input shape") {
    auto cfg = tiny_cfg();
    auto enc = init_encoder(cfg, 1);
    auto dec = init_decoder(cfg, 2);
    auto x = input_tensor(random_map(5, cfg.in_w));
    auto feat = forward_encoder(nullptr, x, enc, cfg);
    auto rec = forward_decoder(nullptr, feat, dec, cfg);
    CHECK(rec.shape == x.shape);
}

TEST_CASE("init determinism") {
    auto cfg = tiny_cfg();
    CHECK(init_encoder(cfg, 7).bitwise_equal(init_encoder(cfg, 7)));
    CHECK_FALSE(init_encoder(cfg, 7).bitwise_equal(init_encoder(cfg, 8)));
}

TEST_CASE("miniature end-to-end gradient check") {
    ModelConfig cfg;
    cfg.in_w = 12;
    cfg.conv = {{2, 3, 3, 2}, {3, 3, 3, 2}};
    cfg.hidden = 4;

    auto enc = init_encoder(cfg, 11);
    auto cls = init_classifier(cfg, 12);
    tc::ParamSet all;
    all.adopt("", enc);
    all.adopt("", cls);
    auto map = random_map(13, cfg.in_w);
    auto x = input_tensor(map);

    auto loss_fn = [&](tc::Tape* tape) {
        auto feat = forward_encoder(tape, x, enc, cfg);
        auto prob = forward_classifier(tape, feat, cls, cfg);
        return tc::bce_loss(tape, prob, 1);
    };
    CHECK(test::fd_rel_err(all, loss_fn, 1e-3) <= 1e-3);
}

TEST_CASE("decoder path gradient check") {
    ModelConfig cfg;
    cfg.in_w = 12;
    cfg.conv = {{2, 3, 3, 2}, {3, 3, 3, 2}};
    cfg.hidden = 4;

    auto enc = init_encoder(cfg, 21);
    auto dec = init_decoder(cfg, 22);
    tc::ParamSet all;
    all.adopt("", enc);
    all.adopt("", dec);
    auto x = input_tensor(random_map(23, cfg.in_w));

    auto loss_fn = [&](tc::Tape* tape) {
        auto feat = forward_encoder(tape, x, enc, cfg);
        auto rec = forward_decoder(tape, feat, dec, cfg);
        return tc::mse_loss(tape, rec, x);
    };
    CHECK(test::fd_rel_err(all, loss_fn, 1e-3) <= 1e-3);
}

TEST_CASE("mask determinism and coverage") {
    auto map = random_map(31, 64);
    MaskSpec spec{0.25, 8, 5};
    auto a = mask_input(map, spec);
    auto b = mask_input(map, spec);
    CHECK(a.masked.data == b.masked.data);
    CHECK(a.cell_mask == b.cell_mask);

    // masked cells are zero, unmasked cells untouched
    int64_t masked_cells = 0;
    for (size_t i = 0; i < map.data.size(); ++i) {
        if (a.cell_mask[i]) {
            CHECK(a.masked.data[i] == 0.0f);
            ++masked_cells;
        } else {
            CHECK(a.masked.data[i] == map.data[i]);
        }
    }
    // whole columns are masked; fraction close to the ratio
    const int64_t cols = masked_cells / map.n_channels;
    CHECK(masked_cells % map.n_channels == 0);
    CHECK(std::abs(cols - static_cast<int64_t>(0.25 * 64)) <= spec.span);

    MaskSpec tiny{1e-9, 8, 5};
    auto c = mask_input(map, tiny);
    int64_t cols_tiny = 0;
    for (int j = 0; j < map.n_cols; ++j) cols_tiny += c.cell_mask[j] ? 1 : 0;
    CHECK(cols_tiny == spec.span);  // at least one minimal span

    MaskSpec bad{1.5, 8, 5};
    CHECK_THROWS_AS(mask_input(map, bad), EfnError);
}

TEST_CASE("checkpoint round trip, truncation and version") {
    auto cfg = tiny_cfg();
    Checkpoint c;
    c.phase = 2;
    c.config = cfg;
    auto enc = init_encoder(cfg, 41);
    auto cls = init_classifier(cfg, 42);
    c.params.adopt("", enc);
    c.params.adopt("", cls);

    const auto path = temp_path("efn_test_ckpt.efnt");
    save_checkpoint(path, c);
    auto back = load_checkpoint(path);
    CHECK(back.phase == 2);
    CHECK(back.params.bitwise_equal(c.params));
    CHECK(back.config.to_text() == cfg.to_text());

    auto enc_only = extract_prefixed(back.params, "enc.");
    CHECK(enc_only.size() == enc.size());
    auto cls_only = extract_prefixed(back.params, "cls.");
    CHECK(cls_only.size() == cls.size());

    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 5);
    CHECK_THROWS_AS(load_checkpoint(path), EfnError);

    // bad version
    save_checkpoint(path, c);
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(4);
        f.put(static_cast<char>(0x7f));
    }
    CHECK_THROWS_AS(load_checkpoint(path), EfnError);
    std::filesystem::remove(path);
}
