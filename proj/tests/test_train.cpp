#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "core/train.hpp"
#include "core/rng.hpp"

using namespace efn;
using namespace efn::train;

namespace {

struct BackendInit {
    BackendInit() { tc::init_backend(); }
} backend_init;

model::ModelConfig tiny_cfg() {
    model::ModelConfig cfg;
    cfg.in_w = 48;
    cfg.conv = {{4, 3, 5, 2}, {8, 3, 5, 2}};
    cfg.hidden = 8;
    return cfg;
}

// class-separable toy map: label shifts the mean of every cell
dsp::InputMap labeled_map(uint64_t seed, int w, int label, int subject) {
    dsp::InputMap m;
    m.subject_id = subject;
    m.condition = label == 1 ? dsp::Condition::Noisy : dsp::Condition::Clean;
    m.n_channels = dsp::kNumChannels;
    m.n_cols = w;
    m.data.resize(static_cast<size_t>(m.n_channels) * w);
    Rng rng(seed);
    const float shift = label == 1 ? 0.8f : -0.8f;
    for (auto& v : m.data) v = static_cast<float>(rng.normal()) * 0.3f + shift;
    m.subband_lengths = {w};
    return m;
}

data::SubjectDataset toy_task(int subject, int per_class, uint64_t seed, int w) {
    data::SubjectDataset s;
    s.subject_id = subject;
    for (int label = 0; label < 2; ++label)
        for (int i = 0; i < per_class; ++i) {
            data::EpochRecord r;
            r.subject_id = subject;
            r.label = label;
            r.is_map = true;
            r.map = labeled_map(Rng::derive(seed, label, i), w, label, subject);
            r.condition = r.map.condition;
            s.records.push_back(std::move(r));
        }
    return s;
}

}  // namespace

TEST_CASE("ssl pretraining reduces reconstruction loss and is deterministic") {
    auto cfg = tiny_cfg();
    std::vector<dsp::InputMap> maps;
    for (int i = 0; i < 8; ++i) maps.push_back(labeled_map(100 + i, cfg.in_w, i % 2, 1));

    TrainBudget budget{6, 4, 1e-3};
    model::MaskSpec mask{0.25, 4, 0};
    auto a = ssl_pretrain(maps, cfg, mask, budget, 55);
    REQUIRE(a.loss_per_epoch.size() == 6);
    CHECK(a.loss_per_epoch.back() < a.loss_per_epoch.front());

    auto b = ssl_pretrain(maps, cfg, mask, budget, 55);
    CHECK(a.encoder.bitwise_equal(b.encoder));
    auto c = ssl_pretrain(maps, cfg, mask, budget, 56);
    CHECK_FALSE(a.encoder.bitwise_equal(c.encoder));
}

TEST_CASE("masked-only loss equals direct masked summation") {
    auto map = labeled_map(7, 32, 0, 1);
    model::MaskSpec spec{0.3, 4, 9};
    auto masked = model::mask_input(map, spec);

    auto pred = model::input_tensor(map);       // pretend reconstruction
    auto target = model::input_tensor(masked.masked);
    auto loss = tc::mse_loss_masked(nullptr, pred, target, masked.cell_mask);

    double direct = 0.0;
    int64_t n = 0;
    for (size_t i = 0; i < map.data.size(); ++i)
        if (masked.cell_mask[i]) {
            const double d = map.data[i] - masked.masked.data[i];
            direct += d * d;
            ++n;
        }
    REQUIRE(n > 0);
    CHECK((*loss.data)[0] == doctest::Approx(direct / n).epsilon(1e-5));
}

TEST_CASE("ssl requires unlabeled input") {
    auto cfg = tiny_cfg();
    model::MaskSpec mask{0.25, 4, 0};
    CHECK_THROWS_AS(ssl_pretrain({}, cfg, mask, TrainBudget{1, 4, 1e-4}, 1), EfnError);
}

TEST_CASE("il training learns the toy separation and is deterministic") {
    auto cfg = tiny_cfg();
    data::TaskSequence tasks;
    for (int s = 1; s <= 3; ++s) tasks.push_back(toy_task(s, 6, 200 + s, cfg.in_w));

    TrainBudget budget{4, 4, 1e-3};
    data::ReplayBuffer replay(10, 5);
    auto res = il_train(tasks, nullptr, cfg, replay, 1.0, budget, 77);

    // replay buffer now holds samples of every task
    for (int s = 1; s <= 3; ++s) CHECK(replay.count_for_subject(s) > 0);

    // the learned model separates held-out toy data
    int correct = 0, total = 0;
    for (int i = 0; i < 20; ++i) {
        const int label = i % 2;
        auto m = labeled_map(900 + i, cfg.in_w, label, 9);
        const double p = model::predict_prob(res.encoder, res.classifier, cfg, m);
        correct += ((p >= 0.5) == (label == 1)) ? 1 : 0;
        ++total;
    }
    CHECK(static_cast<double>(correct) / total >= 0.9);

    data::ReplayBuffer replay2(10, 5);
    auto res2 = il_train(tasks, nullptr, cfg, replay2, 1.0, budget, 77);
    CHECK(res.encoder.bitwise_equal(res2.encoder));
    CHECK(res.classifier.bitwise_equal(res2.classifier));
}

TEST_CASE("at t = 1 the replay term contributes nothing") {
    auto cfg = tiny_cfg();
    data::TaskSequence one{toy_task(1, 4, 300, cfg.in_w)};
    TrainBudget budget{2, 4, 1e-3};

    data::ReplayBuffer ra(10, 5), rb(10, 5);
    auto with_replay = il_train(one, nullptr, cfg, ra, 1.0, budget, 3);
    auto lambda_zero = il_train(one, nullptr, cfg, rb, 0.0, budget, 3);
    CHECK(with_replay.encoder.bitwise_equal(lambda_zero.encoder));
    CHECK(with_replay.classifier.bitwise_equal(lambda_zero.classifier));
}

TEST_CASE("phase-1 init is preserved exactly at step 0") {
    auto cfg = tiny_cfg();
    auto theta = model::init_encoder(cfg, 123);
    data::TaskSequence tasks{toy_task(1, 4, 310, cfg.in_w)};
    data::ReplayBuffer replay(10, 5);
    // zero epochs: il_train must return theta unchanged
    auto res = il_train(tasks, &theta, cfg, replay, 1.0, TrainBudget{0, 4, 1e-3}, 3);
    CHECK(res.encoder.bitwise_equal(theta));
}

TEST_CASE("finetune on an empty split returns the init bitwise") {
    auto cfg = tiny_cfg();
    auto enc = model::init_encoder(cfg, 61);
    auto cls = model::init_classifier(cfg, 62);
    auto res = finetune({}, enc, cls, cfg, TrainBudget{5, 4, 1e-3}, 9);
    CHECK(res.encoder.bitwise_equal(enc));
    CHECK(res.classifier.bitwise_equal(cls));
}

TEST_CASE("finetune reduces training loss and is deterministic") {
    auto cfg = tiny_cfg();
    auto task = toy_task(1, 8, 400, cfg.in_w);
    auto enc = model::init_encoder(cfg, 71);
    auto cls = model::init_classifier(cfg, 72);

    const double before = supervised_loss(task.records, enc, cls, cfg);
    auto res = finetune(task.records, enc, cls, cfg, TrainBudget{8, 4, 1e-3}, 13);
    const double after = supervised_loss(task.records, res.encoder, res.classifier, cfg);
    CHECK(after < before);

    auto res2 = finetune(task.records, enc, cls, cfg, TrainBudget{8, 4, 1e-3}, 13);
    CHECK(res.encoder.bitwise_equal(res2.encoder));

    // fine-tuning must not mutate the init weights
    CHECK(model::init_encoder(cfg, 71).bitwise_equal(enc));
    CHECK(model::init_classifier(cfg, 72).bitwise_equal(cls));
}
