#include "core/train.hpp"

#include <cmath>

#include "core/rng.hpp"

namespace efn::train {

namespace {

struct Labeled {
    const dsp::InputMap* map;
    int label;
};

std::vector<Labeled> labeled_maps(const std::vector<data::EpochRecord>& records) {
    std::vector<Labeled> out;
    for (const auto& r : records) {
        require(r.is_map, "training: records must carry input maps (run preprocess first)");
        if (r.labeled()) out.push_back({&r.map, r.label});
    }
    return out;
}

void check_loss(double loss, const char* phase, uint64_t seed, int64_t step) {
    if (!std::isfinite(loss))
        fail(std::string(phase) + ": loss diverged (seed " + std::to_string(seed) +
             ", step " + std::to_string(step) + ")");
}

}  // namespace

SslResult ssl_pretrain(const std::vector<dsp::InputMap>& unlabeled,
                       const model::ModelConfig& cfg, const model::MaskSpec& mask,
                       const TrainBudget& budget, uint64_t seed,
                       bool masked_cells_only) {
    require(!unlabeled.empty(), "ssl_pretrain: empty unlabeled set");
    tc::init_backend();

    tc::ParamSet params;
    {
        tc::ParamSet enc = model::init_encoder(cfg, seed);
        tc::ParamSet dec = model::init_decoder(cfg, seed);
        params.adopt("", enc);
        params.adopt("", dec);
    }
    tc::Adam opt(budget.lr);

    SslResult result;
    std::vector<size_t> order(unlabeled.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    int64_t step = 0;
    for (int epoch = 0; epoch < budget.epochs; ++epoch) {
        Rng shuffler(Rng::derive(seed, 0x551, static_cast<uint64_t>(epoch)));
        shuffler.shuffle(order);
        double epoch_loss = 0.0;
        int64_t n_batches = 0;
        for (size_t b = 0; b < order.size(); b += budget.batch_size) {
            const size_t e = std::min(order.size(), b + budget.batch_size);
            tc::Tape tape;
            tc::Tensor total;
            for (size_t i = b; i < e; ++i) {
                const dsp::InputMap& orig = unlabeled[order[i]];
                model::MaskSpec ms = mask;
                ms.seed = Rng::derive(seed, 0xA5C, (static_cast<uint64_t>(epoch) << 32) |
                                                       order[i]);
                const auto masked = model::mask_input(orig, ms);
                tc::Tensor x = model::input_tensor(masked.masked);
                tc::Tensor target = model::input_tensor(orig);
                tc::Tensor f = model::forward_encoder(&tape, x, params, cfg);
                tc::Tensor rec = model::forward_decoder(&tape, f, params, cfg);
                tc::Tensor loss =
                    masked_cells_only
                        ? tc::mse_loss_masked(&tape, rec, target, masked.cell_mask)
                        : tc::mse_loss(&tape, rec, target);
                total = (i == b) ? loss : tc::add(&tape, total, loss);
            }
            total = tc::scale(&tape, total, 1.0f / static_cast<float>(e - b));
            check_loss(total.ptr()[0], "ssl_pretrain", seed, step);
            epoch_loss += total.ptr()[0];
            ++n_batches;
            tape.backward(total);
            opt.step(params);
            ++step;
        }
        result.loss_per_epoch.push_back(epoch_loss / static_cast<double>(n_batches));
    }

    result.encoder = model::extract_prefixed(params, "enc.");
    return result;
}

namespace {

// builds the summed BCE term for a batch of samples on the given tape
tc::Tensor batch_bce(tc::Tape& tape, const std::vector<Labeled>& batch,
                     tc::ParamSet& params, const model::ModelConfig& cfg) {
    tc::Tensor total;
    for (size_t i = 0; i < batch.size(); ++i) {
        tc::Tensor x = model::input_tensor(*batch[i].map);
        tc::Tensor f = model::forward_encoder(&tape, x, params, cfg);
        tc::Tensor p = model::forward_classifier(&tape, f, params, cfg);
        tc::Tensor loss = tc::bce_loss(&tape, p, batch[i].label);
        total = (i == 0) ? loss : tc::add(&tape, total, loss);
    }
    return tc::scale(&tape, total, 1.0f / static_cast<float>(batch.size()));
}

}  // namespace

IlResult il_train(const data::TaskSequence& tasks, const tc::ParamSet* init_encoder,
                  const model::ModelConfig& cfg, data::ReplayBuffer& replay,
                  double lambda, const TrainBudget& budget, uint64_t seed) {
    require(!tasks.empty(), "il_train: empty task sequence");
    tc::init_backend();

    tc::ParamSet params;
    {
        tc::ParamSet enc = init_encoder
                               ? model::extract_prefixed(*init_encoder, "enc.")
                               : model::init_encoder(cfg, seed);
        require(enc.size() > 0, "il_train: init encoder has no enc. parameters");
        tc::ParamSet cls = model::init_classifier(cfg, seed);
        params.adopt("", enc);
        params.adopt("", cls);
    }
    tc::Adam opt(budget.lr);

    int64_t step = 0;
    for (size_t t = 0; t < tasks.size(); ++t) {
        const auto samples = labeled_maps(tasks[t].records);
        require(!samples.empty(), "il_train: task without labeled samples (subject " +
                                      std::to_string(tasks[t].subject_id) + ")");
        std::vector<size_t> order(samples.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;

        for (int epoch = 0; epoch < budget.epochs; ++epoch) {
            Rng shuffler(Rng::derive(seed, t + 1, static_cast<uint64_t>(epoch)));
            shuffler.shuffle(order);
            for (size_t b = 0; b < order.size(); b += budget.batch_size) {
                const size_t e = std::min(order.size(), b + budget.batch_size);
                std::vector<Labeled> batch;
                for (size_t i = b; i < e; ++i) batch.push_back(samples[order[i]]);

                tc::Tape tape;
                tc::Tensor loss = batch_bce(tape, batch, params, cfg);

                // replay term, absent for the first task
                std::vector<data::ReplaySample> drawn;
                if (lambda != 0.0 && replay.size() > 0) {
                    drawn = replay.sample(
                        static_cast<int>(batch.size()),
                        Rng::derive(seed, 0x3e91a7, static_cast<uint64_t>(step)));
                    std::vector<Labeled> rbatch;
                    for (const auto& s : drawn) rbatch.push_back({&s.map, s.label});
                    tc::Tensor rloss = batch_bce(tape, rbatch, params, cfg);
                    loss = tc::add(&tape, loss,
                                   tc::scale(&tape, rloss, static_cast<float>(lambda)));
                }
                check_loss(loss.ptr()[0], "il_train", seed, step);
                tape.backward(loss);
                opt.step(params);
                ++step;
            }
        }

        std::vector<data::ReplaySample> task_samples;
        for (const auto& s : samples)
            task_samples.push_back({*s.map, s.label, tasks[t].subject_id});
        replay.add_task(task_samples, tasks[t].subject_id);
    }

    IlResult out;
    out.encoder = model::extract_prefixed(params, "enc.");
    out.classifier = model::extract_prefixed(params, "cls.");
    return out;
}

IlResult finetune(const std::vector<data::EpochRecord>& train_split,
                  const tc::ParamSet& enc_init, const tc::ParamSet& cls_init,
                  const model::ModelConfig& cfg, const TrainBudget& budget,
                  uint64_t seed) {
    tc::init_backend();
    IlResult out;
    out.encoder = model::extract_prefixed(enc_init, "enc.");
    out.classifier = model::extract_prefixed(cls_init, "cls.");
    const auto samples = labeled_maps(train_split);
    if (samples.empty()) return out;  // ratio 0.0: subject-independent inference

    tc::ParamSet params;
    params.adopt("", out.encoder);
    params.adopt("", out.classifier);
    tc::Adam opt(budget.lr);

    std::vector<size_t> order(samples.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    int64_t step = 0;
    for (int epoch = 0; epoch < budget.epochs; ++epoch) {
        Rng shuffler(Rng::derive(seed, 0xF7, static_cast<uint64_t>(epoch)));
        shuffler.shuffle(order);
        for (size_t b = 0; b < order.size(); b += budget.batch_size) {
            const size_t e = std::min(order.size(), b + budget.batch_size);
            std::vector<Labeled> batch;
            for (size_t i = b; i < e; ++i) batch.push_back(samples[order[i]]);
            tc::Tape tape;
            tc::Tensor loss = batch_bce(tape, batch, params, cfg);
            check_loss(loss.ptr()[0], "finetune", seed, step);
            tape.backward(loss);
            opt.step(params);
            ++step;
        }
    }
    // params shares storage with out.encoder / out.classifier
    return out;
}

double supervised_loss(const std::vector<data::EpochRecord>& records,
                       tc::ParamSet& enc, tc::ParamSet& cls,
                       const model::ModelConfig& cfg) {
    const auto samples = labeled_maps(records);
    require(!samples.empty(), "supervised_loss: no labeled samples");
    double acc = 0.0;
    for (const auto& s : samples) {
        const double p = model::predict_prob(enc, cls, cfg, *s.map);
        const double pc = std::min(1.0 - 1e-7, std::max(1e-7, p));
        acc += s.label ? -std::log(pc) : -std::log(1.0 - pc);
    }
    return acc / static_cast<double>(samples.size());
}

}  // namespace efn::train
