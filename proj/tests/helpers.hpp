#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "core/nn.hpp"
#include "core/rng.hpp"

namespace efn::test {

// loss_fn(tape) must rebuild the forward pass from the live parameter values
using LossFn = std::function<tc::Tensor(tc::Tape*)>;

inline double loss_value(const LossFn& fn) {
    tc::Tensor l = fn(nullptr);
    return (*l.data)[0];
}

// Worst element-wise error |fd - ad| / max(1, |fd|, |ad|) over all
// parameters. Elements where the two-step-size FD estimates disagree are
// skipped: there the loss is locally non-linear (a relu kink or pool argmax
// tie sits inside the stencil), so the central difference itself is invalid.
inline double fd_rel_err(tc::ParamSet& params, const LossFn& fn, double h = 1e-3) {
    tc::Tape tape;
    tc::Tensor loss = fn(&tape);
    params.zero_grads();
    tape.backward(loss);

    auto probe = [&](tc::Tensor& p, size_t i, double step) {
        const float keep = (*p.data)[i];
        (*p.data)[i] = keep + static_cast<float>(step);
        const double up = loss_value(fn);
        (*p.data)[i] = keep - static_cast<float>(step);
        const double down = loss_value(fn);
        (*p.data)[i] = keep;
        return (up - down) / (2.0 * step);
    };

    double worst = 0.0;
    for (auto& [name, p] : params) {
        for (size_t i = 0; i < p.data->size(); ++i) {
            const double fd1 = probe(p, i, h);
            const double fd2 = probe(p, i, 0.5 * h);
            if (std::fabs(fd1 - fd2) > 1e-3 * std::max(1.0, std::fabs(fd1)))
                continue;  // FD untrustworthy at this point
            const double ad = (*p.grad)[i];
            const double err =
                std::fabs(fd2 - ad) / std::max({1.0, std::fabs(fd2), std::fabs(ad)});
            worst = std::max(worst, err);
        }
    }
    return worst;
}

inline tc::Tensor random_tensor(Rng& rng, std::vector<int> shape, double scale = 1.0) {
    std::vector<float> v(static_cast<size_t>(tc::Tensor::numel_of(shape)));
    for (auto& x : v) x = static_cast<float>(rng.normal() * scale);
    return tc::Tensor::from(std::move(shape), std::move(v));
}

// A miniature random conv/pool/dense/sigmoid/BCE network (optionally with the
// decoder-style upsample+conv reconstruction head) for gradient checking.
// Returns the loss builder; parameters land in `params`.
inline LossFn random_mini_net(Rng& rng, tc::ParamSet& params, bool decoder_path) {
    const int cin = 1 + static_cast<int>(rng.below(2));
    const int h = 2 + static_cast<int>(rng.below(3));
    const int w = 4 + static_cast<int>(rng.below(4));
    const int cout = 1 + static_cast<int>(rng.below(3));
    const int kh = 1 + 2 * static_cast<int>(rng.below(2));   // 1 or 3
    const int kw = 1 + 2 * static_cast<int>(rng.below(2));

    auto x = random_tensor(rng, {cin, h, w}, 0.5);
    params.add("x", x);
    params.add("w0", random_tensor(rng, {cout, cin, kh, kw}, 0.5));
    params.add("b0", random_tensor(rng, {cout}, 0.2));

    const int ph = kh / 2, pw = kw / 2;
    const int pooled_w = w / 2;

    if (decoder_path) {
        params.add("wd", random_tensor(rng, {cin, cout, kh, kw}, 0.5));
        params.add("bd", random_tensor(rng, {cin}, 0.2));
        auto target = random_tensor(rng, {cin, h, w}, 0.5);
        return [=, &params](tc::Tape* tape) mutable {
            auto& xv = params.at("x");
            auto c0 = tc::conv2d(tape, xv, params.at("w0"), params.at("b0"), 1, 1, ph, pw);
            auto r0 = tc::relu(tape, c0);
            auto p0 = tc::max_pool2d(tape, r0, 1, 2);
            auto up = tc::upsample_w(tape, p0, w);
            auto rec = tc::conv2d(tape, up, params.at("wd"), params.at("bd"), 1, 1, ph, pw);
            return tc::mse_loss(tape, rec, target);
        };
    }

    const int feat = cout * h * pooled_w;
    const int hidden = 2 + static_cast<int>(rng.below(3));
    params.add("w1", random_tensor(rng, {hidden, feat}, 0.3));
    params.add("b1", random_tensor(rng, {hidden}, 0.2));
    params.add("w2", random_tensor(rng, {1, hidden}, 0.3));
    params.add("b2", random_tensor(rng, {1}, 0.2));
    const int label = static_cast<int>(rng.below(2));

    return [=, &params](tc::Tape* tape) mutable {
        auto& xv = params.at("x");
        auto c0 = tc::conv2d(tape, xv, params.at("w0"), params.at("b0"), 1, 1, ph, pw);
        auto r0 = tc::relu(tape, c0);
        auto p0 = tc::max_pool2d(tape, r0, 1, 2);
        auto flat = tc::reshape(tape, p0, {feat});
        auto d1 = tc::dense(tape, flat, params.at("w1"), params.at("b1"));
        auto r1 = tc::relu(tape, d1);
        auto d2 = tc::dense(tape, r1, params.at("w2"), params.at("b2"));
        auto prob = tc::sigmoid(tape, d2);
        return tc::bce_loss(tape, prob, label);
    };
}

}  // namespace efn::test
