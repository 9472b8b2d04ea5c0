#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "core/adam.hpp"
#include "core/nn.hpp"
#include "helpers.hpp"

using namespace efn;
using namespace efn::tc;
using efn::test::fd_rel_err;
using efn::test::random_mini_net;
using efn::test::random_tensor;

namespace {
struct BackendInit {
    BackendInit() { init_backend(); }
} backend_init;
}  // namespace

TEST_CASE("conv2d identity kernel") {
    auto x = Tensor::from({1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    auto w = Tensor::from({1, 1, 1, 1}, {1.0f});
    auto b = Tensor::from({1}, {0.0f});
    auto y = conv2d(nullptr, x, w, b);
    REQUIRE(y.shape == std::vector<int>({1, 3, 3}));
    for (int i = 0; i < 9; ++i) CHECK((*y.data)[i] == doctest::Approx((*x.data)[i]));
}

TEST_CASE("conv2d summation case") {
    auto x = Tensor::from({1, 2, 2}, {1, 1, 1, 1});
    auto w = Tensor::from({1, 1, 2, 2}, {1, 1, 1, 1});
    auto b = Tensor::from({1}, {0.0f});
    auto y = conv2d(nullptr, x, w, b);
    REQUIRE(y.numel() == 1);
    CHECK((*y.data)[0] == doctest::Approx(4.0));
}

TEST_CASE("conv2d kernel gradient vs finite differences") {
    Rng rng(11);
    ParamSet params;
    auto x = random_tensor(rng, {2, 5, 5}, 0.5);
    params.add("w", random_tensor(rng, {3, 2, 3, 3}, 0.5));
    params.add("b", random_tensor(rng, {3}, 0.2));
    auto target = random_tensor(rng, {3, 3, 3}, 0.5);
    auto loss_fn = [&](Tape* tape) {
        auto y = conv2d(tape, x, params.at("w"), params.at("b"));
        return mse_loss(tape, y, target);
    };
    CHECK(fd_rel_err(params, loss_fn, 1e-3) <= 1e-3);
}

TEST_CASE("dense basics") {
    auto w = Tensor::from({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    auto b = Tensor::from({3}, {0, 0, 0});
    auto x = Tensor::from({3}, {1, 2, 3});
    auto y = dense(nullptr, x, w, b);
    CHECK((*y.data)[0] == doctest::Approx(1));
    CHECK((*y.data)[1] == doctest::Approx(2));
    CHECK((*y.data)[2] == doctest::Approx(3));

    auto wz = Tensor::from({1, 3}, {0, 0, 0});
    auto bz = Tensor::from({1}, {0.5f});
    auto yz = dense(nullptr, x, wz, bz);
    CHECK((*yz.data)[0] == doctest::Approx(0.5));
}

TEST_CASE("dense gradient vs finite differences") {
    Rng rng(12);
    ParamSet params;
    auto x = random_tensor(rng, {4}, 0.5);
    params.add("w", random_tensor(rng, {2, 4}, 0.5));
    params.add("b", random_tensor(rng, {2}, 0.2));
    auto target = random_tensor(rng, {2}, 0.5);
    auto loss_fn = [&](Tape* tape) {
        auto y = dense(tape, x, params.at("w"), params.at("b"));
        return mse_loss(tape, y, target);
    };
    CHECK(fd_rel_err(params, loss_fn, 1e-3) <= 1e-3);
}

TEST_CASE("activations and pooling") {
    auto x = Tensor::from({3}, {-2.0f, 0.0f, 3.0f});
    auto r = relu(nullptr, x);
    CHECK((*r.data)[0] == 0.0f);
    CHECK((*r.data)[2] == 3.0f);

    auto s = sigmoid(nullptr, Tensor::from({1}, {0.0f}));
    CHECK((*s.data)[0] == doctest::Approx(0.5));

    auto p = max_pool2d(nullptr, Tensor::from({1, 2, 2}, {1, 2, 3, 4}), 2, 2);
    REQUIRE(p.numel() == 1);
    CHECK((*p.data)[0] == doctest::Approx(4.0));
}

TEST_CASE("sigmoid output strictly inside (0,1)") {
    auto x = Tensor::from({3}, {-40.0f, 0.0f, 40.0f});
    auto s = sigmoid(nullptr, x);
    for (int i = 0; i < 3; ++i) {
        CHECK((*s.data)[i] > 0.0f);
        CHECK((*s.data)[i] < 1.0f);
    }
}

TEST_CASE("mse_loss values and gradient") {
    auto a = Tensor::from({2}, {1, 2});
    CHECK((*mse_loss(nullptr, a, a).data)[0] == doctest::Approx(0.0));

    auto p = Tensor::from({2}, {0, 0});
    auto t = Tensor::from({2}, {1, 1});
    CHECK((*mse_loss(nullptr, p, t).data)[0] == doctest::Approx(1.0));

    // analytic gradient 2(pred-target)/n
    Rng rng(13);
    ParamSet params;
    params.add("p", random_tensor(rng, {5}, 1.0));
    auto target = random_tensor(rng, {5}, 1.0);
    Tape tape;
    auto loss = mse_loss(&tape, params.at("p"), target);
    tape.backward(loss);
    auto& pt = params.at("p");
    for (int i = 0; i < 5; ++i) {
        const double expected = 2.0 * ((*pt.data)[i] - (*target.data)[i]) / 5.0;
        CHECK((*pt.grad)[i] == doctest::Approx(expected).epsilon(1e-4));
    }
}

TEST_CASE("bce_loss values") {
    auto half = Tensor::from({1}, {0.5f});
    CHECK((*bce_loss(nullptr, half, 0).data)[0] == doctest::Approx(std::log(2.0)).epsilon(1e-4));
    CHECK((*bce_loss(nullptr, half, 1).data)[0] == doctest::Approx(std::log(2.0)).epsilon(1e-4));

    auto one = Tensor::from({1}, {1.0f});
    CHECK((*bce_loss(nullptr, one, 1).data)[0] == doctest::Approx(0.0).epsilon(1e-4));

    auto p9 = Tensor::from({1}, {0.9f});
    CHECK((*bce_loss(nullptr, p9, 0).data)[0] ==
          doctest::Approx(-std::log(0.1)).epsilon(1e-4));
}

TEST_CASE("backward basics") {
    ParamSet params;
    params.add("x", Tensor::from({3}, {1, 2, 3}));
    Tape tape;
    auto loss = sum(&tape, params.at("x"));
    tape.backward(loss);
    for (int i = 0; i < 3; ++i) CHECK((*params.at("x").grad)[i] == doctest::Approx(1.0));

    ParamSet p2;
    p2.add("x", Tensor::from({1}, {2.0f}));
    Tape t2;
    auto zero = Tensor::from({1}, {0.0f});
    auto l2 = mse_loss(&t2, p2.at("x"), zero);
    t2.backward(l2);
    CHECK((*p2.at("x").grad)[0] == doctest::Approx(4.0).epsilon(1e-4));
}

TEST_CASE("backward rejects non-scalar loss") {
    ParamSet params;
    params.add("x", Tensor::from({2}, {1, 2}));
    Tape tape;
    auto y = relu(&tape, params.at("x"));
    CHECK_THROWS_AS(tape.backward(y), EfnError);
}

TEST_CASE("composed network full gradient check") {
    Rng rng(14);
    for (int rep = 0; rep < 10; ++rep) {
        ParamSet params;
        auto fn = random_mini_net(rng, params, rep % 3 == 2);
        CHECK(fd_rel_err(params, fn, 1e-3) <= 1e-3);
    }
}

TEST_CASE("output shapes match closed forms") {
    Rng rng(15);
    for (int rep = 0; rep < 50; ++rep) {
        const int cin = 1 + static_cast<int>(rng.below(3));
        const int h = 3 + static_cast<int>(rng.below(5));
        const int w = 3 + static_cast<int>(rng.below(8));
        const int cout = 1 + static_cast<int>(rng.below(4));
        const int kh = 1 + static_cast<int>(rng.below(std::min(h, 3)));
        const int kw = 1 + static_cast<int>(rng.below(std::min(w, 3)));
        auto x = test::random_tensor(rng, {cin, h, w});
        auto wt = test::random_tensor(rng, {cout, cin, kh, kw});
        auto b = test::random_tensor(rng, {cout});
        auto y = conv2d(nullptr, x, wt, b);
        CHECK(y.shape == std::vector<int>({cout, h - kh + 1, w - kw + 1}));
    }
}

TEST_CASE("adam first step magnitude and zero-grad behavior") {
    ParamSet params;
    params.add("w", Tensor::from({1}, {1.0f}));
    Adam opt(1e-2);
    (*params.at("w").grad)[0] = 5.0f;  // |g| >> eps
    opt.step(params);
    const double delta = 1.0 - (*params.at("w").data)[0];
    CHECK(delta >= 0.99e-2);
    CHECK(delta <= 1.0001e-2);
    // grads were zeroed by step; a second step with g = 0 barely moves w
    // (only the decayed first-step momentum remains)
    const float before = (*params.at("w").data)[0];
    opt.step(params);
    CHECK(std::fabs((*params.at("w").data)[0] - before) <= 1.1e-2);
}

TEST_CASE("adam errors on missing grad") {
    ParamSet params;
    params.add("w", Tensor::from({1}, {1.0f}));
    params.at("w").grad.reset();
    Adam opt(1e-2);
    CHECK_THROWS_AS(opt.step(params), EfnError);
}

TEST_CASE("adam converges on (w-3)^2") {
    ParamSet params;
    params.add("w", Tensor::from({1}, {0.0f}));
    Adam opt(0.1);
    for (int i = 0; i < 200; ++i) {
        auto& w = params.at("w");
        (*w.grad)[0] = 2.0f * ((*w.data)[0] - 3.0f);
        opt.step(params);
    }
    CHECK(std::fabs((*params.at("w").data)[0] - 3.0f) < 0.05);
}

TEST_CASE("paramset bitwise equality and adopt") {
    ParamSet a, b;
    a.add("w", Tensor::from({2}, {1, 2}));
    b.add("w", Tensor::from({2}, {1, 2}));
    CHECK(a.bitwise_equal(b));
    (*b.at("w").data)[0] = 1.5f;
    CHECK_FALSE(a.bitwise_equal(b));

    ParamSet c;
    c.adopt("pre.", a);
    CHECK(c.has("pre.w"));
    CHECK_THROWS_AS(c.adopt("pre.", a), EfnError);  // duplicate
}
