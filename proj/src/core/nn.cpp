#include "core/nn.hpp"

#include <cblas.h>

#include <cmath>
#include <cstring>

extern "C" void openblas_set_num_threads(int);

namespace efn::tc {

void init_backend() {
    static bool done = false;
    if (!done) {
        openblas_set_num_threads(1);
        done = true;
    }
}

namespace {

bool track(Tape* tape, const Tensor& t) { return tape && t.requires_grad; }

Tensor make_out(std::vector<int> shape, bool requires_grad) {
    return Tensor(std::move(shape), 0.0f, requires_grad);
}

// x [Cin,H,W] -> col [Cin*kh*kw, Ho*Wo]
void im2col(const float* x, int cin, int h, int w, int kh, int kw, int sh, int sw,
            int ph, int pw, int ho, int wo, float* col) {
    const int n = ho * wo;
    for (int c = 0; c < cin; ++c) {
        for (int ki = 0; ki < kh; ++ki) {
            for (int kj = 0; kj < kw; ++kj) {
                float* row = col + (static_cast<size_t>(c) * kh * kw + ki * kw + kj) * n;
                for (int oi = 0; oi < ho; ++oi) {
                    const int ii = oi * sh - ph + ki;
                    float* dst = row + static_cast<size_t>(oi) * wo;
                    if (ii < 0 || ii >= h) {
                        std::memset(dst, 0, sizeof(float) * wo);
                        continue;
                    }
                    const float* src = x + (static_cast<size_t>(c) * h + ii) * w;
                    for (int oj = 0; oj < wo; ++oj) {
                        const int jj = oj * sw - pw + kj;
                        dst[oj] = (jj < 0 || jj >= w) ? 0.0f : src[jj];
                    }
                }
            }
        }
    }
}

// scatter-add of col gradients back into x layout
void col2im(const float* col, int cin, int h, int w, int kh, int kw, int sh, int sw,
            int ph, int pw, int ho, int wo, float* gx) {
    const int n = ho * wo;
    for (int c = 0; c < cin; ++c) {
        for (int ki = 0; ki < kh; ++ki) {
            for (int kj = 0; kj < kw; ++kj) {
                const float* row = col + (static_cast<size_t>(c) * kh * kw + ki * kw + kj) * n;
                for (int oi = 0; oi < ho; ++oi) {
                    const int ii = oi * sh - ph + ki;
                    if (ii < 0 || ii >= h) continue;
                    float* dst = gx + (static_cast<size_t>(c) * h + ii) * w;
                    const float* src = row + static_cast<size_t>(oi) * wo;
                    for (int oj = 0; oj < wo; ++oj) {
                        const int jj = oj * sw - pw + kj;
                        if (jj >= 0 && jj < w) dst[jj] += src[oj];
                    }
                }
            }
        }
    }
}

}  // namespace

Tensor conv2d(Tape* tape, const Tensor& x, const Tensor& w, const Tensor& b,
              int sh, int sw, int ph, int pw) {
    require(x.shape.size() == 3, "conv2d: input must be [Cin,H,W]");
    require(w.shape.size() == 4, "conv2d: kernel must be [Cout,Cin,kH,kW]");
    const int cin = x.shape[0], h = x.shape[1], wd = x.shape[2];
    const int cout = w.shape[0], kh = w.shape[2], kw = w.shape[3];
    require(w.shape[1] == cin, "conv2d: kernel Cin mismatch");
    require(b.shape.size() == 1 && b.shape[0] == cout, "conv2d: bias shape mismatch");
    const int ho = (h + 2 * ph - kh) / sh + 1;
    const int wo = (wd + 2 * pw - kw) / sw + 1;
    require(h + 2 * ph >= kh && wd + 2 * pw >= kw && ho > 0 && wo > 0,
            "conv2d: empty output window");

    const int k = cin * kh * kw;
    const int n = ho * wo;
    std::vector<float> col(static_cast<size_t>(k) * n);
    im2col(x.ptr(), cin, h, wd, kh, kw, sh, sw, ph, pw, ho, wo, col.data());

    bool rg = track(tape, x) || track(tape, w) || track(tape, b);
    Tensor out = make_out({cout, ho, wo}, rg);
    for (int c = 0; c < cout; ++c) {
        float* o = out.ptr() + static_cast<size_t>(c) * n;
        const float bv = b.ptr()[c];
        for (int i = 0; i < n; ++i) o[i] = bv;
    }
    cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, cout, n, k, 1.0f,
                w.ptr(), k, col.data(), n, 1.0f, out.ptr(), n);

    if (rg) {
        Tensor xi = x, wi = w, bi = b, oi = out;
        tape->record([=]() mutable {
            const float* go = oi.grad->data();
            if (bi.requires_grad) {
                bi.ensure_grad();
                for (int c = 0; c < cout; ++c) {
                    double s = 0.0;
                    const float* g = go + static_cast<size_t>(c) * n;
                    for (int i = 0; i < n; ++i) s += g[i];
                    (*bi.grad)[c] += static_cast<float>(s);
                }
            }
            // im2col is recomputed here instead of stored across the tape
            std::vector<float> colb(static_cast<size_t>(k) * n);
            im2col(xi.ptr(), cin, h, wd, kh, kw, sh, sw, ph, pw, ho, wo, colb.data());
            if (wi.requires_grad) {
                wi.ensure_grad();
                cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasTrans, cout, k, n, 1.0f,
                            go, n, colb.data(), n, 1.0f, wi.grad->data(), k);
            }
            if (xi.requires_grad) {
                xi.ensure_grad();
                std::vector<float> dcol(static_cast<size_t>(k) * n);
                cblas_sgemm(CblasRowMajor, CblasTrans, CblasNoTrans, k, n, cout, 1.0f,
                            wi.ptr(), k, go, n, 0.0f, dcol.data(), n);
                col2im(dcol.data(), cin, h, wd, kh, kw, sh, sw, ph, pw, ho, wo,
                       xi.grad->data());
            }
        });
    }
    return out;
}

Tensor dense(Tape* tape, const Tensor& x, const Tensor& w, const Tensor& b) {
    require(x.shape.size() == 1, "dense: input must be rank 1");
    require(w.shape.size() == 2 && w.shape[1] == x.shape[0], "dense: weight shape mismatch");
    const int n = x.shape[0], m = w.shape[0];
    require(b.shape.size() == 1 && b.shape[0] == m, "dense: bias shape mismatch");

    bool rg = track(tape, x) || track(tape, w) || track(tape, b);
    Tensor out = make_out({m}, rg);
    std::memcpy(out.ptr(), b.ptr(), sizeof(float) * m);
    cblas_sgemv(CblasRowMajor, CblasNoTrans, m, n, 1.0f, w.ptr(), n, x.ptr(), 1, 1.0f,
                out.ptr(), 1);

    if (rg) {
        Tensor xi = x, wi = w, bi = b, oi = out;
        tape->record([=]() mutable {
            const float* go = oi.grad->data();
            if (bi.requires_grad) {
                bi.ensure_grad();
                for (int i = 0; i < m; ++i) (*bi.grad)[i] += go[i];
            }
            if (wi.requires_grad) {
                wi.ensure_grad();
                cblas_sger(CblasRowMajor, m, n, 1.0f, go, 1, xi.ptr(), 1,
                           wi.grad->data(), n);
            }
            if (xi.requires_grad) {
                xi.ensure_grad();
                cblas_sgemv(CblasRowMajor, CblasTrans, m, n, 1.0f, wi.ptr(), n, go, 1,
                            1.0f, xi.grad->data(), 1);
            }
        });
    }
    return out;
}

Tensor relu(Tape* tape, const Tensor& x) {
    bool rg = track(tape, x);
    Tensor out = make_out(x.shape, rg);
    const int64_t n = x.numel();
    for (int64_t i = 0; i < n; ++i) out.ptr()[i] = x.ptr()[i] > 0.0f ? x.ptr()[i] : 0.0f;
    if (rg) {
        Tensor xi = x, oi = out;
        tape->record([=]() mutable {
            xi.ensure_grad();
            for (int64_t i = 0; i < n; ++i)
                if (xi.ptr()[i] > 0.0f) (*xi.grad)[i] += (*oi.grad)[i];
        });
    }
    return out;
}

Tensor sigmoid(Tape* tape, const Tensor& x) {
    bool rg = track(tape, x);
    Tensor out = make_out(x.shape, rg);
    const int64_t n = x.numel();
    for (int64_t i = 0; i < n; ++i) {
        double v = 1.0 / (1.0 + std::exp(-static_cast<double>(x.ptr()[i])));
        // keep outputs strictly inside (0,1) after the f32 rounding
        v = std::min(std::max(v, 1e-7), 1.0 - 1.2e-7);
        out.ptr()[i] = static_cast<float>(v);
    }
    if (rg) {
        Tensor xi = x, oi = out;
        tape->record([=]() mutable {
            xi.ensure_grad();
            for (int64_t i = 0; i < n; ++i) {
                const float s = oi.ptr()[i];
                (*xi.grad)[i] += (*oi.grad)[i] * s * (1.0f - s);
            }
        });
    }
    return out;
}

Tensor max_pool2d(Tape* tape, const Tensor& x, int wh, int ww) {
    require(x.shape.size() == 3, "max_pool2d: input must be [C,H,W]");
    const int c = x.shape[0], h = x.shape[1], w = x.shape[2];
    const int ho = h / wh, wo = w / ww;
    require(ho > 0 && wo > 0, "max_pool2d: window larger than input");

    bool rg = track(tape, x);
    Tensor out = make_out({c, ho, wo}, rg);
    auto argmax = std::make_shared<std::vector<int64_t>>(static_cast<size_t>(c) * ho * wo);
    for (int ci = 0; ci < c; ++ci) {
        const float* xp = x.ptr() + static_cast<size_t>(ci) * h * w;
        for (int oi = 0; oi < ho; ++oi) {
            for (int oj = 0; oj < wo; ++oj) {
                int64_t best = (static_cast<int64_t>(oi) * wh) * w + oj * ww;
                float bv = xp[best];
                for (int di = 0; di < wh; ++di) {
                    for (int dj = 0; dj < ww; ++dj) {
                        const int64_t idx = (static_cast<int64_t>(oi * wh + di)) * w + oj * ww + dj;
                        if (xp[idx] > bv) { bv = xp[idx]; best = idx; }
                    }
                }
                const size_t o = (static_cast<size_t>(ci) * ho + oi) * wo + oj;
                out.ptr()[o] = bv;
                (*argmax)[o] = static_cast<int64_t>(ci) * h * w + best;
            }
        }
    }
    if (rg) {
        Tensor xi = x, oi = out;
        tape->record([=]() mutable {
            xi.ensure_grad();
            for (size_t i = 0; i < argmax->size(); ++i)
                (*xi.grad)[(*argmax)[i]] += (*oi.grad)[i];
        });
    }
    return out;
}

Tensor reshape(Tape* tape, const Tensor& x, std::vector<int> shape) {
    require(Tensor::numel_of(shape) == x.numel(), "reshape: element count mismatch");
    bool rg = track(tape, x);
    Tensor out;
    out.shape = std::move(shape);
    out.data = std::make_shared<std::vector<float>>(*x.data);
    out.requires_grad = rg;
    if (rg) out.ensure_grad();
    if (rg) {
        Tensor xi = x, oi = out;
        tape->record([=]() mutable {
            xi.ensure_grad();
            for (size_t i = 0; i < xi.grad->size(); ++i) (*xi.grad)[i] += (*oi.grad)[i];
        });
    }
    return out;
}

Tensor upsample_w(Tape* tape, const Tensor& x, int out_w) {
    require(x.shape.size() == 3, "upsample_w: input must be [C,H,W]");
    require(out_w >= x.shape[2], "upsample_w: target width smaller than input");
    const int c = x.shape[0], h = x.shape[1], w = x.shape[2];
    bool rg = track(tape, x);
    Tensor out = make_out({c, h, out_w}, rg);
    for (int ch = 0; ch < c * h; ++ch) {
        const float* src = x.ptr() + static_cast<size_t>(ch) * w;
        float* dst = out.ptr() + static_cast<size_t>(ch) * out_w;
        for (int j = 0; j < out_w; ++j)
            dst[j] = src[static_cast<int64_t>(j) * w / out_w];
    }
    if (rg) {
        Tensor xi = x, oi = out;
        tape->record([=]() mutable {
            xi.ensure_grad();
            for (int ch = 0; ch < c * h; ++ch) {
                float* g = xi.grad->data() + static_cast<size_t>(ch) * w;
                const float* go = oi.grad->data() + static_cast<size_t>(ch) * out_w;
                for (int j = 0; j < out_w; ++j)
                    g[static_cast<int64_t>(j) * w / out_w] += go[j];
            }
        });
    }
    return out;
}

Tensor add(Tape* tape, const Tensor& a, const Tensor& b) {
    require(a.shape == b.shape, "add: shape mismatch");
    bool rg = track(tape, a) || track(tape, b);
    Tensor out = make_out(a.shape, rg);
    const int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) out.ptr()[i] = a.ptr()[i] + b.ptr()[i];
    if (rg) {
        Tensor ai = a, bi = b, oi = out;
        tape->record([=]() mutable {
            if (ai.requires_grad) {
                ai.ensure_grad();
                for (int64_t i = 0; i < n; ++i) (*ai.grad)[i] += (*oi.grad)[i];
            }
            if (bi.requires_grad) {
                bi.ensure_grad();
                for (int64_t i = 0; i < n; ++i) (*bi.grad)[i] += (*oi.grad)[i];
            }
        });
    }
    return out;
}

Tensor scale(Tape* tape, const Tensor& a, float c) {
    bool rg = track(tape, a);
    Tensor out = make_out(a.shape, rg);
    const int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) out.ptr()[i] = a.ptr()[i] * c;
    if (rg) {
        Tensor ai = a, oi = out;
        tape->record([=]() mutable {
            ai.ensure_grad();
            for (int64_t i = 0; i < n; ++i) (*ai.grad)[i] += (*oi.grad)[i] * c;
        });
    }
    return out;
}

Tensor sum(Tape* tape, const Tensor& x) {
    bool rg = track(tape, x);
    double s = 0.0;
    const int64_t n = x.numel();
    for (int64_t i = 0; i < n; ++i) s += x.ptr()[i];
    Tensor out = make_out({1}, rg);
    out.ptr()[0] = static_cast<float>(s);
    if (rg) {
        Tensor xi = x, oi = out;
        tape->record([=]() mutable {
            xi.ensure_grad();
            const float g = (*oi.grad)[0];
            for (int64_t i = 0; i < n; ++i) (*xi.grad)[i] += g;
        });
    }
    return out;
}

Tensor mse_loss(Tape* tape, const Tensor& pred, const Tensor& target) {
    require(pred.shape == target.shape, "mse_loss: shape mismatch");
    const int64_t n = pred.numel();
    double acc = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(pred.ptr()[i]) - target.ptr()[i];
        acc += d * d;
    }
    bool rg = track(tape, pred);
    Tensor out = make_out({1}, rg);
    out.ptr()[0] = static_cast<float>(acc / static_cast<double>(n));
    out.check_finite("mse_loss");
    if (rg) {
        Tensor pi = pred, ti = target, oi = out;
        tape->record([=]() mutable {
            pi.ensure_grad();
            const float g = (*oi.grad)[0];
            const float inv = 2.0f / static_cast<float>(n);
            for (int64_t i = 0; i < n; ++i)
                (*pi.grad)[i] += g * inv * (pi.ptr()[i] - ti.ptr()[i]);
        });
    }
    return out;
}

Tensor mse_loss_masked(Tape* tape, const Tensor& pred, const Tensor& target,
                       const std::vector<uint8_t>& mask) {
    require(pred.shape == target.shape, "mse_loss_masked: shape mismatch");
    require(mask.size() == static_cast<size_t>(pred.numel()),
            "mse_loss_masked: mask size mismatch");
    int64_t m = 0;
    double acc = 0.0;
    const int64_t n = pred.numel();
    for (int64_t i = 0; i < n; ++i) {
        if (!mask[i]) continue;
        const double d = static_cast<double>(pred.ptr()[i]) - target.ptr()[i];
        acc += d * d;
        ++m;
    }
    require(m > 0, "mse_loss_masked: empty mask");
    bool rg = track(tape, pred);
    Tensor out = make_out({1}, rg);
    out.ptr()[0] = static_cast<float>(acc / static_cast<double>(m));
    out.check_finite("mse_loss_masked");
    if (rg) {
        Tensor pi = pred, ti = target, oi = out;
        auto mk = std::make_shared<std::vector<uint8_t>>(mask);
        const int64_t mm = m;
        tape->record([=]() mutable {
            pi.ensure_grad();
            const float g = (*oi.grad)[0];
            const float inv = 2.0f / static_cast<float>(mm);
            for (int64_t i = 0; i < n; ++i)
                if ((*mk)[i]) (*pi.grad)[i] += g * inv * (pi.ptr()[i] - ti.ptr()[i]);
        });
    }
    return out;
}

Tensor bce_loss(Tape* tape, const Tensor& p, int label) {
    require(p.is_scalar(), "bce_loss: probability must be scalar");
    require(label == 0 || label == 1, "bce_loss: label must be 0 or 1");
    constexpr double kEps = 1e-7;
    const double raw = p.ptr()[0];
    const double pc = std::min(1.0 - kEps, std::max(kEps, raw));
    const double loss = label ? -std::log(pc) : -std::log(1.0 - pc);
    bool rg = track(tape, p);
    Tensor out = make_out({1}, rg);
    out.ptr()[0] = static_cast<float>(loss);
    out.check_finite("bce_loss");
    if (rg) {
        Tensor pi = p, oi = out;
        // differentiate through the clamped value even at the boundary so a
        // saturated upstream sigmoid still receives a recovery gradient
        tape->record([=]() mutable {
            pi.ensure_grad();
            const double d = label ? -1.0 / pc : 1.0 / (1.0 - pc);
            (*pi.grad)[0] += (*oi.grad)[0] * static_cast<float>(d);
        });
    }
    return out;
}

}  // namespace efn::tc
