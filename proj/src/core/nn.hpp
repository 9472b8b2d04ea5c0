#pragma once

#include <cstdint>
#include <vector>

#include "core/tensor.hpp"

namespace efn::tc {

// Set up BLAS for deterministic single-threaded execution. Called once,
// idempotent.
void init_backend();

// 2-D convolution, NCHW without the batch axis: x [Cin,H,W], w [Cout,Cin,kH,kW],
// b [Cout] -> [Cout,Ho,Wo] with Ho = (H + 2*ph - kH)/sh + 1.
Tensor conv2d(Tape* tape, const Tensor& x, const Tensor& w, const Tensor& b,
              int sh = 1, int sw = 1, int ph = 0, int pw = 0);

// out = w.x + b, x [N], w [M,N], b [M] -> [M]
Tensor dense(Tape* tape, const Tensor& x, const Tensor& w, const Tensor& b);

Tensor relu(Tape* tape, const Tensor& x);
Tensor sigmoid(Tape* tape, const Tensor& x);

// window == stride pooling over [C,H,W]; backward routes to the argmax
Tensor max_pool2d(Tape* tape, const Tensor& x, int wh, int ww);

Tensor reshape(Tape* tape, const Tensor& x, std::vector<int> shape);

// nearest-neighbour resize along the last (W) axis of [C,H,W]
Tensor upsample_w(Tape* tape, const Tensor& x, int out_w);

Tensor add(Tape* tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape* tape, const Tensor& a, float c);
Tensor sum(Tape* tape, const Tensor& x);

// mean of squared differences; target is treated as a constant
Tensor mse_loss(Tape* tape, const Tensor& pred, const Tensor& target);

// same, restricted to cells where mask != 0 (mean over those cells)
Tensor mse_loss_masked(Tape* tape, const Tensor& pred, const Tensor& target,
                       const std::vector<uint8_t>& mask);

// binary cross-entropy on a scalar probability; p is clamped to
// [1e-7, 1 - 1e-7] before the log, and the gradient is taken through the
// clamped value so saturated predictions can still recover
Tensor bce_loss(Tape* tape, const Tensor& p, int label);

}  // namespace efn::tc
