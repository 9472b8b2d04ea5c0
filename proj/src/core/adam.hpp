#pragma once

#include <vector>

#include "core/tensor.hpp"

namespace efn::tc {

// Bias-corrected Adam. State arrays are keyed positionally against the
// ParamSet, which iterates in insertion order.
class Adam {
public:
    explicit Adam(double lr = 1e-4, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8);

    // Applies one update to every parameter with a populated grad, then zeroes
    // all grads. Parameters without grads are an error.
    void step(ParamSet& params);

    int64_t steps_taken() const { return t_; }
    double lr() const { return lr_; }

private:
    double lr_, beta1_, beta2_, eps_;
    int64_t t_ = 0;
    std::vector<std::vector<float>> m_, v_;
};

}  // namespace efn::tc
