#include "core/adam.hpp"

#include <cmath>

namespace efn::tc {

Adam::Adam(double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    require(lr > 0.0, "adam: lr must be positive");
}

void Adam::step(ParamSet& params) {
    if (m_.empty()) {
        for (auto& [name, p] : params) {
            m_.emplace_back(p.data->size(), 0.0f);
            v_.emplace_back(p.data->size(), 0.0f);
        }
    }
    require(m_.size() == params.size(), "adam: parameter count changed mid-run");

    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));

    size_t idx = 0;
    for (auto& [name, p] : params) {
        require(static_cast<bool>(p.grad), "adam: missing grad for '" + name + "'");
        auto& m = m_[idx];
        auto& v = v_[idx];
        require(m.size() == p.data->size(), "adam: state shape mismatch for '" + name + "'");
        float* w = p.ptr();
        const float* g = p.grad->data();
        for (size_t i = 0; i < m.size(); ++i) {
            const double gi = g[i];
            m[i] = static_cast<float>(beta1_ * m[i] + (1.0 - beta1_) * gi);
            v[i] = static_cast<float>(beta2_ * v[i] + (1.0 - beta2_) * gi * gi);
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            w[i] = static_cast<float>(w[i] - lr_ * mhat / (std::sqrt(vhat) + eps_));
            require(std::isfinite(w[i]), "adam: non-finite parameter '" + name + "'");
        }
        ++idx;
    }
    params.zero_grads();
}

}  // namespace efn::tc
