#include "core/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace efn::tc {

Tensor Tensor::from(std::vector<int> s, std::vector<float> values, bool rg) {
    Tensor t;
    t.shape = std::move(s);
    require(static_cast<int64_t>(values.size()) == numel_of(t.shape),
            "tensor: data length does not match shape");
    t.data = std::make_shared<std::vector<float>>(std::move(values));
    t.requires_grad = rg;
    if (rg) t.ensure_grad();
    return t;
}

void Tensor::check_finite(const char* where) const {
    for (float v : *data) {
        if (!std::isfinite(v)) fail(std::string("non-finite value in ") + where);
    }
}

void ParamSet::add(const std::string& name, Tensor t) {
    require(!has(name), "ParamSet: duplicate name '" + name + "'");
    t.requires_grad = true;
    t.ensure_grad();
    items_.emplace_back(name, std::move(t));
}

bool ParamSet::has(const std::string& name) const {
    for (const auto& [n, _] : items_)
        if (n == name) return true;
    return false;
}

Tensor& ParamSet::at(const std::string& name) {
    for (auto& [n, t] : items_)
        if (n == name) return t;
    fail("ParamSet: no parameter '" + name + "'");
}

const Tensor& ParamSet::at(const std::string& name) const {
    for (const auto& [n, t] : items_)
        if (n == name) return t;
    fail("ParamSet: no parameter '" + name + "'");
}

void ParamSet::zero_grads() {
    for (auto& [_, t] : items_) t.zero_grad();
}

void ParamSet::adopt(const std::string& prefix, ParamSet& other) {
    for (auto& [n, t] : other) add(prefix + n, t);
}

bool ParamSet::bitwise_equal(const ParamSet& other) const {
    if (items_.size() != other.items_.size()) return false;
    for (size_t i = 0; i < items_.size(); ++i) {
        if (items_[i].first != other.items_[i].first) return false;
        const auto& a = *items_[i].second.data;
        const auto& b = *other.items_[i].second.data;
        if (a.size() != b.size()) return false;
        if (std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) != 0) return false;
    }
    return true;
}

void Tape::backward(Tensor& loss) {
    require(loss.is_scalar(), "backward: loss must be a scalar");
    loss.ensure_grad();
    (*loss.grad)[0] = 1.0f;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
}

}  // namespace efn::tc
