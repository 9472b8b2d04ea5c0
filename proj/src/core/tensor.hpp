#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "core/common.hpp"

namespace efn::tc {

// Dense row-major float tensor. Data and grad are shared so that copies of a
// Tensor handle refer to the same storage; the Tape captures handles by value.
struct Tensor {
    std::vector<int> shape;
    std::shared_ptr<std::vector<float>> data;
    std::shared_ptr<std::vector<float>> grad;  // allocated on demand
    bool requires_grad = false;

    Tensor() : data(std::make_shared<std::vector<float>>()) {}

    // grad storage is created together with the tensor: closures capture
    // Tensor copies by value, so a late allocation would not be shared
    explicit Tensor(std::vector<int> s, float fill = 0.0f, bool rg = false)
        : shape(std::move(s)), requires_grad(rg) {
        data = std::make_shared<std::vector<float>>(static_cast<size_t>(numel_of(shape)), fill);
        if (rg) ensure_grad();
    }

    static Tensor from(std::vector<int> s, std::vector<float> values, bool rg = false);

    static int64_t numel_of(const std::vector<int>& s) {
        int64_t n = 1;
        for (int d : s) n *= d;
        return n;
    }

    int64_t numel() const { return static_cast<int64_t>(data->size()); }
    bool is_scalar() const { return numel() == 1; }

    float* ptr() { return data->data(); }
    const float* ptr() const { return data->data(); }

    void ensure_grad() {
        if (!grad) grad = std::make_shared<std::vector<float>>(data->size(), 0.0f);
    }
    void zero_grad() {
        if (grad) std::fill(grad->begin(), grad->end(), 0.0f);
    }

    // deep copy of values (grad not copied)
    Tensor clone() const {
        Tensor t;
        t.shape = shape;
        t.data = std::make_shared<std::vector<float>>(*data);
        t.requires_grad = requires_grad;
        if (t.requires_grad) t.ensure_grad();
        return t;
    }

    void check_finite(const char* where) const;
};

// Ordered name -> Tensor map with deterministic insertion-order iteration.
class ParamSet {
public:
    void add(const std::string& name, Tensor t);
    bool has(const std::string& name) const;
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;

    size_t size() const { return items_.size(); }
    auto begin() { return items_.begin(); }
    auto end() { return items_.end(); }
    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }

    void zero_grads();

    // merge another set under a name prefix (used to collect phase params)
    void adopt(const std::string& prefix, ParamSet& other);

    bool bitwise_equal(const ParamSet& other) const;

private:
    std::vector<std::pair<std::string, Tensor>> items_;
};

// Records backward closures during a forward pass; backward() replays them in
// reverse, visiting each node exactly once.
class Tape {
public:
    void record(std::function<void()> backward_fn) { nodes_.push_back(std::move(backward_fn)); }
    void backward(Tensor& loss);
    void clear() { nodes_.clear(); }
    size_t size() const { return nodes_.size(); }

private:
    std::vector<std::function<void()>> nodes_;
};

}  // namespace efn::tc
