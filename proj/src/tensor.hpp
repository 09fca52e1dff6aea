#pragma once

#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "geometry.hpp"

namespace usscan {

struct ShapeMismatch : UsError {
    explicit ShapeMismatch(const std::string& msg)
        : UsError(ErrorKind::Validation, msg) {}
};

struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        data.assign(numel(shape), 0.0);
    }
    static size_t numel(const std::vector<int>& s) {
        size_t n = 1;
        for (int d : s) n *= static_cast<size_t>(d);
        return n;
    }
    size_t size() const { return data.size(); }
    void zero() { std::fill(data.begin(), data.end(), 0.0); }
};

class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& x) = 0;
    // Accumulates parameter gradients, returns gradient w.r.t. the input.
    virtual Tensor backward(const Tensor& dy) = 0;
    virtual std::vector<Tensor*> params() { return {}; }
    virtual std::vector<Tensor*> grads() { return {}; }
    virtual const char* kind() const = 0;
};

class Dense : public Layer {
public:
    Dense(int in, int out, std::mt19937_64& rng);
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& dy) override;
    std::vector<Tensor*> params() override { return {&w_, &b_}; }
    std::vector<Tensor*> grads() override { return {&dw_, &db_}; }
    const char* kind() const override { return "dense"; }

private:
    int in_, out_;
    Tensor w_, b_, dw_, db_, x_;
};

// 2-D convolution, channels-first [C,H,W], no padding, im2col forward.
class Conv2d : public Layer {
public:
    Conv2d(int in_ch, int out_ch, int kernel, int stride, std::mt19937_64& rng);
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& dy) override;
    std::vector<Tensor*> params() override { return {&w_, &b_}; }
    std::vector<Tensor*> grads() override { return {&dw_, &db_}; }
    const char* kind() const override { return "conv2d"; }

private:
    int ic_, oc_, k_, stride_;
    int ih_ = 0, iw_ = 0, oh_ = 0, ow_ = 0;
    Tensor w_, b_, dw_, db_;
    std::vector<double> col_;  // [ic*k*k, oh*ow]
};

class Relu : public Layer {
public:
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& dy) override;
    const char* kind() const override { return "relu"; }

private:
    Tensor x_;
};

class Flatten : public Layer {
public:
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& dy) override;
    const char* kind() const override { return "flatten"; }

private:
    std::vector<int> in_shape_;
};

class Softmax : public Layer {
public:
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& dy) override;
    const char* kind() const override { return "softmax"; }

private:
    Tensor y_;
};

// Fixed sequence of layers with shared forward/backward plumbing.
class Network {
public:
    Network() = default;
    void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& dy);
    void zero_grads();

    std::vector<Tensor*> params();
    std::vector<Tensor*> grads();
    size_t param_count();

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

struct LossResult {
    double loss = 0.0;
    Tensor grad;  // w.r.t. predictions / logits
};

// Mean over all components of (pred - target)^2.
LossResult mse_loss(const Tensor& pred, const Tensor& target);

// Softmax + negative log-likelihood over 2 logits, max-stabilized.
LossResult cross_entropy(const Tensor& logits, int label);

struct ParamGroup {
    std::string name;
    std::vector<Tensor*> tensors;
    std::vector<Tensor*> grads;
    bool trainable = true;
};

// theta <- theta - alpha * grad on trainable groups only.
void sgd_step(std::vector<ParamGroup>& groups, double alpha);

enum class OptKind { Sgd, Adam };

// Plain gradient descent by default; Adam kept behind a config switch.
class Optimizer {
public:
    Optimizer(OptKind kind, double alpha) : kind_(kind), alpha_(alpha) {}
    void step(std::vector<ParamGroup>& groups);

private:
    OptKind kind_;
    double alpha_;
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    long t_ = 0;
    std::vector<std::vector<double>> m_, v_;  // adam moments, keyed by tensor order
};

// Compares analytic gradients against central finite differences.
// `forward_backward` must zero + refill `grads` and return the loss.
// Returns max over parameters of |ga - gn| / max(1, |ga| + |gn|).
double grad_check(std::span<Tensor* const> params, std::span<Tensor* const> grads,
                  const std::function<double()>& forward_backward,
                  double h = 1e-5);

}  // namespace usscan
