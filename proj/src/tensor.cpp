#include "tensor.hpp"

#include <algorithm>
#include <cmath>

#include "rng.hpp"

namespace usscan {

namespace {

void init_uniform(Tensor& t, int fan_in, std::mt19937_64& rng) {
    double s = std::sqrt(1.0 / fan_in);
    for (double& v : t.data) v = uniform(rng, -s, s);
}

}  // namespace

// ---- Dense ----

Dense::Dense(int in, int out, std::mt19937_64& rng)
    : in_(in), out_(out), w_({out, in}), b_({out}), dw_({out, in}), db_({out}) {
    init_uniform(w_, in, rng);
}

Tensor Dense::forward(const Tensor& x) {
    if (x.size() != static_cast<size_t>(in_))
        throw ShapeMismatch("dense: input size mismatch");
    x_ = x;
    Tensor y({out_});
    for (int o = 0; o < out_; ++o) {
        double acc = b_.data[o];
        const double* wr = &w_.data[static_cast<size_t>(o) * in_];
        for (int i = 0; i < in_; ++i) acc += wr[i] * x.data[i];
        y.data[o] = acc;
    }
    return y;
}

Tensor Dense::backward(const Tensor& dy) {
    if (dy.size() != static_cast<size_t>(out_))
        throw ShapeMismatch("dense: grad size mismatch");
    Tensor dx({in_});
    for (int o = 0; o < out_; ++o) {
        double g = dy.data[o];
        db_.data[o] += g;
        double* dwr = &dw_.data[static_cast<size_t>(o) * in_];
        const double* wr = &w_.data[static_cast<size_t>(o) * in_];
        for (int i = 0; i < in_; ++i) {
            dwr[i] += g * x_.data[i];
            dx.data[i] += g * wr[i];
        }
    }
    return dx;
}

// ---- Conv2d ----

Conv2d::Conv2d(int in_ch, int out_ch, int kernel, int stride, std::mt19937_64& rng)
    : ic_(in_ch), oc_(out_ch), k_(kernel), stride_(stride),
      w_({out_ch, in_ch, kernel, kernel}), b_({out_ch}),
      dw_({out_ch, in_ch, kernel, kernel}), db_({out_ch}) {
    init_uniform(w_, in_ch * kernel * kernel, rng);
}

Tensor Conv2d::forward(const Tensor& x) {
    if (x.shape.size() != 3 || x.shape[0] != ic_)
        throw ShapeMismatch("conv2d: expected [C,H,W] input");
    ih_ = x.shape[1];
    iw_ = x.shape[2];
    oh_ = (ih_ - k_) / stride_ + 1;
    ow_ = (iw_ - k_) / stride_ + 1;
    if (oh_ <= 0 || ow_ <= 0)
        throw ShapeMismatch("conv2d: kernel larger than input");

    const int patch = ic_ * k_ * k_;
    const int cols = oh_ * ow_;
    col_.assign(static_cast<size_t>(patch) * cols, 0.0);
    for (int c = 0; c < ic_; ++c)
        for (int ky = 0; ky < k_; ++ky)
            for (int kx = 0; kx < k_; ++kx) {
                int row = (c * k_ + ky) * k_ + kx;
                double* dst = &col_[static_cast<size_t>(row) * cols];
                for (int oy = 0; oy < oh_; ++oy) {
                    const double* src =
                        &x.data[(static_cast<size_t>(c) * ih_ + oy * stride_ + ky) * iw_ + kx];
                    for (int ox = 0; ox < ow_; ++ox)
                        dst[oy * ow_ + ox] = src[static_cast<size_t>(ox) * stride_];
                }
            }

    Tensor y({oc_, oh_, ow_});
    for (int o = 0; o < oc_; ++o) {
        const double* wr = &w_.data[static_cast<size_t>(o) * patch];
        double* yr = &y.data[static_cast<size_t>(o) * cols];
        std::fill(yr, yr + cols, b_.data[o]);
        for (int p = 0; p < patch; ++p) {
            double wv = wr[p];
            const double* cr = &col_[static_cast<size_t>(p) * cols];
            for (int j = 0; j < cols; ++j) yr[j] += wv * cr[j];
        }
    }
    return y;
}

Tensor Conv2d::backward(const Tensor& dy) {
    const int patch = ic_ * k_ * k_;
    const int cols = oh_ * ow_;
    if (dy.size() != static_cast<size_t>(oc_) * cols)
        throw ShapeMismatch("conv2d: grad size mismatch");

    // dW = dy * col^T, db = row sums of dy
    for (int o = 0; o < oc_; ++o) {
        const double* gr = &dy.data[static_cast<size_t>(o) * cols];
        double* dwr = &dw_.data[static_cast<size_t>(o) * patch];
        double bacc = 0.0;
        for (int j = 0; j < cols; ++j) bacc += gr[j];
        db_.data[o] += bacc;
        for (int p = 0; p < patch; ++p) {
            const double* cr = &col_[static_cast<size_t>(p) * cols];
            double acc = 0.0;
            for (int j = 0; j < cols; ++j) acc += gr[j] * cr[j];
            dwr[p] += acc;
        }
    }

    // dcol = W^T * dy, scattered back to input positions.
    Tensor dx({ic_, ih_, iw_});
    std::vector<double> dcol(static_cast<size_t>(patch) * cols, 0.0);
    for (int o = 0; o < oc_; ++o) {
        const double* wr = &w_.data[static_cast<size_t>(o) * patch];
        const double* gr = &dy.data[static_cast<size_t>(o) * cols];
        for (int p = 0; p < patch; ++p) {
            double wv = wr[p];
            double* dr = &dcol[static_cast<size_t>(p) * cols];
            for (int j = 0; j < cols; ++j) dr[j] += wv * gr[j];
        }
    }
    for (int c = 0; c < ic_; ++c)
        for (int ky = 0; ky < k_; ++ky)
            for (int kx = 0; kx < k_; ++kx) {
                int row = (c * k_ + ky) * k_ + kx;
                const double* dr = &dcol[static_cast<size_t>(row) * cols];
                for (int oy = 0; oy < oh_; ++oy) {
                    double* dst =
                        &dx.data[(static_cast<size_t>(c) * ih_ + oy * stride_ + ky) * iw_ + kx];
                    for (int ox = 0; ox < ow_; ++ox)
                        dst[static_cast<size_t>(ox) * stride_] += dr[oy * ow_ + ox];
                }
            }
    return dx;
}

// ---- Relu / Flatten / Softmax ----

Tensor Relu::forward(const Tensor& x) {
    x_ = x;
    Tensor y = x;
    for (double& v : y.data)
        if (v < 0.0) v = 0.0;
    return y;
}

Tensor Relu::backward(const Tensor& dy) {
    if (dy.size() != x_.size()) throw ShapeMismatch("relu: grad size mismatch");
    Tensor dx = dy;
    for (size_t i = 0; i < dx.size(); ++i)
        if (x_.data[i] <= 0.0) dx.data[i] = 0.0;
    return dx;
}

Tensor Flatten::forward(const Tensor& x) {
    in_shape_ = x.shape;
    Tensor y({static_cast<int>(x.size())});
    y.data = x.data;
    return y;
}

Tensor Flatten::backward(const Tensor& dy) {
    Tensor dx(in_shape_);
    if (dy.size() != dx.size()) throw ShapeMismatch("flatten: grad size mismatch");
    dx.data = dy.data;
    return dx;
}

Tensor Softmax::forward(const Tensor& x) {
    Tensor y = x;
    double mx = *std::max_element(x.data.begin(), x.data.end());
    double sum = 0.0;
    for (size_t i = 0; i < y.size(); ++i) {
        y.data[i] = std::exp(x.data[i] - mx);
        sum += y.data[i];
    }
    for (double& v : y.data) v /= sum;
    y_ = y;
    return y;
}

Tensor Softmax::backward(const Tensor& dy) {
    if (dy.size() != y_.size()) throw ShapeMismatch("softmax: grad size mismatch");
    double inner = 0.0;
    for (size_t i = 0; i < y_.size(); ++i) inner += dy.data[i] * y_.data[i];
    Tensor dx = dy;
    for (size_t i = 0; i < dx.size(); ++i)
        dx.data[i] = y_.data[i] * (dy.data[i] - inner);
    return dx;
}

// ---- Network ----

Tensor Network::forward(const Tensor& x) {
    Tensor t = x;
    for (auto& l : layers_) t = l->forward(t);
    return t;
}

Tensor Network::backward(const Tensor& dy) {
    Tensor g = dy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
        g = (*it)->backward(g);
    return g;
}

void Network::zero_grads() {
    for (auto& l : layers_)
        for (Tensor* g : l->grads()) g->zero();
}

std::vector<Tensor*> Network::params() {
    std::vector<Tensor*> out;
    for (auto& l : layers_)
        for (Tensor* p : l->params()) out.push_back(p);
    return out;
}

std::vector<Tensor*> Network::grads() {
    std::vector<Tensor*> out;
    for (auto& l : layers_)
        for (Tensor* g : l->grads()) out.push_back(g);
    return out;
}

size_t Network::param_count() {
    size_t n = 0;
    for (Tensor* p : params()) n += p->size();
    return n;
}

// ---- Losses ----

LossResult mse_loss(const Tensor& pred, const Tensor& target) {
    if (pred.shape != target.shape)
        throw ShapeMismatch("mse_loss: shape mismatch");
    size_t n = pred.size();
    LossResult r;
    r.grad = Tensor(pred.shape);
    for (size_t i = 0; i < n; ++i) {
        double d = pred.data[i] - target.data[i];
        r.loss += d * d;
        r.grad.data[i] = 2.0 * d / static_cast<double>(n);
    }
    r.loss /= static_cast<double>(n);
    return r;
}

LossResult cross_entropy(const Tensor& logits, int label) {
    if (logits.size() != 2)
        throw ShapeMismatch("cross_entropy: expected 2 logits");
    double mx = std::max(logits.data[0], logits.data[1]);
    double e0 = std::exp(logits.data[0] - mx);
    double e1 = std::exp(logits.data[1] - mx);
    double z = e0 + e1;
    double p0 = e0 / z, p1 = e1 / z;
    LossResult r;
    r.loss = -(logits.data[label] - mx - std::log(z));
    r.grad = Tensor({2});
    r.grad.data[0] = p0 - (label == 0 ? 1.0 : 0.0);
    r.grad.data[1] = p1 - (label == 1 ? 1.0 : 0.0);
    return r;
}

// ---- Optimizers ----

void sgd_step(std::vector<ParamGroup>& groups, double alpha) {
    for (ParamGroup& g : groups) {
        if (!g.trainable) continue;
        if (g.tensors.size() != g.grads.size())
            throw ShapeMismatch("sgd_step: group tensor/grad count mismatch");
        for (size_t t = 0; t < g.tensors.size(); ++t) {
            Tensor& p = *g.tensors[t];
            const Tensor& gr = *g.grads[t];
            if (p.size() != gr.size())
                throw ShapeMismatch("sgd_step: tensor/grad size mismatch");
            for (size_t i = 0; i < p.size(); ++i)
                p.data[i] -= alpha * gr.data[i];
        }
    }
}

void Optimizer::step(std::vector<ParamGroup>& groups) {
    if (kind_ == OptKind::Sgd) {
        sgd_step(groups, alpha_);
        return;
    }
    // Adam. Moment buffers are laid out in group/tensor iteration order;
    // frozen groups still occupy slots so the keying is stable.
    ++t_;
    size_t slot = 0;
    double bc1 = 1.0 - std::pow(beta1_, t_);
    double bc2 = 1.0 - std::pow(beta2_, t_);
    for (ParamGroup& g : groups) {
        for (size_t t = 0; t < g.tensors.size(); ++t, ++slot) {
            if (slot >= m_.size()) {
                m_.emplace_back(g.tensors[t]->size(), 0.0);
                v_.emplace_back(g.tensors[t]->size(), 0.0);
            }
            if (!g.trainable) continue;
            Tensor& p = *g.tensors[t];
            const Tensor& gr = *g.grads[t];
            std::vector<double>& m = m_[slot];
            std::vector<double>& v = v_[slot];
            for (size_t i = 0; i < p.size(); ++i) {
                m[i] = beta1_ * m[i] + (1.0 - beta1_) * gr.data[i];
                v[i] = beta2_ * v[i] + (1.0 - beta2_) * gr.data[i] * gr.data[i];
                p.data[i] -= alpha_ * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
            }
        }
    }
}

// ---- Gradient checking ----

double grad_check(std::span<Tensor* const> params, std::span<Tensor* const> grads,
                  const std::function<double()>& forward_backward, double h) {
    forward_backward();
    std::vector<std::vector<double>> analytic;
    analytic.reserve(grads.size());
    for (Tensor* g : grads) analytic.push_back(g->data);

    double max_err = 0.0;
    for (size_t t = 0; t < params.size(); ++t) {
        Tensor& p = *params[t];
        for (size_t i = 0; i < p.size(); ++i) {
            double orig = p.data[i];
            p.data[i] = orig + h;
            double lp = forward_backward();
            p.data[i] = orig - h;
            double lm = forward_backward();
            p.data[i] = orig;
            double gn = (lp - lm) / (2.0 * h);
            double ga = analytic[t][i];
            double err = std::abs(ga - gn) / std::max(1.0, std::abs(ga) + std::abs(gn));
            max_err = std::max(max_err, err);
        }
    }
    forward_backward();  // restore grads for the unperturbed point
    return max_err;
}

}  // namespace usscan
