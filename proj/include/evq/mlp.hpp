#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "evq/common.hpp"
#include "evq/rng.hpp"

namespace evq {

/// Fully connected network with rectifier hidden layers and a linear
/// output. Parameters live in one flat vector, layer by layer: the weight
/// matrix (rows = outputs, row-major) followed by the bias.
class Mlp {
public:
    Mlp() = default;

    explicit Mlp(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
        if (sizes_.size() < 2) throw ShapeError("an Mlp needs at least input and output sizes");
        for (std::size_t s : sizes_)
            if (s == 0) throw ShapeError("Mlp layer sizes must be positive");
        std::size_t off = 0;
        for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
            weight_offset_.push_back(off);
            off += sizes_[l] * sizes_[l + 1];
            bias_offset_.push_back(off);
            off += sizes_[l + 1];
        }
        params_.assign(off, 0.0);
    }

    /// Glorot-uniform weights and zero biases.
    static Mlp initialized(std::vector<std::size_t> sizes, std::uint64_t seed) {
        Mlp net(std::move(sizes));
        Rng rng(seed);
        for (std::size_t l = 0; l < net.layers(); ++l) {
            const double fan_in = static_cast<double>(net.sizes_[l]);
            const double fan_out = static_cast<double>(net.sizes_[l + 1]);
            const double limit = std::sqrt(6.0 / (fan_in + fan_out));
            const std::size_t n = net.sizes_[l] * net.sizes_[l + 1];
            for (std::size_t i = 0; i < n; ++i) net.params_[net.weight_offset_[l] + i] = rng.uniform(-limit, limit);
        }
        return net;
    }

    std::size_t layers() const noexcept { return weight_offset_.size(); }
    const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
    std::size_t input_size() const { return sizes_.front(); }
    std::size_t output_size() const { return sizes_.back(); }
    std::size_t parameter_count() const noexcept { return params_.size(); }

    std::span<double> params() noexcept { return params_; }
    std::span<const double> params() const noexcept { return params_; }

    double weight(std::size_t layer, std::size_t out, std::size_t in) const {
        return params_[weight_offset_[layer] + out * sizes_[layer] + in];
    }
    double& weight(std::size_t layer, std::size_t out, std::size_t in) {
        return params_[weight_offset_[layer] + out * sizes_[layer] + in];
    }
    double bias(std::size_t layer, std::size_t out) const { return params_[bias_offset_[layer] + out]; }
    double& bias(std::size_t layer, std::size_t out) { return params_[bias_offset_[layer] + out]; }

    std::vector<double> forward(std::span<const double> x) const {
        Activations act;
        forward_cached(x, act);
        return act.back();
    }

    /// Per-layer post-activation values; act[0] is the input.
    using Activations = std::vector<std::vector<double>>;

    void forward_cached(std::span<const double> x, Activations& act) const {
        if (x.size() != input_size())
            throw ShapeError("Mlp input has " + std::to_string(x.size()) + " features, expected " +
                             std::to_string(input_size()));
        act.resize(sizes_.size());
        act[0].assign(x.begin(), x.end());
        for (std::size_t l = 0; l < layers(); ++l) {
            const std::size_t n_in = sizes_[l], n_out = sizes_[l + 1];
            const double* w = params_.data() + weight_offset_[l];
            const double* b = params_.data() + bias_offset_[l];
            const auto& in = act[l];
            auto& out = act[l + 1];
            out.resize(n_out);
            const bool hidden = l + 1 < layers();
            for (std::size_t o = 0; o < n_out; ++o) {
                double z = b[o];
                const double* row = w + o * n_in;
                for (std::size_t i = 0; i < n_in; ++i) z += row[i] * in[i];
                out[o] = (hidden && z < 0.0) ? 0.0 : z;
            }
        }
    }

    /// Accumulates d(scale * output[k])/d(params) into grad for one sample
    /// whose activations were produced by forward_cached.
    void accumulate_output_gradient(const Activations& act, std::size_t k, double scale,
                                    std::span<double> grad, std::vector<double>& delta,
                                    std::vector<double>& next_delta) const {
        delta.assign(output_size(), 0.0);
        delta[k] = scale;
        for (std::size_t l = layers(); l-- > 0;) {
            const std::size_t n_in = sizes_[l], n_out = sizes_[l + 1];
            const double* w = params_.data() + weight_offset_[l];
            double* gw = grad.data() + weight_offset_[l];
            double* gb = grad.data() + bias_offset_[l];
            const auto& in = act[l];
            next_delta.assign(n_in, 0.0);
            for (std::size_t o = 0; o < n_out; ++o) {
                const double d = delta[o];
                if (d == 0.0) continue;
                gb[o] += d;
                const double* row = w + o * n_in;
                double* grow = gw + o * n_in;
                for (std::size_t i = 0; i < n_in; ++i) {
                    grow[i] += d * in[i];
                    next_delta[i] += d * row[i];
                }
            }
            if (l > 0) {
                // rectifier derivative: hidden unit active iff its output > 0
                for (std::size_t i = 0; i < n_in; ++i)
                    if (!(in[i] > 0.0)) next_delta[i] = 0.0;
            }
            delta.swap(next_delta);
        }
    }

    friend bool operator==(const Mlp& a, const Mlp& b) { return a.sizes_ == b.sizes_ && a.params_ == b.params_; }

private:
    std::vector<std::size_t> sizes_;
    std::vector<std::size_t> weight_offset_;
    std::vector<std::size_t> bias_offset_;
    std::vector<double> params_;
};

/// Squared-error regression of Q(s, a) onto targets over a minibatch.
struct RegressionBatch {
    std::vector<std::vector<double>> inputs;
    std::vector<std::size_t> actions;
    std::vector<double> targets;
};

/// Mean squared error of the selected-action outputs and, if `grad` is
/// non-empty, its gradient with respect to the parameters.
inline double mse_loss_and_gradient(const Mlp& net, const RegressionBatch& batch, std::span<double> grad) {
    const std::size_t B = batch.inputs.size();
    if (B == 0 || batch.actions.size() != B || batch.targets.size() != B)
        throw ShapeError("regression batch fields must have equal, nonzero length");
    if (!grad.empty()) {
        if (grad.size() != net.parameter_count()) throw ShapeError("gradient buffer size mismatch");
        std::fill(grad.begin(), grad.end(), 0.0);
    }
    Mlp::Activations act;
    std::vector<double> delta, next_delta;
    double loss = 0.0;
    const double inv_b = 1.0 / static_cast<double>(B);
    for (std::size_t i = 0; i < B; ++i) {
        if (batch.actions[i] >= net.output_size()) throw ShapeError("batch action out of range");
        net.forward_cached(batch.inputs[i], act);
        const double err = act.back()[batch.actions[i]] - batch.targets[i];
        loss += err * err * inv_b;
        if (!grad.empty()) net.accumulate_output_gradient(act, batch.actions[i], 2.0 * err * inv_b, grad, delta, next_delta);
    }
    return loss;
}

struct AdamOptimizer {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t t = 0;

    void step(std::span<double> params, std::span<const double> grad) {
        if (params.size() != grad.size()) throw ShapeError("Adam: gradient size mismatch");
        if (m.empty()) {
            m.assign(params.size(), 0.0);
            v.assign(params.size(), 0.0);
        }
        ++t;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
            params[i] -= learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + epsilon);
        }
    }
};

/// One optimizer step on the batch; returns the loss before the step.
/// `max_grad_norm` > 0 rescales the gradient to at most that L2 norm.
inline double backward_and_step(Mlp& net, const RegressionBatch& batch, AdamOptimizer& opt,
                                double max_grad_norm = 0.0) {
    std::vector<double> grad(net.parameter_count());
    const double loss = mse_loss_and_gradient(net, batch, grad);
    if (!std::isfinite(loss)) throw NumericalError("non-finite training loss");
    if (max_grad_norm > 0.0) {
        double sq = 0.0;
        for (double g : grad) sq += g * g;
        const double norm = std::sqrt(sq);
        if (norm > max_grad_norm)
            for (double& g : grad) g *= max_grad_norm / norm;
    }
    opt.step(net.params(), grad);
    return loss;
}

} // namespace evq
