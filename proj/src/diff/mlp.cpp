// Copyright 2026 The Metappear Authors
// SPDX-License-Identifier: Apache-2.0

#include "metappear/diff/mlp.hpp"

#include <cmath>
#include <string>

#include "metappear/diff/dual.hpp"
#include "metappear/error.hpp"

namespace metappear::diff {

namespace {

template <class T>
T activate(Activation act, const T& z) {
    using std::exp;
    switch (act) {
        case Activation::Identity: return z;
        case Activation::Relu: return primal(z) > 0.0 ? z : T(0.0);
        case Activation::Softplus: return softplus(z);
        case Activation::Exp: return exp(z);
    }
    return z;
}

// d act / d z, given the pre-activation z and the activation a = act(z).
template <class T>
T activation_slope(Activation act, const T& z, const T& a) {
    switch (act) {
        case Activation::Identity: return T(1.0);
        case Activation::Relu: return primal(z) > 0.0 ? T(1.0) : T(0.0);
        case Activation::Softplus: return sigmoid(z);
        case Activation::Exp: return a;
    }
    return T(1.0);
}

inline double sign_of(double u) { return u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0); }

// Per-channel loss and its derivative with respect to the prediction.
template <class T>
T channel_loss(LossKind kind, const T& y, double target, double weight, T& dl_dy) {
    using std::abs;
    using std::log1p;
    switch (kind) {
        case LossKind::LogMaeCosine:
        case LossKind::LogMae: {
            double w = kind == LossKind::LogMae ? 1.0 : weight;
            T u = log1p(y * w) - std::log1p(target * w);
            dl_dy = sign_of(primal(u)) * w / (1.0 + y * w);
            return abs(u);
        }
        case LossKind::L1: {
            T u = y - target;
            dl_dy = T(sign_of(primal(u)));
            return abs(u);
        }
    }
    return T(0.0);
}

template <class T>
struct Workspace {
    std::vector<std::vector<T>> z;  // pre-activations per layer (index 0 unused)
    std::vector<std::vector<T>> a;  // activations per layer (a[0] = input)
    std::vector<T> delta;
    std::vector<T> delta_prev;

    explicit Workspace(const Architecture& arch) {
        z.resize(arch.dims.size());
        a.resize(arch.dims.size());
        std::size_t widest = 0;
        for (std::size_t l = 0; l < arch.dims.size(); ++l) {
            z[l].resize(arch.dims[l]);
            a[l].resize(arch.dims[l]);
            widest = std::max(widest, arch.dims[l]);
        }
        delta.resize(widest);
        delta_prev.resize(widest);
    }
};

template <class T>
void forward_sample(const Architecture& arch, std::span<const T> p, std::span<const double> input,
                    Workspace<T>& ws) {
    for (std::size_t j = 0; j < input.size(); ++j) ws.a[0][j] = T(input[j]);
    for (std::size_t l = 0; l < arch.layer_count(); ++l) {
        const std::size_t in = arch.dims[l];
        const std::size_t out = arch.dims[l + 1];
        const T* w = p.data() + arch.weight_offset(l);
        const T* b = p.data() + arch.bias_offset(l);
        const auto& a_in = ws.a[l];
        for (std::size_t o = 0; o < out; ++o) {
            T acc = b[o];
            const T* row = w + o * in;
            for (std::size_t i = 0; i < in; ++i) acc += row[i] * a_in[i];
            ws.z[l + 1][o] = acc;
            ws.a[l + 1][o] = activate(arch.activations[l], acc);
        }
    }
}

// Shared loss / gradient kernel. `grad` may be empty (loss only);
// `input_grad` (n x input_dim, doubles only) may be empty.
template <class T>
T loss_grad_kernel(const Architecture& arch, std::span<const T> p, const SampleSet& s,
                   LossKind kind, std::span<T> grad, std::span<double> input_grad) {
    const std::size_t n = s.size();
    const std::size_t L = arch.layer_count();
    const std::size_t out_dim = arch.output_dim();
    const double norm = 1.0 / static_cast<double>(n * out_dim);
    Workspace<T> ws(arch);
    for (auto& g : grad) g = T(0.0);

    T total(0.0);
    for (std::size_t k = 0; k < n; ++k) {
        forward_sample(arch, p, s.inputs.row(k), ws);
        const double weight = s.weights.empty() ? 1.0 : s.weights[k];
        T sample_loss(0.0);
        for (std::size_t c = 0; c < out_dim; ++c) {
            T dl_dy(0.0);
            sample_loss += channel_loss(kind, ws.a[L][c], s.targets(k, c), weight, dl_dy);
            ws.delta[c] = dl_dy * norm * activation_slope(arch.activations[L - 1], ws.z[L][c], ws.a[L][c]);
        }
        if (!std::isfinite(primal(sample_loss)))
            throw numerical_error("non-finite loss at sample " + std::to_string(k), k);
        total += sample_loss;
        if (grad.empty()) continue;

        for (std::size_t l = L; l-- > 0;) {
            const std::size_t in = arch.dims[l];
            const std::size_t out = arch.dims[l + 1];
            T* gw = grad.data() + arch.weight_offset(l);
            T* gb = grad.data() + arch.bias_offset(l);
            const T* w = p.data() + arch.weight_offset(l);
            const auto& a_in = ws.a[l];
            for (std::size_t o = 0; o < out; ++o) {
                const T d = ws.delta[o];
                gb[o] += d;
                T* row = gw + o * in;
                for (std::size_t i = 0; i < in; ++i) row[i] += d * a_in[i];
            }
            const bool need_input = l == 0 && !input_grad.empty();
            if (l == 0 && !need_input) break;
            for (std::size_t i = 0; i < in; ++i) {
                T acc(0.0);
                for (std::size_t o = 0; o < out; ++o) acc += w[o * in + i] * ws.delta[o];
                ws.delta_prev[i] = acc;
            }
            if (need_input) {
                if constexpr (std::is_same_v<T, double>) {
                    for (std::size_t i = 0; i < in; ++i) input_grad[k * in + i] = ws.delta_prev[i];
                }
                break;
            }
            for (std::size_t i = 0; i < in; ++i)
                ws.delta[i] = ws.delta_prev[i] *
                              activation_slope(arch.activations[l - 1], ws.z[l][i], ws.a[l][i]);
        }
    }
    return total * norm;
}

void check_params(const Architecture& arch, std::span<const double> params) {
    if (arch.kind != ArchKind::Mlp) throw invalid_argument("expected an mlp architecture, got " + arch.describe());
    if (params.size() != arch.param_count())
        throw invalid_argument("parameter count mismatch for " + arch.describe() + ": expected " +
                               std::to_string(arch.param_count()) + ", got " + std::to_string(params.size()));
}

}  // namespace

void SampleSet::validate(const Architecture& arch, LossKind loss) const {
    if (size() == 0) throw invalid_argument("empty batch");
    if (inputs.cols != arch.input_dim())
        throw invalid_argument("input dimension mismatch: expected " + std::to_string(arch.input_dim()) +
                               ", got " + std::to_string(inputs.cols));
    if (targets.rows != inputs.rows || targets.cols != arch.output_dim())
        throw invalid_argument("target shape mismatch: expected " + std::to_string(inputs.rows) + "x" +
                               std::to_string(arch.output_dim()) + ", got " + std::to_string(targets.rows) +
                               "x" + std::to_string(targets.cols));
    if (!weights.empty() && weights.size() != inputs.rows)
        throw invalid_argument("weight count mismatch: expected " + std::to_string(inputs.rows) + ", got " +
                               std::to_string(weights.size()));
    if (loss != LossKind::L1) {
        for (std::size_t i = 0; i < targets.data.size(); ++i)
            if (targets.data[i] < 0.0)
                throw invalid_argument("negative target at sample " + std::to_string(i / targets.cols));
    }
}

Matrix forward(const Architecture& arch, std::span<const double> params, const Matrix& inputs) {
    check_params(arch, params);
    if (inputs.cols != arch.input_dim())
        throw invalid_argument("input dimension mismatch: expected " + std::to_string(arch.input_dim()) +
                               ", got " + std::to_string(inputs.cols));
    Workspace<double> ws(arch);
    Matrix out(inputs.rows, arch.output_dim());
    for (std::size_t k = 0; k < inputs.rows; ++k) {
        forward_sample<double>(arch, params, inputs.row(k), ws);
        for (std::size_t c = 0; c < out.cols; ++c) out(k, c) = ws.a.back()[c];
    }
    return out;
}

Matrix forward(const ParamVector& params, const Matrix& inputs) {
    return forward(params.arch(), params.values(), inputs);
}

double mlp_loss(const Architecture& arch, std::span<const double> params, const SampleSet& batch,
                LossKind loss) {
    check_params(arch, params);
    batch.validate(arch, loss);
    return loss_grad_kernel<double>(arch, params, batch, loss, {}, {});
}

double mlp_loss_and_grad(const Architecture& arch, std::span<const double> params,
                         const SampleSet& batch, LossKind loss, std::span<double> grad,
                         std::span<double> input_grad) {
    check_params(arch, params);
    batch.validate(arch, loss);
    if (grad.size() != params.size()) throw invalid_argument("gradient buffer has wrong length");
    if (!input_grad.empty() && input_grad.size() != batch.size() * arch.input_dim())
        throw invalid_argument("input gradient buffer has wrong length");
    return loss_grad_kernel<double>(arch, params, batch, loss, grad, input_grad);
}

void mlp_hessian_vector(const Architecture& arch, std::span<const double> params,
                        const SampleSet& batch, LossKind loss, std::span<const double> v,
                        std::span<double> out) {
    check_params(arch, params);
    batch.validate(arch, loss);
    if (v.size() != params.size() || out.size() != params.size())
        throw invalid_argument("hessian-vector buffers have wrong length");
    using D = Dual<double>;
    std::vector<D> p(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) p[i] = D(params[i], v[i]);
    std::vector<D> g(params.size());
    loss_grad_kernel<D>(arch, std::span<const D>(p), batch, loss, std::span<D>(g), {});
    for (std::size_t i = 0; i < params.size(); ++i) out[i] = g[i].d;
}

LossGrad loss_and_grad(const ParamVector& params, const SampleSet& batch, LossKind loss) {
    LossGrad r;
    r.grad.assign(params.size(), 0.0);
    r.loss = mlp_loss_and_grad(params.arch(), params.values(), batch, loss, r.grad);
    return r;
}

MlpBatch::MlpBatch(Architecture arch, SampleSet samples, LossKind loss)
    : arch_(std::move(arch)), samples_(std::move(samples)), loss_(loss) {
    if (arch_.kind != ArchKind::Mlp) throw invalid_argument("MlpBatch needs an mlp architecture");
    samples_.validate(arch_, loss_);
}

double MlpBatch::loss(std::span<const double> params) const {
    return mlp_loss(arch_, params, samples_, loss_);
}

double MlpBatch::loss_and_grad(std::span<const double> params, std::span<double> grad) const {
    return mlp_loss_and_grad(arch_, params, samples_, loss_, grad);
}

void MlpBatch::hessian_vector(std::span<const double> params, std::span<const double> v,
                              std::span<double> out) const {
    mlp_hessian_vector(arch_, params, samples_, loss_, v, out);
}

double FunctionBatch::loss(std::span<const double> params) const {
    std::vector<double> scratch(params.size());
    return loss_grad_(params, scratch);
}

}  // namespace metappear::diff
