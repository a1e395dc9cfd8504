#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "gemtl/error.hpp"
#include "gemtl/prng.hpp"
#include "gemtl/tensor.hpp"

namespace gemtl {

/// Activation applied after the contraction and bias add.
///
/// `softmax` normalizes jointly over the whole output (K) index space at each preserved position.
/// `box` is the grid-detection box head: the K space must hold exactly four components
/// (x, y, w, h); sigmoid is applied to x and y and exp to w and h.
enum class Activation { identity, relu, sigmoid, exp, softmax, box };

enum class BiasMode { per_position, shared };

inline std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::relu: return "relu";
        case Activation::sigmoid: return "sigmoid";
        case Activation::exp: return "exp";
        case Activation::softmax: return "softmax";
        case Activation::box: return "box";
    }
    return "?";
}

inline Activation parse_activation(std::string_view s) {
    for (Activation a : {Activation::identity, Activation::relu, Activation::sigmoid, Activation::exp,
                         Activation::softmax, Activation::box}) {
        if (to_string(a) == s) {
            return a;
        }
    }
    throw ConfigError("unknown activation '" + std::string(s) + "'");
}

inline std::string_view to_string(BiasMode b) { return b == BiasMode::shared ? "shared" : "per_position"; }

inline BiasMode parse_bias_mode(std::string_view s) {
    if (s == "shared") return BiasMode::shared;
    if (s == "per_position") return BiasMode::per_position;
    throw ConfigError("unknown bias mode '" + std::string(s) + "'");
}

inline double sigmoid(double z) noexcept {
    if (z >= 0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// Shape description of a layer: weight is K ++ I, bias is K ++ J (per_position) or K (shared).
struct LayerSpec {
    std::vector<std::size_t> k_dims;
    std::vector<std::size_t> i_dims;
    std::vector<std::size_t> j_dims;  // only consulted for per_position bias
    Activation activation = Activation::identity;
    BiasMode bias_mode = BiasMode::shared;

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// One GE-MLP layer: Y = f(W *_N X + B).
struct Layer {
    Tensor weight;
    Tensor bias;
    BiasMode bias_mode = BiasMode::shared;
    Activation activation = Activation::identity;
    std::size_t output_modes = 0;      // P
    std::size_t contracted_modes = 0;  // N

    [[nodiscard]] Shape k_shape() const { return weight.shape().slice(0, output_modes); }
    [[nodiscard]] Shape i_shape() const { return weight.shape().slice(output_modes, contracted_modes); }

    /// Checks the weight/bias order and K-extent invariants.
    void validate() const {
        if (weight.order() != output_modes + contracted_modes) {
            throw ShapeError("weight order " + std::to_string(weight.order()) + " != P + N = " +
                             std::to_string(output_modes + contracted_modes));
        }
        if (bias.order() < output_modes || bias.shape().slice(0, output_modes) != k_shape()) {
            throw ShapeError("bias K extents " + bias.shape().str() + " do not match weight K extents " +
                             k_shape().str());
        }
        if (bias_mode == BiasMode::shared && bias.order() != output_modes) {
            throw ShapeError("shared bias must have order P = " + std::to_string(output_modes));
        }
        if (activation == Activation::box && k_shape().count() != 4) {
            throw ShapeError("box activation needs exactly 4 output components, got " + k_shape().str());
        }
    }
};

/// Zero bias, weights uniform in [-s, s] with s = 1/sqrt(prod I).
inline Layer make_layer(const LayerSpec& spec, Prng& rng) {
    const Shape k(spec.k_dims);
    const Shape i(spec.i_dims);
    const double s = 1.0 / std::sqrt(static_cast<double>(i.count()));
    Layer layer;
    layer.weight = random_uniform(k.concat(i), -s, s, rng);
    layer.bias = Tensor(spec.bias_mode == BiasMode::shared ? k : k.concat(Shape(spec.j_dims)));
    layer.bias_mode = spec.bias_mode;
    layer.activation = spec.activation;
    layer.output_modes = spec.k_dims.size();
    layer.contracted_modes = spec.i_dims.size();
    layer.validate();
    return layer;
}

/// Preactivation and activated output of one forward call.
struct LayerForward {
    Tensor preactivation;
    Tensor output;
};

struct LayerGradients {
    Tensor d_weight;
    Tensor d_bias;
    Tensor d_input;
};

namespace detail {

inline void check_layer_input(const Layer& layer, const Tensor& x) {
    const std::size_t n = layer.contracted_modes;
    if (x.order() < n) {
        throw ShapeError("layer input of order " + std::to_string(x.order()) + " has fewer than N = " +
                         std::to_string(n) + " modes");
    }
    const Shape want = layer.i_shape();
    for (std::size_t t = 0; t < n; ++t) {
        if (x.shape()[t] != want[t]) {
            throw ShapeError("layer input mode " + std::to_string(t) + " has extent " + std::to_string(x.shape()[t]) +
                             ", weight expects " + std::to_string(want[t]));
        }
    }
    if (layer.bias_mode == BiasMode::per_position) {
        const Shape j = x.shape().slice(n, x.order() - n);
        const Shape bj = layer.bias.shape().slice(layer.output_modes, layer.bias.order() - layer.output_modes);
        if (j != bj) {
            throw ShapeError("per-position bias preserved extents " + bj.str() + " do not match input preserved extents " +
                             j.str());
        }
    }
}

/// Softmax over the K index space at each of `positions` preserved positions (layout k * positions + j).
inline void softmax_over_k(std::span<const double> pre, std::span<double> out, std::size_t k_count,
                           std::size_t positions) {
    for (std::size_t j = 0; j < positions; ++j) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < k_count; ++k) {
            mx = std::max(mx, pre[k * positions + j]);
        }
        double sum = 0.0;
        for (std::size_t k = 0; k < k_count; ++k) {
            const double e = std::exp(pre[k * positions + j] - mx);
            out[k * positions + j] = e;
            sum += e;
        }
        for (std::size_t k = 0; k < k_count; ++k) {
            out[k * positions + j] /= sum;
        }
    }
}

}  // namespace detail

/// Applies an activation to a K ++ J preactivation tensor whose K space has `k_count` entries.
inline Tensor activate(Activation act, const Tensor& pre, std::size_t k_count) {
    Tensor out(pre.shape());
    const std::size_t positions = pre.size() / k_count;
    auto p = pre.data();
    auto o = out.data();
    switch (act) {
        case Activation::identity: std::copy(p.begin(), p.end(), o.begin()); break;
        case Activation::relu:
            for (std::size_t i = 0; i < p.size(); ++i) o[i] = p[i] > 0.0 ? p[i] : 0.0;
            break;
        case Activation::sigmoid:
            for (std::size_t i = 0; i < p.size(); ++i) o[i] = sigmoid(p[i]);
            break;
        case Activation::exp:
            for (std::size_t i = 0; i < p.size(); ++i) o[i] = std::exp(p[i]);
            break;
        case Activation::softmax: detail::softmax_over_k(p, o, k_count, positions); break;
        case Activation::box:
            for (std::size_t i = 0; i < p.size(); ++i) {
                o[i] = (i / positions) < 2 ? sigmoid(p[i]) : std::exp(p[i]);
            }
            break;
    }
    return out;
}

/// delta = d(loss)/d(preactivation) given d(loss)/d(output).
inline Tensor activation_backward(Activation act, const Tensor& pre, const Tensor& out, const Tensor& upstream,
                                  std::size_t k_count) {
    if (upstream.shape() != out.shape()) {
        throw ShapeError("upstream gradient shape " + upstream.shape().str() + " != layer output shape " +
                         out.shape().str());
    }
    Tensor delta(out.shape());
    const std::size_t positions = out.size() / k_count;
    auto d = delta.data();
    auto u = upstream.data();
    auto y = out.data();
    auto p = pre.data();
    switch (act) {
        case Activation::identity: std::copy(u.begin(), u.end(), d.begin()); break;
        case Activation::relu:
            for (std::size_t i = 0; i < d.size(); ++i) d[i] = p[i] > 0.0 ? u[i] : 0.0;
            break;
        case Activation::sigmoid:
            for (std::size_t i = 0; i < d.size(); ++i) d[i] = u[i] * y[i] * (1.0 - y[i]);
            break;
        case Activation::exp:
            for (std::size_t i = 0; i < d.size(); ++i) d[i] = u[i] * y[i];
            break;
        case Activation::softmax:
            // Jacobian-vector product: delta_k = s_k (u_k - sum_k' s_k' u_k').
            for (std::size_t j = 0; j < positions; ++j) {
                double dot = 0.0;
                for (std::size_t k = 0; k < k_count; ++k) {
                    dot += y[k * positions + j] * u[k * positions + j];
                }
                for (std::size_t k = 0; k < k_count; ++k) {
                    const std::size_t i = k * positions + j;
                    d[i] = y[i] * (u[i] - dot);
                }
            }
            break;
        case Activation::box:
            for (std::size_t i = 0; i < d.size(); ++i) {
                d[i] = (i / positions) < 2 ? u[i] * y[i] * (1.0 - y[i]) : u[i] * y[i];
            }
            break;
    }
    return delta;
}

inline LayerForward forward_pass(const Layer& layer, const Tensor& x) {
    detail::check_layer_input(layer, x);
    Tensor pre = einstein_product(layer.weight, x, layer.contracted_modes);
    const std::size_t k_count = layer.k_shape().count();
    if (layer.bias_mode == BiasMode::per_position) {
        pre += layer.bias;
    } else {
        const std::size_t positions = pre.size() / k_count;
        for (std::size_t k = 0; k < k_count; ++k) {
            const double b = layer.bias[k];
            for (std::size_t j = 0; j < positions; ++j) {
                pre[k * positions + j] += b;
            }
        }
    }
    Tensor out = activate(layer.activation, pre, k_count);
    return {std::move(pre), std::move(out)};
}

/// f(W *_N x + B), shape K ++ J.
inline Tensor forward(const Layer& layer, const Tensor& x) { return forward_pass(layer, x).output; }

/// Parameter and input gradients given delta = d(loss)/d(preactivation).
inline LayerGradients backward_from_delta(const Layer& layer, const Tensor& x, const Tensor& delta) {
    detail::check_layer_input(layer, x);
    const std::size_t n = layer.contracted_modes;
    const std::size_t p = layer.output_modes;
    const std::size_t m = x.order() - n;
    const Shape expect = layer.k_shape().concat(x.shape().slice(n, m));
    if (delta.shape() != expect) {
        throw ShapeError("gradient shape " + delta.shape().str() + " != layer output shape " + expect.str());
    }

    // dW[k, i] = sum_j delta[k, j] x[i, j]
    std::vector<std::size_t> x_perm(n + m);
    for (std::size_t t = 0; t < n + m; ++t) x_perm[t] = t < n ? m + t : t - n;
    LayerGradients g;
    g.d_weight = einstein_product(delta, permute_modes(x, x_perm), m);

    // dX[i, j] = sum_k w[k, i] delta[k, j]
    std::vector<std::size_t> w_perm(p + n);
    for (std::size_t t = 0; t < p + n; ++t) w_perm[t] = t < p ? n + t : t - p;
    g.d_input = einstein_product(permute_modes(layer.weight, w_perm), delta, p);

    if (layer.bias_mode == BiasMode::per_position) {
        g.d_bias = delta;
    } else {
        g.d_bias = einstein_product(delta, Tensor(x.shape().slice(n, m), 1.0), m);
    }
    return g;
}

/// Full chain rule through the activation; `upstream` is d(loss)/d(output).
inline LayerGradients backward(const Layer& layer, const Tensor& x, const LayerForward& fwd, const Tensor& upstream) {
    const Tensor delta =
        activation_backward(layer.activation, fwd.preactivation, fwd.output, upstream, layer.k_shape().count());
    return backward_from_delta(layer, x, delta);
}

inline LayerGradients backward(const Layer& layer, const Tensor& x, const Tensor& upstream) {
    return backward(layer, x, forward_pass(layer, x), upstream);
}

}  // namespace gemtl
