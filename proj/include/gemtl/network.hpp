#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gemtl/error.hpp"
#include "gemtl/layer.hpp"
#include "gemtl/prng.hpp"
#include "gemtl/tensor.hpp"

namespace gemtl {

/// Layers plus optimizer state. The last `head_count` layers are parallel heads that all read the
/// output of the sequential trunk formed by the layers before them.
struct TrainState {
    std::vector<Layer> layers;
    std::size_t head_count = 1;
    double learning_rate = 0.01;
    std::uint64_t step = 0;
    Prng rng{0};

    [[nodiscard]] std::size_t trunk_size() const { return layers.size() - head_count; }
    [[nodiscard]] std::span<const Layer> heads() const {
        return std::span<const Layer>(layers).subspan(trunk_size());
    }

    /// Checks that each layer's contracted extents equal the previous layer's output extents.
    void validate() const {
        if (layers.empty() || head_count == 0 || head_count > layers.size()) {
            throw ShapeError("network needs at least one layer and 1 <= head_count <= layer count");
        }
        for (std::size_t l = 0; l < layers.size(); ++l) {
            layers[l].validate();
        }
        const std::size_t trunk = trunk_size();
        for (std::size_t l = 1; l < layers.size(); ++l) {
            if (l >= trunk && trunk == 0) {
                if (layers[l].i_shape() != layers[0].i_shape()) {
                    throw ShapeError("head " + std::to_string(l) + " contracts " + layers[l].i_shape().str() +
                                     " but head 0 contracts " + layers[0].i_shape().str());
                }
                continue;
            }
            const Layer& feeder = layers[l < trunk ? l - 1 : trunk - 1];
            if (layers[l].i_shape() != feeder.k_shape()) {
                throw ShapeError("layer " + std::to_string(l) + " contracts " + layers[l].i_shape().str() +
                                 " but its input layer produces " + feeder.k_shape().str());
            }
        }
    }
};

/// Per-layer inputs and forward results, enough to run backward over the whole network.
struct NetworkForward {
    std::vector<Tensor> inputs;
    std::vector<LayerForward> layers;
    std::size_t head_count = 1;

    [[nodiscard]] const Tensor& output(std::size_t head = 0) const {
        return layers.at(layers.size() - head_count + head).output;
    }
    [[nodiscard]] const Tensor& preactivation(std::size_t head = 0) const {
        return layers.at(layers.size() - head_count + head).preactivation;
    }
};

inline NetworkForward network_forward(const TrainState& state, const Tensor& x) {
    state.validate();
    NetworkForward f;
    f.head_count = state.head_count;
    f.inputs.reserve(state.layers.size());
    f.layers.reserve(state.layers.size());
    for (std::size_t l = 0; l < state.layers.size(); ++l) {
        const std::size_t feeder = std::min(l, state.trunk_size());
        f.inputs.push_back(feeder == 0 ? x : f.layers[feeder - 1].output);
        f.layers.push_back(forward_pass(state.layers[l], f.inputs.back()));
    }
    return f;
}

enum class GradientWrt { output, preactivation };

/// Loss gradient for one head: either d/d(output) or d/d(preactivation).
struct HeadGradient {
    Tensor gradient;
    GradientWrt wrt = GradientWrt::output;
};

/// Chained backward over heads then trunk. Head input gradients are summed into the trunk output gradient.
inline std::vector<LayerGradients> network_backward(const TrainState& state, const NetworkForward& cache,
                                                    std::span<const HeadGradient> head_grads) {
    if (head_grads.size() != state.head_count) {
        throw ShapeError("expected " + std::to_string(state.head_count) + " head gradients, got " +
                         std::to_string(head_grads.size()));
    }
    const std::size_t trunk = state.trunk_size();
    std::vector<LayerGradients> grads(state.layers.size());
    Tensor upstream;
    for (std::size_t h = 0; h < state.head_count; ++h) {
        const std::size_t l = trunk + h;
        const Layer& layer = state.layers[l];
        grads[l] = head_grads[h].wrt == GradientWrt::preactivation
                       ? backward_from_delta(layer, cache.inputs[l], head_grads[h].gradient)
                       : backward(layer, cache.inputs[l], cache.layers[l], head_grads[h].gradient);
        if (h == 0) {
            upstream = grads[l].d_input;
        } else {
            upstream += grads[l].d_input;
        }
    }
    for (std::size_t l = trunk; l-- > 0;) {
        grads[l] = backward(state.layers[l], cache.inputs[l], cache.layers[l], upstream);
        upstream = grads[l].d_input;
    }
    return grads;
}

inline std::vector<LayerGradients> network_backward(const TrainState& state, const NetworkForward& cache,
                                                    const HeadGradient& head_grad) {
    return network_backward(state, cache, std::span<const HeadGradient>(&head_grad, 1));
}

/// In-place GEGD update: w -= γ dW, b -= γ dB for every layer, then step += 1.
inline void gegd_update(TrainState& state, std::span<const LayerGradients> grads) {
    if (!(state.learning_rate > 0.0) || !std::isfinite(state.learning_rate)) {
        throw ConfigError("learning rate must be positive and finite");
    }
    if (grads.size() != state.layers.size()) {
        throw ShapeError("gradient count " + std::to_string(grads.size()) + " != layer count " +
                         std::to_string(state.layers.size()));
    }
    for (std::size_t l = 0; l < grads.size(); ++l) {
        Layer& layer = state.layers[l];
        if (grads[l].d_weight.shape() != layer.weight.shape() || grads[l].d_bias.shape() != layer.bias.shape()) {
            throw ShapeError("gradient shapes for layer " + std::to_string(l) + " do not match its parameters");
        }
    }
    const double g = state.learning_rate;
    for (std::size_t l = 0; l < grads.size(); ++l) {
        Layer& layer = state.layers[l];
        auto w = layer.weight.data();
        auto dw = grads[l].d_weight.data();
        for (std::size_t i = 0; i < w.size(); ++i) {
            w[i] -= g * dw[i];
        }
        auto b = layer.bias.data();
        auto db = grads[l].d_bias.data();
        for (std::size_t i = 0; i < b.size(); ++i) {
            b[i] -= g * db[i];
        }
    }
    ++state.step;
}

inline TrainState gegd_step(TrainState state, std::span<const LayerGradients> grads) {
    gegd_update(state, grads);
    return state;
}

}  // namespace gemtl
