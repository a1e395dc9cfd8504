#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gemtl/error.hpp"
#include "gemtl/layer.hpp"
#include "gemtl/tensor.hpp"

namespace gemtl {

/// Extents of one layer: contracted (I), preserved (J) and output (K). Empty lists count as 1.
struct LayerDims {
    std::vector<std::size_t> i_dims;
    std::vector<std::size_t> j_dims;
    std::vector<std::size_t> k_dims;
};

struct CostReport {
    std::uint64_t time_cost = 0;    // prod I · prod J · prod K
    std::uint64_t memory_cost = 0;  // prod K · prod I + bias term
    std::uint64_t flops = 0;        // 2 · time_cost (one multiply and one add per term)
    std::optional<std::uint64_t> measured_mults;
    bool shared_bias = false;  // bias term is prod K instead of prod K · prod J
};

namespace detail {

inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
    std::uint64_t r = 0;
    if (__builtin_mul_overflow(a, b, &r)) {
        throw std::overflow_error("layer cost exceeds 64-bit range");
    }
    return r;
}

inline std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
    std::uint64_t r = 0;
    if (__builtin_add_overflow(a, b, &r)) {
        throw std::overflow_error("layer cost exceeds 64-bit range");
    }
    return r;
}

inline std::uint64_t checked_product(const std::vector<std::size_t>& dims) {
    std::uint64_t p = 1;
    for (std::size_t d : dims) {
        if (d == 0) {
            throw ConfigError("layer extents must be >= 1");
        }
        p = checked_mul(p, d);
    }
    return p;
}

}  // namespace detail

inline CostReport analytic_cost(const LayerDims& dims, BiasMode bias = BiasMode::per_position) {
    const std::uint64_t i = detail::checked_product(dims.i_dims);
    const std::uint64_t j = detail::checked_product(dims.j_dims);
    const std::uint64_t k = detail::checked_product(dims.k_dims);
    CostReport r;
    r.time_cost = detail::checked_mul(detail::checked_mul(i, j), k);
    r.flops = detail::checked_mul(2, r.time_cost);
    r.shared_bias = bias == BiasMode::shared;
    r.memory_cost = detail::checked_add(detail::checked_mul(k, i), r.shared_bias ? k : detail::checked_mul(k, j));
    return r;
}

inline LayerDims layer_dims(const Layer& layer, const Tensor& x) {
    const std::size_t n = layer.contracted_modes;
    return {layer.i_shape().extents(), x.shape().slice(n, x.order() - n).extents(), layer.k_shape().extents()};
}

/// Runs the layer's contraction through the canonical kernel with a multiply counter attached.
inline CostReport measured_cost(const Layer& layer, const Tensor& x) {
    detail::check_layer_input(layer, x);
    CostReport r = analytic_cost(layer_dims(layer, x), layer.bias_mode);
    detail::MultiplyCounter counter;
    (void)detail::einstein_product_counted(layer.weight, x, layer.contracted_modes, counter);
    r.measured_mults = counter.mults;
    return r;
}

}  // namespace gemtl
