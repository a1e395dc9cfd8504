#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "gemtl/error.hpp"
#include "gemtl/layer.hpp"
#include "gemtl/tensor.hpp"

namespace gemtl {

enum class LossTag { ce, ce_dense, detection, mse };
enum class InterpreterTag { argmax, detection_decode, identity };

inline std::string_view to_string(LossTag t) {
    switch (t) {
        case LossTag::ce: return "ce";
        case LossTag::ce_dense: return "ce_dense";
        case LossTag::detection: return "detection";
        case LossTag::mse: return "mse";
    }
    return "?";
}

inline std::string_view to_string(InterpreterTag t) {
    switch (t) {
        case InterpreterTag::argmax: return "argmax";
        case InterpreterTag::detection_decode: return "detection_decode";
        case InterpreterTag::identity: return "identity";
    }
    return "?";
}

inline LossTag parse_loss(std::string_view s) {
    for (LossTag t : {LossTag::ce, LossTag::ce_dense, LossTag::detection, LossTag::mse}) {
        if (to_string(t) == s) return t;
    }
    throw ConfigError("unknown loss '" + std::string(s) + "'");
}

inline InterpreterTag parse_interpreter(std::string_view s) {
    for (InterpreterTag t : {InterpreterTag::argmax, InterpreterTag::detection_decode, InterpreterTag::identity}) {
        if (to_string(t) == s) return t;
    }
    throw ConfigError("unknown interpreter '" + std::string(s) + "'");
}

/// Task tuple (P, M, loss, interpreter) with concrete output (K) and preserved (J) extents.
/// `m_input` counts the structural modes of the raw input, batch included.
struct TaskConfig {
    std::size_t p = 1;
    std::size_t m = 1;
    std::vector<std::size_t> k_dims;
    std::vector<std::size_t> j_dims;
    LossTag loss = LossTag::ce;
    InterpreterTag interpreter = InterpreterTag::argmax;
    std::size_t m_input = 1;

    void validate() const {
        if (p == 0 || m == 0 || m_input == 0) {
            throw ConfigError("P, M and M_input must be positive");
        }
        if (k_dims.size() != p) {
            throw ConfigError("k_dims has " + std::to_string(k_dims.size()) + " entries, P = " + std::to_string(p));
        }
        if (j_dims.size() != m) {
            throw ConfigError("j_dims has " + std::to_string(j_dims.size()) + " entries, M = " + std::to_string(m));
        }
        if (m > m_input) {
            throw ConfigError("M = " + std::to_string(m) + " exceeds M_input = " + std::to_string(m_input));
        }
        for (std::size_t e : k_dims) {
            if (e == 0) throw ConfigError("k_dims entries must be >= 1");
        }
        for (std::size_t e : j_dims) {
            if (e == 0) throw ConfigError("j_dims entries must be >= 1");
        }
    }

    friend bool operator==(const TaskConfig&, const TaskConfig&) = default;
};

/// Structure preservation index M / M_input.
inline double preservation_index(const TaskConfig& config) {
    if (config.m_input == 0) {
        throw ConfigError("M_input must be >= 1");
    }
    return static_cast<double>(config.m) / static_cast<double>(config.m_input);
}

/// A task configuration together with the output layer(s) that realize it.
/// Multi-head tasks list their heads in the order of `config.k_dims`.
struct TaskPlan {
    TaskConfig config;
    std::vector<LayerSpec> heads;
};

inline TaskConfig build_generic(std::size_t p, std::size_t m, std::vector<std::size_t> k_dims,
                                std::vector<std::size_t> j_dims, LossTag loss, InterpreterTag interpreter,
                                std::size_t m_input) {
    TaskConfig c{p, m, std::move(k_dims), std::move(j_dims), loss, interpreter, m_input};
    c.validate();
    return c;
}

namespace detail {
inline void require_extents(std::initializer_list<std::size_t> extents) {
    for (std::size_t e : extents) {
        if (e == 0) throw ConfigError("task extents must be >= 1");
    }
}
}  // namespace detail

/// Whole-image classification. Input is (H·W·C_in) × B; one contracted mode, batch preserved.
inline TaskPlan build_classification(std::size_t features, std::size_t num_classes, std::size_t batch) {
    detail::require_extents({features, num_classes, batch});
    TaskPlan plan;
    plan.config = build_generic(1, 1, {num_classes}, {batch}, LossTag::ce, InterpreterTag::argmax, 3);
    plan.heads.push_back({{num_classes}, {features}, {batch}, Activation::softmax, BiasMode::shared});
    return plan;
}

/// Classification contracting H, W and C_in as three separate modes. Input is H × W × C_in × B.
/// Produces the same outputs as build_classification(H·W·C_in, ...) on the row-major flattened input.
inline TaskPlan build_classification_multimode(std::size_t height, std::size_t width, std::size_t channels,
                                               std::size_t num_classes, std::size_t batch) {
    detail::require_extents({height, width, channels, num_classes, batch});
    TaskPlan plan;
    plan.config = build_generic(1, 1, {num_classes}, {batch}, LossTag::ce, InterpreterTag::argmax, 3);
    plan.heads.push_back(
        {{num_classes}, {height, width, channels}, {batch}, Activation::softmax, BiasMode::shared});
    return plan;
}

/// Per-position classification. Input is C_in × B × H × W; channels contracted, (B, H, W) preserved.
inline TaskPlan build_dense_classification(std::size_t channels, std::size_t num_classes, std::size_t batch,
                                           std::size_t height, std::size_t width) {
    detail::require_extents({channels, num_classes, batch, height, width});
    TaskPlan plan;
    plan.config = build_generic(1, 3, {num_classes}, {batch, height, width}, LossTag::ce_dense,
                                InterpreterTag::argmax, 3);
    plan.heads.push_back(
        {{num_classes}, {channels}, {batch, height, width}, Activation::softmax, BiasMode::shared});
    return plan;
}

/// Semantic segmentation: the same configuration as dense classification.
inline TaskPlan build_segmentation(std::size_t channels, std::size_t num_classes, std::size_t batch,
                                   std::size_t height, std::size_t width) {
    return build_dense_classification(channels, num_classes, batch, height, width);
}

/// Grid detection with three heads on a C_in × B × G_h × G_w input:
/// box (4 outputs, sigmoid on x/y and exp on w/h), objectness (1 output, sigmoid), class (C outputs, softmax).
inline TaskPlan build_detection(std::size_t channels, std::size_t num_classes, std::size_t batch,
                                std::size_t grid_h, std::size_t grid_w) {
    detail::require_extents({channels, num_classes, batch, grid_h, grid_w});
    TaskPlan plan;
    plan.config = build_generic(3, 3, {4, 1, num_classes}, {batch, grid_h, grid_w}, LossTag::detection,
                                InterpreterTag::detection_decode, 3);
    const std::vector<std::size_t> j{batch, grid_h, grid_w};
    plan.heads.push_back({{4}, {channels}, j, Activation::box, BiasMode::shared});
    plan.heads.push_back({{1}, {channels}, j, Activation::sigmoid, BiasMode::shared});
    plan.heads.push_back({{num_classes}, {channels}, j, Activation::softmax, BiasMode::shared});
    return plan;
}

/// Index tensor produced by an interpreter.
struct Labels {
    Shape shape;
    std::vector<std::size_t> values;
};

/// Per-position argmax over the leading `class_modes` modes (joint index when more than one).
/// Ties resolve to the lowest index.
inline Labels interpret_argmax(const Tensor& probs, std::size_t class_modes = 1) {
    if (class_modes == 0 || class_modes > probs.order()) {
        throw ShapeError("interpret_argmax: class mode count must be in [1, order]");
    }
    const std::size_t classes = probs.shape().slice(0, class_modes).count();
    Labels out{probs.shape().slice(class_modes, probs.order() - class_modes), {}};
    const std::size_t positions = probs.size() / classes;
    out.values.assign(positions, 0);
    for (std::size_t j = 0; j < positions; ++j) {
        double best = probs[j];
        for (std::size_t c = 1; c < classes; ++c) {
            if (probs[c * positions + j] > best) {
                best = probs[c * positions + j];
                out.values[j] = c;
            }
        }
    }
    return out;
}

/// One-hot tensor with the class space (leading modes `class_shape`) ahead of the label positions.
inline Tensor one_hot(const Labels& labels, const Shape& class_shape) {
    const std::size_t classes = class_shape.count();
    Tensor t(class_shape.concat(labels.shape));
    const std::size_t positions = labels.values.size();
    for (std::size_t j = 0; j < positions; ++j) {
        if (labels.values[j] >= classes) {
            throw ShapeError("label " + std::to_string(labels.values[j]) + " out of range for " +
                             std::to_string(classes) + " classes");
        }
        t[labels.values[j] * positions + j] = 1.0;
    }
    return t;
}

}  // namespace gemtl
