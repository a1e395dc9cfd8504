#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>

#include "gemtl/detection.hpp"
#include "gemtl/error.hpp"
#include "gemtl/tensor.hpp"

namespace gemtl {

/// Probabilities are clamped into [kProbFloor, 1] before taking logs.
inline constexpr double kProbFloor = 1e-12;

/// Scalar loss and its gradient. `gradient` is with respect to the pre-softmax logits for the
/// cross-entropy losses and with respect to the prediction itself for `mse_loss`.
struct LossResult {
    double value = 0.0;
    Tensor gradient;
};

namespace detail {

inline void check_probabilities(const Tensor& probs, const Tensor& one_hot, std::size_t class_count) {
    if (probs.shape() != one_hot.shape()) {
        throw ShapeError("probabilities " + probs.shape().str() + " and one-hot targets " + one_hot.shape().str() +
                         " differ in shape");
    }
    const std::size_t positions = probs.size() / class_count;
    for (std::size_t j = 0; j < positions; ++j) {
        double sum = 0.0;
        int hot = 0;
        for (std::size_t c = 0; c < class_count; ++c) {
            const double p = probs[c * positions + j];
            const double t = one_hot[c * positions + j];
            if (!std::isfinite(p) || p < 0.0 || p > 1.0 + 1e-9) {
                throw ConfigError("entry " + std::to_string(p) + " is not a probability");
            }
            if (t != 0.0 && t != 1.0) {
                throw ConfigError("one-hot target entry " + std::to_string(t) + " is not 0 or 1");
            }
            sum += p;
            hot += t == 1.0;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw ConfigError("probabilities at position " + std::to_string(j) + " sum to " + std::to_string(sum));
        }
        if (hot != 1) {
            throw ConfigError("target at position " + std::to_string(j) + " has " + std::to_string(hot) +
                              " hot entries");
        }
    }
}

}  // namespace detail

/// Mean over preserved positions of -sum_c y*_c log(p_c). The leading `class_modes` modes form the
/// class space; all remaining modes are positions. Gradient is (p - y*) / positions w.r.t. logits.
inline LossResult categorical_cross_entropy(const Tensor& probs, const Tensor& one_hot, std::size_t class_modes = 1) {
    if (class_modes > probs.order()) {
        throw ShapeError("class mode count exceeds tensor order");
    }
    const std::size_t class_count = probs.shape().slice(0, class_modes).count();
    detail::check_probabilities(probs, one_hot, class_count);
    const std::size_t positions = probs.size() / class_count;
    const double inv = 1.0 / static_cast<double>(positions);
    LossResult r{0.0, Tensor(probs.shape())};
    double total = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (one_hot[i] == 1.0) {
            total -= std::log(std::clamp(probs[i], kProbFloor, 1.0));
        }
        r.gradient[i] = (probs[i] - one_hot[i]) * inv;
    }
    r.value = total * inv;
    return r;
}

/// Batch classification cross-entropy on C × B probabilities.
inline LossResult cross_entropy_loss(const Tensor& probs, const Tensor& one_hot) {
    if (probs.order() != 2) {
        throw ShapeError("cross_entropy_loss expects C x B probabilities, got " + probs.shape().str());
    }
    return categorical_cross_entropy(probs, one_hot, 1);
}

/// Per-position cross-entropy averaged over every preserved position (e.g. C × B × H × W).
inline LossResult dense_cross_entropy_loss(const Tensor& probs, const Tensor& one_hot) {
    if (probs.order() < 2) {
        throw ShapeError("dense_cross_entropy_loss expects C x positions, got " + probs.shape().str());
    }
    return categorical_cross_entropy(probs, one_hot, 1);
}

/// Mean squared error over all entries; gradient w.r.t. the prediction.
inline LossResult mse_loss(const Tensor& prediction, const Tensor& target) {
    if (prediction.shape() != target.shape()) {
        throw ShapeError("mse_loss: prediction " + prediction.shape().str() + " vs target " + target.shape().str());
    }
    const double inv = 1.0 / static_cast<double>(prediction.size());
    LossResult r{0.0, Tensor(prediction.shape())};
    for (std::size_t i = 0; i < prediction.size(); ++i) {
        const double d = prediction[i] - target[i];
        r.value += d * d;
        r.gradient[i] = 2.0 * d * inv;
    }
    r.value *= inv;
    return r;
}

struct DetectionWeights {
    double box = 5.0;
    double objectness = 1.0;
    double classes = 1.0;
};

/// Detection loss with gradients w.r.t. each head's preactivation.
struct DetectionLoss {
    double value = 0.0;
    double box_term = 0.0;
    double objectness_term = 0.0;
    double class_term = 0.0;
    Tensor d_box;
    Tensor d_objectness;
    Tensor d_classes;
};

/// box·L_box + objectness·L_obj + classes·L_class.
///
/// L_box: squared error summed over the four decoded components (sigmoid x, sigmoid y, exp w, exp h),
///        averaged over object cells.
/// L_obj: binary cross-entropy averaged over all cells.
/// L_class: categorical cross-entropy averaged over object cells.
/// With no object cells, L_box and L_class are zero.
inline DetectionLoss detection_loss(const Tensor& box_pred, const Tensor& obj_pred, const Tensor& class_pred,
                                    const DetectionTargets& targets, const DetectionWeights& weights = {}) {
    if (weights.box < 0.0 || weights.objectness < 0.0 || weights.classes < 0.0) {
        throw ConfigError("detection loss weights must be non-negative");
    }
    const auto [batch, gh, gw] = detail::detection_grid(box_pred, obj_pred, class_pred);
    const Shape grid{batch, gh, gw};
    if (targets.object_mask.shape() != grid || targets.target_boxes.shape() != box_pred.shape() ||
        targets.target_classes.shape() != class_pred.shape()) {
        throw ShapeError("detection targets do not match the head grid " + grid.str());
    }
    const std::size_t cells = grid.count();
    const std::size_t classes = class_pred.shape()[0];

    std::size_t objects = 0;
    for (std::size_t c = 0; c < cells; ++c) {
        objects += targets.object_mask[c] > 0.5;
    }
    const double inv_obj = objects ? 1.0 / static_cast<double>(objects) : 0.0;
    const double inv_cells = 1.0 / static_cast<double>(cells);

    DetectionLoss r;
    r.d_box = Tensor(box_pred.shape());
    r.d_objectness = Tensor(obj_pred.shape());
    r.d_classes = Tensor(class_pred.shape());

    for (std::size_t cell = 0; cell < cells; ++cell) {
        const bool has_object = targets.object_mask[cell] > 0.5;

        const double o = std::clamp(obj_pred[cell], kProbFloor, 1.0 - kProbFloor);
        const double m = has_object ? 1.0 : 0.0;
        r.objectness_term -= (m * std::log(o) + (1.0 - m) * std::log(1.0 - o)) * inv_cells;
        r.d_objectness[cell] = weights.objectness * (obj_pred[cell] - m) * inv_cells;

        if (!has_object) {
            continue;
        }
        for (std::size_t d = 0; d < 4; ++d) {
            const std::size_t i = d * cells + cell;
            const double y = box_pred[i];
            const double diff = y - targets.target_boxes[i];
            r.box_term += diff * diff * inv_obj;
            const double dact = d < 2 ? y * (1.0 - y) : y;
            r.d_box[i] = weights.box * 2.0 * diff * dact * inv_obj;
        }
        for (std::size_t c = 0; c < classes; ++c) {
            const std::size_t i = c * cells + cell;
            const double t = targets.target_classes[i];
            if (t > 0.5) {
                r.class_term -= std::log(std::clamp(class_pred[i], kProbFloor, 1.0)) * inv_obj;
            }
            r.d_classes[i] = weights.classes * (class_pred[i] - t) * inv_obj;
        }
    }
    r.value = weights.box * r.box_term + weights.objectness * r.objectness_term + weights.classes * r.class_term;
    return r;
}

}  // namespace gemtl
