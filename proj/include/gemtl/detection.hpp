#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "gemtl/error.hpp"
#include "gemtl/layer.hpp"
#include "gemtl/tensor.hpp"

namespace gemtl {

/// Decoded box in image-normalized coordinates.
struct DetectionBox {
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double h = 0.0;
    double objectness = 0.0;
    std::size_t class_id = 0;
    double class_score = 0.0;

    friend bool operator==(const DetectionBox&, const DetectionBox&) = default;
};

/// Per-cell supervision for a B × G_h × G_w grid. Boxes are cell-relative:
/// (x offset in cell, y offset in cell, w / prior_w, h / prior_h).
struct DetectionTargets {
    Tensor object_mask;     // B × G_h × G_w, entries 0 or 1
    Tensor target_boxes;    // 4 × B × G_h × G_w
    Tensor target_classes;  // C × B × G_h × G_w one-hot

    [[nodiscard]] Shape grid() const { return object_mask.shape(); }
};

struct DecodeOptions {
    double obj_threshold = 0.5;
    double prior_w = 0.0;  // <= 0 selects 1 / G_w
    double prior_h = 0.0;  // <= 0 selects 1 / G_h
};

/// Intersection-over-union of the axis-aligned rectangles (cx ± w/2, cy ± h/2).
inline double iou(const DetectionBox& a, const DetectionBox& b) {
    const double ix = std::max(0.0, std::min(a.cx + a.w / 2, b.cx + b.w / 2) - std::max(a.cx - a.w / 2, b.cx - b.w / 2));
    const double iy = std::max(0.0, std::min(a.cy + a.h / 2, b.cy + b.h / 2) - std::max(a.cy - a.h / 2, b.cy - b.h / 2));
    const double inter = ix * iy;
    const double uni = a.w * a.h + b.w * b.h - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

/// Sorts by objectness, highest first. Ties keep their input order.
inline void sort_by_objectness(std::vector<DetectionBox>& boxes) {
    std::stable_sort(boxes.begin(), boxes.end(),
                     [](const DetectionBox& a, const DetectionBox& b) { return a.objectness > b.objectness; });
}

/// Greedy class-aware non-maximum suppression. Repeatedly keeps the most confident remaining box
/// and drops every box of the same class whose IoU with it exceeds `iou_threshold`.
inline std::vector<DetectionBox> nms(std::vector<DetectionBox> boxes, double iou_threshold = 0.5) {
    if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0)) {
        throw ConfigError("iou_threshold must lie in [0, 1]");
    }
    sort_by_objectness(boxes);
    std::vector<DetectionBox> kept;
    std::vector<bool> removed(boxes.size(), false);
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        if (removed[i]) {
            continue;
        }
        kept.push_back(boxes[i]);
        for (std::size_t j = i + 1; j < boxes.size(); ++j) {
            if (!removed[j] && boxes[j].class_id == boxes[i].class_id && iou(boxes[i], boxes[j]) > iou_threshold) {
                removed[j] = true;
            }
        }
    }
    return kept;
}

namespace detail {

/// Validates head shapes and returns (B, G_h, G_w).
inline std::array<std::size_t, 3> detection_grid(const Tensor& bbox, const Tensor& obj, const Tensor& cls) {
    if (bbox.order() != 4 || bbox.shape()[0] != 4) {
        throw ShapeError("box head must have shape 4 x B x G_h x G_w, got " + bbox.shape().str());
    }
    const Shape grid = bbox.shape().slice(1, 3);
    const bool obj_ok = (obj.order() == 3 && obj.shape() == grid) ||
                        (obj.order() == 4 && obj.shape()[0] == 1 && obj.shape().slice(1, 3) == grid);
    if (!obj_ok) {
        throw ShapeError("objectness head shape " + obj.shape().str() + " does not match grid " + grid.str());
    }
    if (cls.order() != 4 || cls.shape().slice(1, 3) != grid) {
        throw ShapeError("class head shape " + cls.shape().str() + " does not match grid " + grid.str());
    }
    return {grid[0], grid[1], grid[2]};
}

}  // namespace detail

/// Decodes raw head outputs into boxes, one list per batch item, each sorted by objectness and
/// passed through class-aware NMS.
///
/// For cell (g_y, g_x) with sigmoid(obj) >= threshold:
///   cx = (g_x + sigmoid(t_x)) / G_w,  cy = (g_y + sigmoid(t_y)) / G_h,
///   w = prior_w * exp(t_w),           h = prior_h * exp(t_h).
/// Thresholding happens before coordinate conversion; the resulting set is the same either way.
inline std::vector<std::vector<DetectionBox>> decode_detections(const Tensor& bbox_raw, const Tensor& obj_raw,
                                                                const Tensor& class_probs,
                                                                const DecodeOptions& opt = {},
                                                                double iou_threshold = 0.5) {
    if (!(opt.obj_threshold > 0.0 && opt.obj_threshold < 1.0)) {
        throw ConfigError("obj_threshold must lie in (0, 1)");
    }
    const auto [batch, gh, gw] = detail::detection_grid(bbox_raw, obj_raw, class_probs);
    const std::size_t cells = batch * gh * gw;
    const std::size_t classes = class_probs.shape()[0];
    const double pw = opt.prior_w > 0.0 ? opt.prior_w : 1.0 / static_cast<double>(gw);
    const double ph = opt.prior_h > 0.0 ? opt.prior_h : 1.0 / static_cast<double>(gh);

    std::vector<std::vector<DetectionBox>> result(batch);
    for (std::size_t b = 0; b < batch; ++b) {
        std::vector<DetectionBox> boxes;
        for (std::size_t y = 0; y < gh; ++y) {
            for (std::size_t x = 0; x < gw; ++x) {
                const std::size_t cell = (b * gh + y) * gw + x;
                const double objectness = sigmoid(obj_raw[cell]);
                if (objectness < opt.obj_threshold) {
                    continue;
                }
                DetectionBox box;
                box.cx = (static_cast<double>(x) + sigmoid(bbox_raw[0 * cells + cell])) / static_cast<double>(gw);
                box.cy = (static_cast<double>(y) + sigmoid(bbox_raw[1 * cells + cell])) / static_cast<double>(gh);
                box.w = pw * std::exp(bbox_raw[2 * cells + cell]);
                box.h = ph * std::exp(bbox_raw[3 * cells + cell]);
                box.objectness = objectness;
                for (std::size_t c = 0; c < classes; ++c) {
                    const double p = class_probs[c * cells + cell];
                    if (c == 0 || p > box.class_score) {
                        box.class_id = c;
                        box.class_score = p;
                    }
                }
                boxes.push_back(box);
            }
        }
        result[b] = nms(std::move(boxes), iou_threshold);
    }
    return result;
}

/// Absolute boxes for every object cell of `targets`, one list per batch item.
inline std::vector<std::vector<DetectionBox>> target_boxes(const DetectionTargets& targets, double prior_w = 0.0,
                                                           double prior_h = 0.0) {
    const Shape grid = targets.grid();
    const std::size_t batch = grid[0], gh = grid[1], gw = grid[2];
    const std::size_t cells = grid.count();
    const std::size_t classes = targets.target_classes.shape()[0];
    const double pw = prior_w > 0.0 ? prior_w : 1.0 / static_cast<double>(gw);
    const double ph = prior_h > 0.0 ? prior_h : 1.0 / static_cast<double>(gh);
    std::vector<std::vector<DetectionBox>> result(batch);
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t y = 0; y < gh; ++y) {
            for (std::size_t x = 0; x < gw; ++x) {
                const std::size_t cell = (b * gh + y) * gw + x;
                if (targets.object_mask[cell] < 0.5) {
                    continue;
                }
                DetectionBox box;
                box.cx = (static_cast<double>(x) + targets.target_boxes[0 * cells + cell]) / static_cast<double>(gw);
                box.cy = (static_cast<double>(y) + targets.target_boxes[1 * cells + cell]) / static_cast<double>(gh);
                box.w = pw * targets.target_boxes[2 * cells + cell];
                box.h = ph * targets.target_boxes[3 * cells + cell];
                box.objectness = 1.0;
                for (std::size_t c = 0; c < classes; ++c) {
                    if (targets.target_classes[c * cells + cell] > 0.5) {
                        box.class_id = c;
                        box.class_score = 1.0;
                    }
                }
                result[b].push_back(box);
            }
        }
    }
    return result;
}

struct MatchCounts {
    std::size_t true_positives = 0;
    std::size_t predictions = 0;
    std::size_t targets = 0;

    [[nodiscard]] double precision() const {
        if (predictions == 0) return targets == 0 ? 1.0 : 0.0;
        return static_cast<double>(true_positives) / static_cast<double>(predictions);
    }
    [[nodiscard]] double recall() const {
        if (targets == 0) return 1.0;
        return static_cast<double>(true_positives) / static_cast<double>(targets);
    }

    MatchCounts& operator+=(const MatchCounts& o) {
        true_positives += o.true_positives;
        predictions += o.predictions;
        targets += o.targets;
        return *this;
    }
};

/// Greedy matching: predictions in objectness order each claim the unmatched same-class target
/// with the highest IoU, provided that IoU is at least `iou_threshold`.
inline MatchCounts match_detections(std::vector<DetectionBox> predictions, const std::vector<DetectionBox>& truth,
                                    double iou_threshold = 0.5) {
    sort_by_objectness(predictions);
    MatchCounts counts{0, predictions.size(), truth.size()};
    std::vector<bool> used(truth.size(), false);
    for (const auto& p : predictions) {
        double best = -1.0;
        std::size_t best_idx = truth.size();
        for (std::size_t t = 0; t < truth.size(); ++t) {
            if (used[t] || truth[t].class_id != p.class_id) {
                continue;
            }
            const double v = iou(p, truth[t]);
            if (v >= iou_threshold && v > best) {
                best = v;
                best_idx = t;
            }
        }
        if (best_idx < truth.size()) {
            used[best_idx] = true;
            ++counts.true_positives;
        }
    }
    return counts;
}

}  // namespace gemtl
