#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "gemtl/detection.hpp"
#include "gemtl/error.hpp"
#include "gemtl/harness/config.hpp"
#include "gemtl/harness/dataset.hpp"
#include "gemtl/layer.hpp"
#include "gemtl/loss.hpp"
#include "gemtl/network.hpp"
#include "gemtl/task.hpp"

namespace gemtl::harness {

inline constexpr std::uint64_t kWeightStream = 7;

/// The task plan realized by a config, with any hidden layers prepended to the head(s).
struct ModelPlan {
    TaskPlan task;
    std::vector<LayerSpec> layers;  // hidden layers followed by heads
    std::size_t head_count = 1;
    std::vector<std::size_t> input_i_dims;
};

inline TaskPlan task_plan(const ExperimentConfig& c) {
    const std::size_t batch = c.dataset_size;
    switch (c.task) {
        case TaskKind::classification: return build_classification(c.dims.features, c.dims.classes, batch);
        case TaskKind::dense:
            return build_dense_classification(c.dims.channels, c.dims.classes, batch, c.dims.height, c.dims.width);
        case TaskKind::segmentation:
            return build_segmentation(c.dims.channels, c.dims.classes, batch, c.dims.height, c.dims.width);
        case TaskKind::detection: {
            const std::size_t channels = c.dims.channels ? c.dims.channels : c.dims.classes + 5;
            return build_detection(channels, c.dims.classes, batch, c.dims.grid_h, c.dims.grid_w);
        }
        case TaskKind::generic: {
            std::vector<std::size_t> j{batch};
            j.insert(j.end(), c.dims.structure_dims.begin(), c.dims.structure_dims.end());
            const std::size_t m = j.size();
            TaskPlan plan;
            plan.config = build_generic(c.dims.k_dims.size(), m, c.dims.k_dims, j, c.dims.loss, c.dims.interpreter,
                                        c.dims.m_input ? c.dims.m_input : m);
            const Activation act = c.dims.loss == LossTag::mse ? Activation::identity : Activation::softmax;
            plan.heads.push_back({c.dims.k_dims, c.dims.i_dims, j, act, BiasMode::shared});
            return plan;
        }
    }
    throw ConfigError("unknown task");
}

inline ModelPlan model_plan(const ExperimentConfig& c) {
    ModelPlan mp;
    mp.task = task_plan(c);
    mp.head_count = mp.task.heads.size();
    mp.input_i_dims = mp.task.heads.front().i_dims;
    std::vector<std::size_t> feed = mp.input_i_dims;
    for (const auto& h : c.hidden) {
        mp.layers.push_back({h.k_dims, feed, mp.task.config.j_dims, h.activation, h.bias_mode});
        feed = h.k_dims;
    }
    for (LayerSpec head : mp.task.heads) {
        head.i_dims = feed;
        mp.layers.push_back(std::move(head));
    }
    return mp;
}

inline TrainState init_state(const ExperimentConfig& c, const ModelPlan& plan) {
    TrainState s;
    Prng wrng = Prng(c.seed).split(kWeightStream);
    for (const auto& spec : plan.layers) {
        s.layers.push_back(make_layer(spec, wrng));
    }
    s.head_count = plan.head_count;
    s.learning_rate = c.learning_rate;
    s.rng = Prng(c.seed);
    s.validate();
    return s;
}

inline SyntheticDataset generate_dataset(const ExperimentConfig& c) {
    const double noise = c.effective_noise();
    switch (c.task) {
        case TaskKind::classification:
            return make_classification_data(c.dims.features, c.dims.classes, c.dataset_size, c.seed, noise,
                                            c.separation);
        case TaskKind::dense:
        case TaskKind::segmentation:
            return make_dense_data(c.dims.channels, c.dims.classes, c.dataset_size, c.dims.height, c.dims.width, c.seed,
                                   noise, c.separation, c.task);
        case TaskKind::detection: {
            const std::size_t channels = c.dims.channels ? c.dims.channels : c.dims.classes + 5;
            return make_detection_data(channels, c.dims.classes, c.dataset_size, c.dims.grid_h, c.dims.grid_w, c.seed,
                                       noise);
        }
        case TaskKind::generic: {
            if (c.dataset_size == 0) {
                SyntheticDataset ds;
                ds.spec = {TaskKind::generic, c.seed, 0, noise, 0.0};
                return ds;
            }
            const TaskPlan plan = task_plan(c);
            return make_generic_data(plan.config, c.dims.i_dims, c.seed);
        }
    }
    throw ConfigError("unknown task");
}

struct MetricRecord {
    std::size_t epoch = 0;
    double loss = 0.0;
    std::string metric_name;
    double metric_value = 0.0;

    friend bool operator==(const MetricRecord&, const MetricRecord&) = default;
};

/// Loss, head gradients and task metrics for one forward pass.
struct Evaluation {
    double loss = 0.0;
    std::vector<HeadGradient> head_grads;
    std::vector<std::pair<std::string, double>> metrics;
    std::vector<std::vector<DetectionBox>> detections;
};

inline double label_accuracy(const Labels& predicted, const Labels& truth) {
    if (predicted.values.size() != truth.values.size() || truth.values.empty()) {
        throw ShapeError("label sets differ in size or are empty");
    }
    std::size_t hit = 0;
    for (std::size_t i = 0; i < truth.values.size(); ++i) {
        hit += predicted.values[i] == truth.values[i];
    }
    return static_cast<double>(hit) / static_cast<double>(truth.values.size());
}

inline MatchCounts detection_counts(const std::vector<std::vector<DetectionBox>>& predicted,
                                    const std::vector<std::vector<DetectionBox>>& truth, double iou_threshold = 0.5) {
    if (predicted.size() != truth.size()) {
        throw ShapeError("prediction and target batch sizes differ");
    }
    MatchCounts total;
    for (std::size_t b = 0; b < truth.size(); ++b) {
        total += match_detections(predicted[b], truth[b], iou_threshold);
    }
    return total;
}

inline std::string class_metric_name(const ExperimentConfig& c) {
    switch (c.task) {
        case TaskKind::classification: return "accuracy";
        case TaskKind::dense:
        case TaskKind::segmentation: return "pixel_accuracy";
        default: return "accuracy";
    }
}

inline Evaluation evaluate_forward(const ExperimentConfig& c, const ModelPlan& plan, const NetworkForward& fwd,
                                   const SyntheticDataset& ds) {
    Evaluation ev;
    const TaskConfig& task = plan.task.config;
    if (task.loss == LossTag::detection) {
        if (!ds.detection) {
            throw ConfigError("dataset has no detection targets");
        }
        const DetectionLoss dl = detection_loss(fwd.output(0), fwd.output(1), fwd.output(2), *ds.detection, c.lambdas);
        ev.loss = dl.value;
        ev.head_grads = {{dl.d_box, GradientWrt::preactivation},
                         {dl.d_objectness, GradientWrt::preactivation},
                         {dl.d_classes, GradientWrt::preactivation}};
        ev.detections = decode_detections(fwd.preactivation(0), fwd.preactivation(1), fwd.output(2),
                                          DecodeOptions{c.obj_threshold}, c.iou_threshold);
        const MatchCounts mc = detection_counts(ev.detections, target_boxes(*ds.detection), 0.5);
        ev.metrics = {{"precision", mc.precision()}, {"recall", mc.recall()}};
        return ev;
    }
    if (task.loss == LossTag::mse) {
        LossResult r = mse_loss(fwd.output(0), ds.targets);
        ev.loss = r.value;
        ev.head_grads.push_back({std::move(r.gradient), GradientWrt::output});
        ev.metrics = {{"mse", r.value}};
        return ev;
    }
    LossResult r = categorical_cross_entropy(fwd.output(0), ds.targets, task.p);
    ev.loss = r.value;
    ev.head_grads.push_back({std::move(r.gradient), GradientWrt::preactivation});
    ev.metrics = {{class_metric_name(c), label_accuracy(interpret_argmax(fwd.output(0), task.p), ds.labels)}};
    return ev;
}

struct TrainResult {
    TrainState state;
    std::vector<MetricRecord> log;
};

namespace detail {
inline void append_records(std::vector<MetricRecord>& log, std::size_t epoch, const Evaluation& ev) {
    for (const auto& [name, value] : ev.metrics) {
        log.push_back({epoch, ev.loss, name, value});
    }
}
}  // namespace detail

/// Full-batch GEGD. Record e describes the parameters after e updates, so the log spans epochs
/// 0..config.epochs. A learning rate of zero evaluates every epoch without updating.
inline TrainResult train(const ExperimentConfig& c, const SyntheticDataset& ds,
                         const std::function<void(const MetricRecord&)>& on_record = {}) {
    c.validate();
    if (ds.empty()) {
        throw ConfigError("dataset is empty; dataset_size must be positive to train");
    }
    const ModelPlan plan = model_plan(c);
    TrainResult result{init_state(c, plan), {}};
    for (std::size_t epoch = 0;; ++epoch) {
        const NetworkForward fwd = network_forward(result.state, ds.inputs);
        const Evaluation ev = evaluate_forward(c, plan, fwd, ds);
        if (!std::isfinite(ev.loss)) {
            throw DivergenceError(epoch, ev.loss);
        }
        const std::size_t first = result.log.size();
        detail::append_records(result.log, epoch, ev);
        if (on_record) {
            for (std::size_t i = first; i < result.log.size(); ++i) on_record(result.log[i]);
        }
        if (epoch == c.epochs) {
            break;
        }
        if (c.learning_rate > 0.0) {
            const auto grads = network_backward(result.state, fwd, ev.head_grads);
            gegd_update(result.state, grads);
        }
    }
    return result;
}

inline TrainResult train(const ExperimentConfig& c) { return train(c, generate_dataset(c)); }

/// Metrics of `state` on `ds`, tagged with the state's step count.
inline std::vector<MetricRecord> evaluate(const TrainState& state, const SyntheticDataset& ds,
                                          const ExperimentConfig& c) {
    if (ds.empty()) {
        throw ConfigError("dataset is empty");
    }
    const ModelPlan plan = model_plan(c);
    const NetworkForward fwd = network_forward(state, ds.inputs);
    std::vector<MetricRecord> out;
    detail::append_records(out, static_cast<std::size_t>(state.step), evaluate_forward(c, plan, fwd, ds));
    return out;
}

}  // namespace gemtl::harness
