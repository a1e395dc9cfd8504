#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "gemtl/error.hpp"
#include "gemtl/layer.hpp"
#include "gemtl/loss.hpp"
#include "gemtl/task.hpp"

namespace gemtl::harness {

enum class TaskKind { classification, dense, segmentation, detection, generic };

inline std::string_view to_string(TaskKind k) {
    switch (k) {
        case TaskKind::classification: return "classification";
        case TaskKind::dense: return "dense";
        case TaskKind::segmentation: return "segmentation";
        case TaskKind::detection: return "detection";
        case TaskKind::generic: return "generic";
    }
    return "?";
}

inline TaskKind parse_task(std::string_view s) {
    for (TaskKind k : {TaskKind::classification, TaskKind::dense, TaskKind::segmentation, TaskKind::detection,
                       TaskKind::generic}) {
        if (to_string(k) == s) return k;
    }
    throw ConfigError("unknown task '" + std::string(s) + "'");
}

/// Extra layer inserted ahead of the task head(s).
struct HiddenLayer {
    std::vector<std::size_t> k_dims;
    Activation activation = Activation::relu;
    BiasMode bias_mode = BiasMode::shared;
};

/// Task dimensions. Which fields apply depends on the task:
///   classification: features, classes
///   dense / segmentation: channels, classes, height, width
///   detection: classes, grid_h, grid_w, channels (0 = classes + 5)
///   generic: i_dims, k_dims, structure_dims (preserved modes after batch), loss, interpreter, m_input (0 = M)
/// The batch extent is always `dataset_size`.
struct TaskDims {
    std::size_t features = 0;
    std::size_t classes = 0;
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t grid_h = 0;
    std::size_t grid_w = 0;
    std::vector<std::size_t> i_dims;
    std::vector<std::size_t> k_dims;
    std::vector<std::size_t> structure_dims;
    LossTag loss = LossTag::mse;
    InterpreterTag interpreter = InterpreterTag::identity;
    std::size_t m_input = 0;
};

struct ExperimentConfig {
    TaskKind task = TaskKind::classification;
    TaskDims dims;
    std::vector<HiddenLayer> hidden;
    std::size_t epochs = 100;
    double learning_rate = 0.1;  // 0 evaluates without updating
    std::uint64_t seed = 0;
    DetectionWeights lambdas;
    std::size_t dataset_size = 32;
    std::string output_path;  // checkpoint directory; empty disables writing

    // Synthetic data shape.
    double noise = 0.0;       // feature noise standard deviation; 0 selects the task default
    double separation = 6.0;  // minimum centroid distance in units of `noise`

    double obj_threshold = 0.5;
    double iou_threshold = 0.5;

    /// Classification-style tasks default to unit noise, detection to 0.05.
    [[nodiscard]] double effective_noise() const {
        if (noise > 0.0) return noise;
        return task == TaskKind::detection ? 0.05 : 1.0;
    }

    /// Range checks; throws ConfigError. A zero dataset_size passes here and is refused by training.
    void validate() const {
        if (epochs == 0) throw ConfigError("epochs must be positive");
        if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
            throw ConfigError("learning_rate must be finite and >= 0");
        }
        if (lambdas.box < 0 || lambdas.objectness < 0 || lambdas.classes < 0) {
            throw ConfigError("lambdas must be non-negative");
        }
        if (!(noise >= 0.0) || !(separation > 0.0)) {
            throw ConfigError("noise must be >= 0 and separation positive");
        }
        if (!(obj_threshold > 0.0 && obj_threshold < 1.0)) throw ConfigError("obj_threshold must lie in (0, 1)");
        if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0)) throw ConfigError("iou_threshold must lie in [0, 1]");
        auto positive = [](std::size_t v, const char* name) {
            if (v == 0) throw ConfigError(std::string("dims.") + name + " must be positive");
        };
        switch (task) {
            case TaskKind::classification:
                positive(dims.features, "features");
                positive(dims.classes, "classes");
                break;
            case TaskKind::dense:
            case TaskKind::segmentation:
                positive(dims.channels, "channels");
                positive(dims.classes, "classes");
                positive(dims.height, "height");
                positive(dims.width, "width");
                break;
            case TaskKind::detection:
                positive(dims.classes, "classes");
                positive(dims.grid_h, "grid_h");
                positive(dims.grid_w, "grid_w");
                if (dims.channels != 0 && dims.channels < dims.classes + 5) {
                    throw ConfigError("detection needs at least classes + 5 channels");
                }
                break;
            case TaskKind::generic:
                if (dims.i_dims.empty() || dims.k_dims.empty()) {
                    throw ConfigError("generic task needs non-empty i_dims and k_dims");
                }
                for (auto v : dims.i_dims) positive(v, "i_dims[]");
                for (auto v : dims.k_dims) positive(v, "k_dims[]");
                for (auto v : dims.structure_dims) positive(v, "structure_dims[]");
                if (dims.loss == LossTag::detection) {
                    throw ConfigError("use task 'detection' for the detection loss");
                }
                if (dims.m_input != 0 && dims.m_input < dims.structure_dims.size() + 1) {
                    throw ConfigError("m_input smaller than the preserved mode count");
                }
                break;
        }
        for (const auto& h : hidden) {
            if (h.k_dims.empty()) throw ConfigError("hidden layer needs non-empty k_dims");
            for (auto v : h.k_dims) positive(v, "hidden.k_dims[]");
            if (h.activation == Activation::box) throw ConfigError("box activation is reserved for detection heads");
        }
    }
};

inline ExperimentConfig parse_config(const nlohmann::json& j) {
    try {
        ExperimentConfig c;
        c.task = parse_task(j.at("task").get<std::string>());
        const auto& d = j.at("dims");
        auto get = [&d](const char* key, std::size_t fallback = 0) {
            return d.contains(key) ? d.at(key).get<std::size_t>() : fallback;
        };
        c.dims.features = get("features");
        c.dims.classes = get("classes");
        c.dims.channels = get("channels");
        c.dims.height = get("height");
        c.dims.width = get("width");
        c.dims.grid_h = get("grid_h");
        c.dims.grid_w = get("grid_w");
        c.dims.m_input = get("m_input");
        if (d.contains("i_dims")) c.dims.i_dims = d.at("i_dims").get<std::vector<std::size_t>>();
        if (d.contains("k_dims")) c.dims.k_dims = d.at("k_dims").get<std::vector<std::size_t>>();
        if (d.contains("structure_dims")) {
            c.dims.structure_dims = d.at("structure_dims").get<std::vector<std::size_t>>();
        }
        if (d.contains("loss")) c.dims.loss = parse_loss(d.at("loss").get<std::string>());
        if (d.contains("interpreter")) c.dims.interpreter = parse_interpreter(d.at("interpreter").get<std::string>());

        if (j.contains("hidden")) {
            for (const auto& h : j.at("hidden")) {
                HiddenLayer hl;
                hl.k_dims = h.at("k_dims").get<std::vector<std::size_t>>();
                if (h.contains("activation")) hl.activation = parse_activation(h.at("activation").get<std::string>());
                if (h.contains("bias_mode")) hl.bias_mode = parse_bias_mode(h.at("bias_mode").get<std::string>());
                c.hidden.push_back(std::move(hl));
            }
        }
        c.epochs = j.value("epochs", c.epochs);
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.seed = j.value("seed", c.seed);
        if (j.contains("lambdas")) {
            const auto l = j.at("lambdas").get<std::vector<double>>();
            if (l.size() != 3) throw ConfigError("lambdas must have three entries");
            c.lambdas = {l[0], l[1], l[2]};
        }
        c.dataset_size = j.value("dataset_size", c.dataset_size);
        c.output_path = j.value("output_path", c.output_path);
        c.noise = j.value("noise", c.noise);
        c.separation = j.value("separation", c.separation);
        c.obj_threshold = j.value("obj_threshold", c.obj_threshold);
        c.iou_threshold = j.value("iou_threshold", c.iou_threshold);
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) {
        throw ConfigError("cannot open config " + path.string());
    }
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

}  // namespace gemtl::harness
