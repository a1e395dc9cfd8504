#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "gemtl/cost.hpp"
#include "gemtl/detection.hpp"
#include "gemtl/task.hpp"

namespace gemtl {

inline void to_json(nlohmann::json& j, const TaskConfig& c) {
    j = nlohmann::json{{"p", c.p},
                       {"m", c.m},
                       {"k_dims", c.k_dims},
                       {"j_dims", c.j_dims},
                       {"loss", std::string(to_string(c.loss))},
                       {"interpreter", std::string(to_string(c.interpreter))},
                       {"m_input", c.m_input}};
}

inline void from_json(const nlohmann::json& j, TaskConfig& c) {
    c.p = j.at("p").get<std::size_t>();
    c.m = j.at("m").get<std::size_t>();
    c.k_dims = j.at("k_dims").get<std::vector<std::size_t>>();
    c.j_dims = j.at("j_dims").get<std::vector<std::size_t>>();
    c.loss = parse_loss(j.at("loss").get<std::string>());
    c.interpreter = parse_interpreter(j.at("interpreter").get<std::string>());
    c.m_input = j.at("m_input").get<std::size_t>();
    c.validate();
}

inline void to_json(nlohmann::json& j, const DetectionBox& b) {
    j = nlohmann::json{{"cx", b.cx},
                       {"cy", b.cy},
                       {"w", b.w},
                       {"h", b.h},
                       {"objectness", b.objectness},
                       {"class_id", b.class_id},
                       {"class_score", b.class_score}};
}

inline void from_json(const nlohmann::json& j, DetectionBox& b) {
    b.cx = j.at("cx").get<double>();
    b.cy = j.at("cy").get<double>();
    b.w = j.at("w").get<double>();
    b.h = j.at("h").get<double>();
    b.objectness = j.at("objectness").get<double>();
    b.class_id = j.at("class_id").get<std::size_t>();
    b.class_score = j.at("class_score").get<double>();
}

inline void to_json(nlohmann::json& j, const CostReport& r) {
    j = nlohmann::json{{"time_cost", r.time_cost},
                       {"memory_cost", r.memory_cost},
                       {"flops", r.flops},
                       {"shared_bias", r.shared_bias}};
    j["measured_mults"] = r.measured_mults ? nlohmann::json(*r.measured_mults) : nlohmann::json(nullptr);
}

/// One JSON object per line; each carries the batch index alongside the box fields.
inline void write_detections_jsonl(std::ostream& os, const std::vector<std::vector<DetectionBox>>& per_batch) {
    for (std::size_t b = 0; b < per_batch.size(); ++b) {
        for (const auto& box : per_batch[b]) {
            nlohmann::json j = box;
            j["batch"] = b;
            os << j.dump() << '\n';
        }
    }
}

}  // namespace gemtl
