#pragma once

// Checkpoint directory layout:
//   manifest.json          layer count, head count, per-layer activation / bias mode / mode counts,
//                          learning rate, step, seed
//   layer<N>.weight.gemt   GEMT tensors, one weight and one bias per layer
//   layer<N>.bias.gemt

#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

#include "gemtl/layer.hpp"
#include "gemtl/network.hpp"
#include "gemtl/serialize.hpp"

namespace gemtl::harness {

inline void save_checkpoint(const std::filesystem::path& dir, const TrainState& state) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["format"] = "gemtl-checkpoint";
    manifest["version"] = 1;
    manifest["layer_count"] = state.layers.size();
    manifest["head_count"] = state.head_count;
    manifest["learning_rate"] = state.learning_rate;
    manifest["step"] = state.step;
    manifest["seed"] = state.rng.seed();
    manifest["layers"] = nlohmann::json::array();
    for (std::size_t l = 0; l < state.layers.size(); ++l) {
        const Layer& layer = state.layers[l];
        const std::string stem = "layer" + std::to_string(l);
        save_tensor(dir / (stem + ".weight.gemt"), layer.weight);
        save_tensor(dir / (stem + ".bias.gemt"), layer.bias);
        manifest["layers"].push_back({{"activation", std::string(to_string(layer.activation))},
                                      {"bias_mode", std::string(to_string(layer.bias_mode))},
                                      {"output_modes", layer.output_modes},
                                      {"contracted_modes", layer.contracted_modes},
                                      {"weight", stem + ".weight.gemt"},
                                      {"bias", stem + ".bias.gemt"}});
    }
    std::ofstream os(dir / "manifest.json");
    os << manifest.dump(2) << '\n';
    if (!os) {
        throw FormatError("cannot write manifest in " + dir.string());
    }
}

inline TrainState load_checkpoint(const std::filesystem::path& dir) {
    std::ifstream is(dir / "manifest.json");
    if (!is) {
        throw FormatError("no manifest.json in " + dir.string());
    }
    try {
        nlohmann::json manifest;
        is >> manifest;
        if (manifest.at("format") != "gemtl-checkpoint" || manifest.at("version") != 1) {
            throw FormatError("unsupported checkpoint format in " + dir.string());
        }
        TrainState s;
        s.head_count = manifest.at("head_count").get<std::size_t>();
        s.learning_rate = manifest.at("learning_rate").get<double>();
        s.step = manifest.at("step").get<std::uint64_t>();
        s.rng = Prng(manifest.at("seed").get<std::uint64_t>());
        for (const auto& lj : manifest.at("layers")) {
            Layer layer;
            layer.activation = parse_activation(lj.at("activation").get<std::string>());
            layer.bias_mode = parse_bias_mode(lj.at("bias_mode").get<std::string>());
            layer.output_modes = lj.at("output_modes").get<std::size_t>();
            layer.contracted_modes = lj.at("contracted_modes").get<std::size_t>();
            layer.weight = load_tensor(dir / lj.at("weight").get<std::string>());
            layer.bias = load_tensor(dir / lj.at("bias").get<std::string>());
            s.layers.push_back(std::move(layer));
        }
        if (s.layers.size() != manifest.at("layer_count").get<std::size_t>()) {
            throw FormatError("manifest layer_count disagrees with its layer list");
        }
        s.validate();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed checkpoint manifest: " + std::string(e.what()));
    }
}

}  // namespace gemtl::harness
