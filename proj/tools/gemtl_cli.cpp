// Command-line driver: train, eval, flops and rho subcommands over JSON experiment configs.
//
// Exit codes: 0 success, 2 configuration error, 3 training divergence, 1 anything else.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "gemtl/cost.hpp"
#include "gemtl/harness/checkpoint.hpp"
#include "gemtl/harness/config.hpp"
#include "gemtl/harness/experiment.hpp"
#include "gemtl/io_json.hpp"

namespace {

using gemtl::harness::ExperimentConfig;
using gemtl::harness::MetricRecord;

constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;

std::string record_line(const MetricRecord& r) {
    return nlohmann::json{{"epoch", r.epoch},
                          {"loss", r.loss},
                          {"metric_name", r.metric_name},
                          {"metric_value", r.metric_value}}
        .dump();
}

int run_train(const std::string& config_path) {
    const ExperimentConfig cfg = gemtl::harness::load_config(config_path);
    const auto ds = gemtl::harness::generate_dataset(cfg);
    std::ofstream metrics_file;
    if (!cfg.output_path.empty()) {
        std::filesystem::create_directories(cfg.output_path);
        metrics_file.open(std::filesystem::path(cfg.output_path) / "metrics.jsonl");
    }
    const auto result = gemtl::harness::train(cfg, ds, [&](const MetricRecord& r) {
        const std::string line = record_line(r);
        std::cout << line << '\n';
        if (metrics_file.is_open()) metrics_file << line << '\n';
    });
    if (!cfg.output_path.empty()) {
        gemtl::harness::save_checkpoint(cfg.output_path, result.state);
    }
    return 0;
}

int run_eval(const std::string& checkpoint, const std::string& config_path, const std::string& detections_path) {
    const ExperimentConfig cfg = gemtl::harness::load_config(config_path);
    const auto state = gemtl::harness::load_checkpoint(checkpoint);
    const auto ds = gemtl::harness::generate_dataset(cfg);
    for (const auto& r : gemtl::harness::evaluate(state, ds, cfg)) {
        std::cout << record_line(r) << '\n';
    }
    if (!detections_path.empty()) {
        if (cfg.task != gemtl::harness::TaskKind::detection) {
            throw gemtl::ConfigError("--detections only applies to the detection task");
        }
        const auto plan = gemtl::harness::model_plan(cfg);
        const auto fwd = gemtl::network_forward(state, ds.inputs);
        const auto ev = gemtl::harness::evaluate_forward(cfg, plan, fwd, ds);
        std::ofstream os(detections_path);
        gemtl::write_detections_jsonl(os, ev.detections);
    }
    return 0;
}

int run_flops(const std::string& config_path) {
    const ExperimentConfig cfg = gemtl::harness::load_config(config_path);
    const auto plan = gemtl::harness::model_plan(cfg);
    const auto state = gemtl::harness::init_state(cfg, plan);
    gemtl::Tensor x(gemtl::Shape(plan.input_i_dims).concat(gemtl::Shape(plan.task.config.j_dims)));
    nlohmann::json out;
    out["layers"] = nlohmann::json::array();
    std::uint64_t time = 0, memory = 0, flops = 0, measured = 0;
    const auto fwd = gemtl::network_forward(state, x);
    for (std::size_t l = 0; l < state.layers.size(); ++l) {
        const auto report = gemtl::measured_cost(state.layers[l], fwd.inputs[l]);
        out["layers"].push_back(report);
        time += report.time_cost;
        memory += report.memory_cost;
        flops += report.flops;
        measured += report.measured_mults.value_or(0);
    }
    out["total"] = {{"time_cost", time}, {"memory_cost", memory}, {"flops", flops}, {"measured_mults", measured}};
    std::cout << out.dump(2) << '\n';
    return 0;
}

int run_rho(const std::string& config_path) {
    const ExperimentConfig cfg = gemtl::harness::load_config(config_path);
    const auto plan = gemtl::harness::task_plan(cfg);
    nlohmann::json out;
    out["task"] = std::string(gemtl::harness::to_string(cfg.task));
    out["config"] = plan.config;
    out["rho"] = gemtl::preservation_index(plan.config);
    std::cout << out.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GE-MLP multidimensional task learning: train, evaluate and cost-model tensor-weight networks"};
    app.require_subcommand(1);

    std::string config, checkpoint, detections;

    auto* train = app.add_subcommand("train", "Train on synthetic data; stream metrics as JSON lines");
    train->add_option("--config", config, "Experiment config (JSON)")->required();

    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the config's dataset");
    eval->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required();
    eval->add_option("--config", config, "Experiment config (JSON)")->required();
    eval->add_option("--detections", detections, "Write decoded boxes here as JSON lines (detection only)");

    auto* flops = app.add_subcommand("flops", "Analytic and measured cost of every layer");
    flops->add_option("--config", config, "Experiment config (JSON)")->required();

    auto* rho = app.add_subcommand("rho", "Task tuple and structure preservation index");
    rho->add_option("--config", config, "Experiment config (JSON)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*train) return run_train(config);
        if (*eval) return run_eval(checkpoint, config, detections);
        if (*flops) return run_flops(config);
        if (*rho) return run_rho(config);
    } catch (const gemtl::DivergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitDivergence;
    } catch (const gemtl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const gemtl::ShapeError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const gemtl::FormatError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
