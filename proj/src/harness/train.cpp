// Copyright 2026-present the mhc-workbench project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mhc/harness/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>

#include "mhc/harness/tasks.hpp"
#include "mhc/params_io.hpp"
#include "mhc/sinkhorn.hpp"
#include "mhc/stability.hpp"

namespace mhc::harness {

namespace {

constexpr double kRowTolerance = 1e-12;

std::string
fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

ad::ParameterSet
all_parameters(const ModelState& model) {
    ad::ParameterSet params = ad::collect_parameters(model.stack);
    params.insert(model.head.begin(), model.head.end());
    return params;
}

void
store_parameters(ModelState& model, const ad::ParameterSet& params) {
    ad::assign_parameters(model.stack, params);
    for (auto& [key, value] : model.head) {
        value = params.at(key);
    }
}

bool
in_open_range(const Matrix& m, double lo, double hi) {
    return std::all_of(m.values().begin(), m.values().end(), [&](double v) { return v > lo && v < hi; });
}

/// Plain forward pass over a batch: gains, DS extrema and, for mHC, the
/// constraint checks on every token and layer.
void
diagnose(const ExperimentConfig& cfg, const Task& task, const ModelState& model, const Batch& batch,
         MetricsRecord& record, MetricsTrace& trace) {
    const std::vector<StreamState> tokens = task.input_states(model.stack, model.head, batch);
    const SequenceResult result = stack_forward(tokens, model.stack);
    const GainReport gains = gain_profile(result.traces);
    record.forward_gain = gains.layer_forward;
    record.backward_gain = gains.layer_backward;

    record.max_row_dev = 0.0;
    record.max_col_dev = 0.0;
    record.min_entry = std::numeric_limits<double>::infinity();
    const bool check = cfg.variant == Variant::Mhc;
    for (std::size_t t = 0; t < result.traces.size(); ++t) {
        for (std::size_t l = 0; l < result.traces[t].size(); ++l) {
            const MappingSet& ms = result.traces[t][l];
            const DsDiagnostics ds = ds_diagnostics(ms.h_res);
            record.max_row_dev = std::max(record.max_row_dev, ds.max_row_dev);
            record.max_col_dev = std::max(record.max_col_dev, ds.max_col_dev);
            record.min_entry = std::min(record.min_entry, ds.min_entry);
            if (!check) {
                continue;
            }
            const std::string where =
                "step " + std::to_string(record.step) + " token " + std::to_string(t) + " layer " + std::to_string(l);
            auto violate = [&](const std::string& what) {
                ++trace.invariant_violations;
                if (trace.violations.size() < 32) {
                    trace.violations.push_back(where + ": " + what);
                }
            };
            if (cfg.mask.use_pre && !in_open_range(ms.h_pre, 0.0, 1.0)) {
                violate("h_pre outside (0, 1)");
            }
            if (cfg.mask.use_post && !in_open_range(ms.h_post, 0.0, 2.0)) {
                violate("h_post outside (0, 2)");
            }
            if (cfg.mask.use_res) {
                if (ds.max_row_dev > kRowTolerance) {
                    violate("row sum deviation " + fmt(ds.max_row_dev));
                }
                if (ds.max_col_dev > cfg.ds_col_tolerance) {
                    violate("column sum deviation " + fmt(ds.max_col_dev));
                }
                if (!(ds.min_entry > 0.0)) {
                    violate("non-positive entry");
                }
            }
        }
    }
}

struct StepOutcome {
    double loss = 0.0;
    double grad_norm = 0.0;
    ad::GradientBundle grads;
};

StepOutcome
evaluate(const Task& task, const ModelState& model, const Batch& batch) {
    ad::Tape tape;
    const ad::ParameterVars vars = ad::register_parameters(tape, all_parameters(model));
    const ad::Var loss = task.record_loss(tape, model.stack, vars, batch);
    StepOutcome out;
    out.loss = tape.value(loss)[0];
    out.grads = tape.backward(loss);
    out.grad_norm = ad::gradient_norm(out.grads);
    return out;
}

}  // namespace

ModelState
init_model(const ExperimentConfig& cfg) {
    cfg.validate();
    ModelState model;
    model.stack = make_stack(cfg.variant, cfg.n, cfg.width, cfg.depth, cfg.layer_kind, cfg.init_policy, cfg.seed, 0.0,
                             cfg.layer_scale);
    model.stack.mask = cfg.mask;
    for (MappingParams& p : model.stack.mappings) {
        p.sinkhorn.t_max = cfg.t_max;
    }
    model.head = Task::create(cfg)->init_head();
    return model;
}

TrainResult
train(const ExperimentConfig& cfg) {
    TrainResult result;
    result.config = cfg;
    result.model = init_model(cfg);
    const std::unique_ptr<Task> task = Task::create(cfg);
    MetricsTrace& trace = result.trace;
    ModelState& model = result.model;

    std::map<ad::ParamKey, Matrix> velocity;
    auto log_record = [&](std::size_t step, const StepOutcome& outcome, const Batch& batch) {
        MetricsRecord record;
        record.step = step;
        record.loss = outcome.loss;
        record.grad_norm = outcome.grad_norm;
        try {
            diagnose(cfg, *task, model, batch, record, trace);
        } catch (const PropagationError&) {
            trace.diverged = true;
        }
        trace.records.push_back(std::move(record));
    };
    auto finite = [](const StepOutcome& o) { return std::isfinite(o.loss) && std::isfinite(o.grad_norm); };

    if (cfg.steps == 0) {
        trace.initial_loss = evaluate(*task, model, task->batch(0)).loss;
        return result;
    }

    for (std::size_t step = 0; step < cfg.steps; ++step) {
        const Batch batch = task->batch(step);
        const StepOutcome outcome = evaluate(*task, model, batch);
        if (step == 0) {
            trace.initial_loss = outcome.loss;
        }
        trace.step_losses.push_back(outcome.loss);
        if (!finite(outcome)) {
            trace.diverged = true;
            MetricsRecord record;
            record.step = step;
            record.loss = outcome.loss;
            record.grad_norm = outcome.grad_norm;
            trace.records.push_back(std::move(record));
            return result;
        }
        if (step % cfg.log_every == 0) {
            log_record(step, outcome, batch);
            if (trace.diverged) {
                return result;
            }
        }

        ad::ParameterSet params = all_parameters(model);
        for (auto& [key, value] : params) {
            if (!outcome.grads.contains(key)) {
                continue;
            }
            const Matrix& g = outcome.grads.at(key);
            if (g.rows() != value.rows() || g.cols() != value.cols()) {
                continue;
            }
            auto [it, fresh] = velocity.try_emplace(key, value.rows(), value.cols(), 0.0);
            Matrix& v = it->second;
            for (std::size_t i = 0; i < value.size(); ++i) {
                v[i] = cfg.momentum * v[i] - cfg.learning_rate * g[i];
                value[i] += v[i];
            }
        }
        store_parameters(model, params);
    }

    const Batch batch = task->batch(cfg.steps);
    const StepOutcome final_outcome = evaluate(*task, model, batch);
    if (!finite(final_outcome)) {
        trace.diverged = true;
        MetricsRecord record;
        record.step = cfg.steps;
        record.loss = final_outcome.loss;
        record.grad_norm = final_outcome.grad_norm;
        trace.records.push_back(std::move(record));
        return result;
    }
    log_record(cfg.steps, final_outcome, batch);
    return result;
}

std::vector<double>
smoothed_losses(const MetricsTrace& trace, std::size_t window) {
    if (window == 0) {
        throw std::invalid_argument("smoothing window must be positive");
    }
    std::vector<double> out;
    for (std::size_t start = 0; start + window <= trace.step_losses.size(); start += window) {
        double total = 0.0;
        for (std::size_t i = start; i < start + window; ++i) {
            total += trace.step_losses[i];
        }
        out.push_back(total / static_cast<double>(window));
    }
    return out;
}

std::string
metrics_csv(const MetricsTrace& trace) {
    std::size_t depth = 0;
    for (const MetricsRecord& r : trace.records) {
        depth = std::max(depth, r.forward_gain.size());
    }
    std::string out = "step,loss,grad_norm,max_row_dev,max_col_dev,min_entry";
    for (std::size_t l = 0; l < depth; ++l) {
        out += ",forward_gain_" + std::to_string(l);
    }
    for (std::size_t l = 0; l < depth; ++l) {
        out += ",backward_gain_" + std::to_string(l);
    }
    out += "\n";
    for (const MetricsRecord& r : trace.records) {
        out += std::to_string(r.step) + "," + fmt(r.loss) + "," + fmt(r.grad_norm) + "," + fmt(r.max_row_dev) + "," +
               fmt(r.max_col_dev) + "," + fmt(r.min_entry);
        for (std::size_t l = 0; l < depth; ++l) {
            out += "," + (l < r.forward_gain.size() ? fmt(r.forward_gain[l]) : std::string());
        }
        for (std::size_t l = 0; l < depth; ++l) {
            out += "," + (l < r.backward_gain.size() ? fmt(r.backward_gain[l]) : std::string());
        }
        out += "\n";
    }
    return out;
}

std::string
losses_csv(const MetricsTrace& trace) {
    std::string out = "step,loss\n";
    for (std::size_t s = 0; s < trace.step_losses.size(); ++s) {
        out += std::to_string(s) + "," + fmt(trace.step_losses[s]) + "\n";
    }
    return out;
}

std::string
loss_gap_csv(const MetricsTrace& trace, const MetricsTrace& baseline) {
    std::string out = "step,loss_gap\n";
    const std::size_t count = std::min(trace.step_losses.size(), baseline.step_losses.size());
    for (std::size_t s = 0; s < count; ++s) {
        out += std::to_string(s) + "," + fmt(trace.step_losses[s] - baseline.step_losses[s]) + "\n";
    }
    return out;
}

nlohmann::json
checkpoint_to_json(const ExperimentConfig& cfg, const ModelState& model) {
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < model.stack.depth(); ++l) {
        const LayerFunction& f = model.stack.layers[l];
        nlohmann::json weights = nlohmann::json::object();
        const auto names = LayerFunction::weight_names(f.kind);
        for (std::size_t w = 0; w < names.size(); ++w) {
            weights[std::string(names[w])] = matrix_to_json(f.weights[w]);
        }
        layers.push_back({{"mapping", mapping_params_to_json(model.stack.mappings[l])},
                          {"layer_function",
                           {{"kind", std::string(to_string(f.kind))},
                            {"C", f.width},
                            {"rms_epsilon", f.rms_epsilon},
                            {"weights", weights}}}});
    }
    nlohmann::json head = nlohmann::json::object();
    for (const auto& [key, value] : model.head) {
        head[key.name] = matrix_to_json(value);
    }
    return {{"config", config_to_json(cfg)},
            {"rms_epsilon", model.stack.rms_epsilon},
            {"layers", layers},
            {"head", head}};
}

std::pair<ExperimentConfig, ModelState>
checkpoint_from_json(const nlohmann::json& j) {
    try {
        ExperimentConfig cfg = config_from_json(j.at("config"));
        ModelState model;
        model.stack.variant = cfg.variant;
        model.stack.n = cfg.n;
        model.stack.width = cfg.width;
        model.stack.mask = cfg.mask;
        model.stack.rms_epsilon = j.value("rms_epsilon", model.stack.rms_epsilon);
        for (const nlohmann::json& layer : j.at("layers")) {
            model.stack.mappings.push_back(mapping_params_from_json(layer.at("mapping")));
            const nlohmann::json& fj = layer.at("layer_function");
            LayerFunction f;
            f.kind = parse_layer_kind(fj.at("kind").get<std::string>());
            f.width = fj.at("C").get<std::size_t>();
            f.rms_epsilon = fj.value("rms_epsilon", f.rms_epsilon);
            for (std::string_view name : LayerFunction::weight_names(f.kind)) {
                f.weights.push_back(matrix_from_json(fj.at("weights").at(std::string(name))));
            }
            model.stack.layers.push_back(std::move(f));
        }
        for (const auto& [name, value] : j.at("head").items()) {
            model.head[{-1, name}] = matrix_from_json(value);
        }
        if (model.stack.depth() != cfg.depth) {
            throw ValidationError("checkpoint has " + std::to_string(model.stack.depth()) + " layers, config says " +
                                  std::to_string(cfg.depth));
        }
        model.stack.validate();
        return {cfg, std::move(model)};
    } catch (const ValidationError&) {
        throw;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed checkpoint: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ValidationError(std::string("malformed checkpoint: ") + e.what());
    }
}

std::string
write_run(const std::string& out_root, const TrainResult& result) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::path(out_root) / ("run-" + config_hash(result.config));
    fs::create_directories(dir);
    const MetricsTrace& trace = result.trace;
    write_text_file((dir / "config.json").string(), config_to_json(result.config).dump(2) + "\n");
    write_text_file((dir / "metrics.csv").string(), metrics_csv(trace));
    write_text_file((dir / "losses.csv").string(), losses_csv(trace));
    write_text_file((dir / "checkpoint.json").string(), checkpoint_to_json(result.config, result.model).dump() + "\n");
    const double final_loss = trace.records.empty() ? trace.initial_loss : trace.records.back().loss;
    nlohmann::json summary = {{"initial_loss", trace.initial_loss},
                              {"final_loss", final_loss},
                              {"steps_completed", trace.step_losses.size()},
                              {"diverged", trace.diverged},
                              {"invariant_violations", trace.invariant_violations},
                              {"violations", trace.violations}};
    if (!std::isfinite(final_loss)) {
        summary["final_loss"] = nullptr;
    }
    write_text_file((dir / "summary.json").string(), summary.dump(2) + "\n");
    return dir.string();
}

std::string
write_run(const std::string& out_root, const TrainResult& result, const MetricsTrace& baseline) {
    const std::string dir = write_run(out_root, result);
    write_text_file((std::filesystem::path(dir) / "loss_gap.csv").string(), loss_gap_csv(result.trace, baseline));
    return dir;
}

}  // namespace mhc::harness
