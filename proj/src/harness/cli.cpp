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

#include "mhc/harness/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <optional>

#include <CLI11.hpp>

#include "mhc/harness/analyze.hpp"
#include "mhc/harness/grad_check.hpp"
#include "mhc/harness/sinkhorn_check.hpp"
#include "mhc/harness/train.hpp"
#include "mhc/systems_model.hpp"

namespace mhc::harness {

namespace {

/// Flags shared by train and analyze; unset flags leave the config alone.
struct ConfigFlags {
    std::string config_path;
    std::optional<std::string> variant;
    std::optional<std::size_t> n;
    std::optional<std::size_t> width;
    std::optional<std::size_t> depth;
    std::optional<std::string> layer_kind;
    std::optional<int> t_max;
    std::optional<std::string> init_policy;
    std::optional<double> learning_rate;
    std::optional<double> momentum;
    std::optional<std::size_t> steps;
    std::optional<std::size_t> batch_size;
    std::optional<std::string> task;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> log_every;
    bool no_res = false;
    bool no_pre = false;
    bool no_post = false;

    void
    attach(CLI::App* app) {
        app->add_option("--config", config_path, "Flat JSON config file");
        app->add_option("--variant", variant, "baseline | hc | mhc");
        app->add_option("--n", n, "Expansion rate");
        app->add_option("--c", width, "Stream width C");
        app->add_option("--l", depth, "Layer count L");
        app->add_option("--layer-function", layer_kind, "zero | linear | mlp-prenorm | toy-attention");
        app->add_option("--t-max", t_max, "Sinkhorn iterations");
        app->add_option("--init", init_policy, "residual-emulation | uniform");
        app->add_option("--lr", learning_rate, "Step size");
        app->add_option("--momentum", momentum, "Momentum coefficient");
        app->add_option("--steps", steps, "Optimizer steps");
        app->add_option("--batch-size", batch_size, "Tokens per batch");
        app->add_option("--task", task, "synthetic-regression | char-sequence");
        app->add_option("--seed", seed, "Random seed");
        app->add_option("--log-every", log_every, "Logging cadence in steps");
        app->add_flag("--no-res", no_res, "Replace h_res by the identity");
        app->add_flag("--no-pre", no_pre, "Replace h_pre by the uniform 1/n read-out");
        app->add_flag("--no-post", no_post, "Replace h_post by ones");
    }

    nlohmann::json
    overrides() const {
        nlohmann::json j = nlohmann::json::object();
        auto put = [&](const char* key, const auto& opt) {
            if (opt) {
                j[key] = *opt;
            }
        };
        put("variant", variant);
        put("n", n);
        put("C", width);
        put("L", depth);
        put("layer_function", layer_kind);
        put("sinkhorn_t_max", t_max);
        put("init_policy", init_policy);
        put("learning_rate", learning_rate);
        put("momentum", momentum);
        put("steps", steps);
        put("batch_size", batch_size);
        put("task", task);
        put("seed", seed);
        put("log_every", log_every);
        if (no_res) j["use_res"] = false;
        if (no_pre) j["use_pre"] = false;
        if (no_post) j["use_post"] = false;
        return j;
    }

    ExperimentConfig
    resolve() const {
        ExperimentConfig cfg;
        if (!config_path.empty()) {
            merge_config(cfg, read_json_file(config_path));
        }
        merge_config(cfg, overrides());
        cfg.validate();
        return cfg;
    }
};

std::string
fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void
emit(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty()) {
        out << text;
    } else {
        const auto parent = std::filesystem::path(path).parent_path();
        if (!parent.empty()) {
            std::filesystem::create_directories(parent);
        }
        write_text_file(path, text);
    }
}

int
run_train(const ConfigFlags& flags, const std::string& out_root, bool compare_baseline, std::ostream& out) {
    const ExperimentConfig cfg = flags.resolve();
    const TrainResult result = train(cfg);
    std::string dir;
    if (compare_baseline) {
        ExperimentConfig base_cfg = cfg;
        base_cfg.variant = Variant::Baseline;
        const TrainResult baseline = train(base_cfg);
        dir = write_run(out_root, result, baseline.trace);
    } else {
        dir = write_run(out_root, result);
    }
    const MetricsTrace& trace = result.trace;
    const double final_loss = trace.records.empty() ? trace.initial_loss : trace.records.back().loss;
    out << "run " << dir << "\n"
        << "initial_loss " << fmt(trace.initial_loss) << "\n"
        << "final_loss " << fmt(final_loss) << "\n"
        << "invariant_violations " << trace.invariant_violations << "\n";
    if (trace.diverged) {
        out << "diverged at step " << trace.step_losses.size() - 1 << "\n";
        return kExitDivergence;
    }
    if (trace.invariant_violations > 0) {
        for (const std::string& v : trace.violations) {
            out << "violation " << v << "\n";
        }
        return kExitInvariant;
    }
    return kExitOk;
}

int
run_analyze(const ConfigFlags& flags, const std::string& checkpoint, const std::string& out_dir,
            const std::string& demo, double noise, std::ostream& out) {
    if (!demo.empty()) {
        if (demo != "divergence") {
            throw ValidationError("unknown demo '" + demo + "'");
        }
        const DivergenceDemo d = divergence_demo(flags.n.value_or(8), flags.depth.value_or(60),
                                                 flags.seed.value_or(0), noise, flags.t_max.value_or(20));
        write_divergence_demo(out_dir, d);
        out << "unconstrained_max_composite_forward " << fmt(d.unconstrained.max_composite_forward()) << "\n"
            << "projected_max_composite_backward " << fmt(d.projected.max_composite_backward()) << "\n";
        return kExitOk;
    }
    ExperimentConfig cfg;
    ModelState model;
    if (!checkpoint.empty()) {
        if (!std::filesystem::exists(checkpoint)) {
            throw ValidationError("checkpoint '" + checkpoint + "' not found");
        }
        std::tie(cfg, model) = checkpoint_from_json(read_json_file(checkpoint));
    } else {
        cfg = flags.resolve();
        model = init_model(cfg);
    }
    const AnalyzeResult result = analyze_model(cfg, model);
    write_analysis(out_dir, result);
    out << "max_layer_forward_gain "
        << fmt(*std::max_element(result.report.layer_forward.begin(), result.report.layer_forward.end())) << "\n"
        << "max_composite_forward_gain " << fmt(result.report.max_composite_forward()) << "\n"
        << "max_composite_backward_gain " << fmt(result.report.max_composite_backward()) << "\n";
    return kExitOk;
}

std::string
cost_model_text(IoVariant variant, std::uint64_t n, std::uint64_t width, std::uint64_t bytes,
                const std::string& format) {
    const IoCostBreakdown cost = io_cost(variant, n, width);
    const std::uint64_t unit = bytes == 0 ? 1 : bytes;
    if (format == "json") {
        nlohmann::json rows = nlohmann::json::array();
        for (const IoRow& r : cost.rows) {
            rows.push_back({{"operation", r.operation},
                            {"read", r.read * unit},
                            {"write", r.write * unit},
                            {"merge_path", r.merge_path}});
        }
        return nlohmann::json{{"variant", std::string(to_string(variant))},
                              {"n", n},
                              {"C", width},
                              {"unit", bytes == 0 ? "elements" : "bytes"},
                              {"rows", rows},
                              {"total_read", cost.total_read * unit},
                              {"total_write", cost.total_write * unit}}
                   .dump(2) +
               "\n";
    }
    if (format != "csv") {
        throw ValidationError("unknown format '" + format + "'");
    }
    std::string text = "operation,read,write,merge_path\n";
    for (const IoRow& r : cost.rows) {
        text += r.operation + "," + std::to_string(r.read * unit) + "," + std::to_string(r.write * unit) + "," +
                (r.merge_path ? "1" : "0") + "\n";
    }
    text += "total," + std::to_string(cost.total_read * unit) + "," + std::to_string(cost.total_write * unit) + ",\n";
    return text;
}

}  // namespace

int
run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"mhc: manifold-constrained hyper-connection workbench"};
    app.require_subcommand(1);

    ConfigFlags train_flags;
    std::string train_out = "runs";
    bool compare_baseline = false;
    CLI::App* train_cmd = app.add_subcommand("train", "Train a toy model and write a run directory");
    train_flags.attach(train_cmd);
    train_cmd->add_option("--out", train_out, "Root directory for run outputs");
    train_cmd->add_flag("--compare-baseline", compare_baseline, "Also train the baseline and write loss_gap.csv");

    ConfigFlags analyze_flags;
    std::string checkpoint;
    std::string analyze_out = "analysis";
    std::string demo;
    double noise = 0.2;
    CLI::App* analyze_cmd = app.add_subcommand("analyze", "Gain profile and heatmaps on a held-out sequence");
    analyze_flags.attach(analyze_cmd);
    analyze_cmd->add_option("--checkpoint", checkpoint, "checkpoint.json from a run directory");
    analyze_cmd->add_option("--out", analyze_out, "Output directory");
    analyze_cmd->add_option("--demo", demo, "Scripted demo instead of a model: divergence");
    analyze_cmd->add_option("--noise", noise, "Noise scale of the divergence demo");

    SinkhornCheckOptions sk;
    std::string sk_out;
    CLI::App* sk_cmd = app.add_subcommand("sinkhorn-check", "Sweep the projection on random inputs");
    sk_cmd->add_option("--n", sk.n, "Matrix size");
    sk_cmd->add_option("--t-max", sk.t_max, "Iterations");
    sk_cmd->add_option("--trials", sk.trials, "Random inputs");
    sk_cmd->add_option("--seed", sk.seed, "Random seed");
    sk_cmd->add_option("--lo", sk.lo, "Lower bound of input entries");
    sk_cmd->add_option("--hi", sk.hi, "Upper bound of input entries");
    sk_cmd->add_option("--grad-trials", sk.grad_trials, "Trials with a gradient check");
    sk_cmd->add_option("--out", sk_out, "Summary JSON path (default stdout)");

    std::string cost_variant = "hc";
    std::uint64_t cost_n = 1;
    std::uint64_t cost_c = 0;
    std::uint64_t bytes = 0;
    std::string cost_format = "csv";
    std::string cost_out;
    CLI::App* cost_cmd = app.add_subcommand("cost-model", "Per-token memory traffic of the residual stream");
    cost_cmd->add_option("--variant", cost_variant, "residual | hc | hc_fused");
    cost_cmd->add_option("--n", cost_n, "Expansion rate");
    cost_cmd->add_option("--c", cost_c, "Stream width C")->required();
    cost_cmd->add_option("--bytes-per-element", bytes, "Report bytes instead of elements");
    cost_cmd->add_option("--format", cost_format, "csv | json");
    cost_cmd->add_option("--out", cost_out, "Output path (default stdout)");

    std::uint64_t plan_n = 0;
    std::uint64_t plan_l = 0;
    std::uint64_t plan_c = 1;
    std::optional<std::uint64_t> stage_layers;
    std::string plan_out;
    CLI::App* plan_cmd = app.add_subcommand("plan-recompute", "Choose the recompute block size");
    plan_cmd->add_option("--n", plan_n, "Expansion rate")->required();
    plan_cmd->add_option("--l", plan_l, "Layer count")->required();
    plan_cmd->add_option("--c", plan_c, "Stream width C");
    plan_cmd->add_option("--stage-layers", stage_layers, "Layers per pipeline stage");
    plan_cmd->add_option("--out", plan_out, "Output path (default stdout)");

    GradCheckOptions gc;
    std::string gc_variant = "mhc";
    std::string gc_kind = "mlp-prenorm";
    std::string gc_mode = "recompute";
    CLI::App* gc_cmd = app.add_subcommand("grad-check", "Tape gradients against finite differences");
    gc_cmd->add_option("--variant", gc_variant, "baseline | hc | mhc");
    gc_cmd->add_option("--n", gc.n, "Expansion rate");
    gc_cmd->add_option("--c", gc.width, "Stream width C");
    gc_cmd->add_option("--l", gc.depth, "Layer count");
    gc_cmd->add_option("--layer-function", gc_kind, "zero | linear | mlp-prenorm | toy-attention");
    gc_cmd->add_option("--tokens", gc.tokens, "Sequence length");
    gc_cmd->add_option("--seed", gc.seed, "Random seed");
    gc_cmd->add_option("--tolerance", gc.tolerance, "Maximum relative error");
    gc_cmd->add_option("--sinkhorn-mode", gc_mode, "store | recompute");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    try {
        if (train_cmd->parsed()) {
            return run_train(train_flags, train_out, compare_baseline, out);
        }
        if (analyze_cmd->parsed()) {
            return run_analyze(analyze_flags, checkpoint, analyze_out, demo, noise, out);
        }
        if (sk_cmd->parsed()) {
            const SinkhornCheckSummary s = sinkhorn_check(sk);
            emit(summary_to_json(sk, s).dump(2) + "\n", sk_out, out);
            return kExitOk;
        }
        if (cost_cmd->parsed()) {
            emit(cost_model_text(parse_io_variant(cost_variant), cost_n, cost_c, bytes, cost_format), cost_out, out);
            return kExitOk;
        }
        if (plan_cmd->parsed()) {
            const RecomputePlan plan = plan_recompute(plan_n, plan_c, plan_l, stage_layers);
            nlohmann::json j = {{"n", plan_n},
                                {"L", plan_l},
                                {"C", plan_c},
                                {"L_r", plan.block},
                                {"continuous_optimum", plan.continuous_optimum},
                                {"resident_elements", plan.resident_elements},
                                {"transient_elements", plan.transient_elements},
                                {"total_elements", plan.total_elements}};
            if (stage_layers) {
                j["stage_layers"] = *stage_layers;
            }
            emit(j.dump(2) + "\n", plan_out, out);
            return kExitOk;
        }
        if (gc_cmd->parsed()) {
            gc.variant = parse_variant(gc_variant);
            gc.layer_kind = parse_layer_kind(gc_kind);
            if (gc_mode == "store") {
                gc.sinkhorn_mode = ad::SinkhornBackward::Store;
            } else if (gc_mode != "recompute") {
                throw ValidationError("unknown sinkhorn mode '" + gc_mode + "'");
            }
            const GradCheckResult r = grad_check(gc);
            out << nlohmann::json{{"max_rel_error", r.max_rel_error},
                                  {"worst", r.worst},
                                  {"compared", r.compared},
                                  {"passed", r.passed}}
                       .dump(2)
                << "\n";
            return r.passed ? kExitOk : kExitInvariant;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitValidation;
}

}  // namespace mhc::harness
