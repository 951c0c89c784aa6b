// Command-line front end: data generation, training, sweeps, rule
// inspection, literal export, and trend verification over sweep outputs.
//
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 training or
// verification failure.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include "rulenet/dnf.hpp"
#include "rulenet/errors.hpp"
#include "rulenet/experiment.hpp"
#include "rulenet/kernels.hpp"
#include "rulenet/serialize.hpp"
#include "rulenet/util.hpp"

namespace {

using namespace rulenet;

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::string rule;
    std::string csv;
    std::string schema_path;
    std::optional<std::size_t> n_samples;
    std::optional<double> lambda;
    std::optional<std::size_t> epochs;
    std::optional<std::size_t> restart_period;
    std::optional<std::size_t> m;
    std::optional<std::size_t> J;
    std::optional<double> noise;
    std::optional<double> split_ratio;
    bool paper_scale = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "experiment config JSON file");
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--seed", o.seed, "run seed");
    cmd->add_option("--rule", o.rule, "synthetic rule id (toy|ex1..ex5)");
    cmd->add_option("--csv", o.csv, "CSV dataset path");
    cmd->add_option("--schema", o.schema_path, "CSV schema JSON file");
    cmd->add_option("-n,--samples", o.n_samples, "synthetic sample count");
    cmd->add_option("--lambda", o.lambda, "sparsity penalty (all three)");
    cmd->add_option("--epochs", o.epochs, "total epochs");
    cmd->add_option("--restart-period", o.restart_period, "epochs between restarts");
    cmd->add_option("-m,--literals", o.m, "learned literal count");
    cmd->add_option("-J,--conjunctions", o.J, "conjunction node count");
    cmd->add_option("--noise", o.noise, "label-flip fraction on the training split");
    cmd->add_option("--split-ratio", o.split_ratio, "train fraction (default 0.8)");
    cmd->add_flag("--paper-scale", o.paper_scale,
                  "use the full 2.5e5-epoch schedule instead of the desk profile");
}

// Flags override config-file fields.
ExperimentConfig build_config(const CommonOpts& o) {
    ExperimentConfig cfg;
    if (!o.config_path.empty()) cfg = config_from_json(read_file(o.config_path));
    if (o.paper_scale) {
        cfg.hyper.epochs_total = 250000;
        cfg.hyper.restart_period = 10000;
    }
    if (!o.rule.empty()) {
        const auto rule = parse_rule(o.rule);
        if (!rule) throw ConfigError("unknown rule id: " + o.rule);
        cfg.data.rule = rule;
        cfg.data.csv_path.reset();
    }
    if (!o.csv.empty()) {
        cfg.data.csv_path = o.csv;
        cfg.data.rule.reset();
        if (!o.schema_path.empty()) {
            const auto doc = config_from_json("{\"data\":{\"csv\":\"x\",\"schema\":" +
                                              read_file(o.schema_path) + "}}");
            cfg.data.schema = doc.data.schema;
        }
    }
    if (o.n_samples) cfg.data.n_samples = *o.n_samples;
    if (o.lambda) cfg.hyper.set_all_lambdas(*o.lambda);
    if (o.epochs) cfg.hyper.epochs_total = *o.epochs;
    if (o.restart_period) cfg.hyper.restart_period = *o.restart_period;
    if (o.m) cfg.hyper.n_literals = *o.m;
    if (o.J) cfg.hyper.n_conjunctions = *o.J;
    if (o.noise) cfg.noise_fraction = *o.noise;
    if (o.split_ratio) cfg.split_ratio = *o.split_ratio;
    if (o.seed) cfg.seeds = {*o.seed};
    if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
    if (const char* env = std::getenv("RULENET_OUT"); env && cfg.out_dir.empty())
        cfg.out_dir = env;
    return cfg;
}

int run_train(const CommonOpts& o) {
    const ExperimentConfig cfg = build_config(o);
    const std::uint64_t seed = o.seed.value_or(cfg.seeds.front());
    const ResultRecord rec = run_experiment(cfg, seed, cfg.out_dir);
    std::printf("seed %llu  accuracy %.4f  n_r %zu  l_r %.2f  (%.1f s)\n",
                static_cast<unsigned long long>(rec.seed), rec.test_accuracy, rec.n_r,
                rec.l_r, rec.wall_ms / 1000.0);
    std::printf("%s\n", rec.dnf_text.c_str());
    if (!cfg.out_dir.empty())
        std::printf("artifacts written to %s\n", cfg.out_dir.c_str());
    return 0;
}

int run_sweep_cmd(const CommonOpts& o, const std::string& axis_str,
                  std::vector<double> grid, std::vector<std::uint64_t> seeds) {
    ExperimentConfig cfg = build_config(o);
    if (!axis_str.empty()) {
        const auto axis = parse_axis(axis_str);
        if (!axis || *axis == SweepAxis::None)
            throw ConfigError("unknown sweep axis: " + axis_str);
        cfg.sweep.axis = *axis;
    }
    if (!grid.empty()) cfg.sweep.grid = std::move(grid);
    if (!seeds.empty()) cfg.seeds = std::move(seeds);
    const auto rows = run_sweep(cfg);
    std::printf("%s", sweep_to_csv(cfg.sweep.axis, rows).c_str());
    std::size_t failed = 0;
    for (const auto& r : rows) failed += r.ok ? 0 : 1;
    if (failed) std::fprintf(stderr, "%zu point(s) failed\n", failed);
    return 0;
}

int run_gen_data(const CommonOpts& o, const std::string& out_file) {
    const auto rule = parse_rule(o.rule);
    if (!rule) throw ConfigError("gen-data requires --rule (toy|ex1..ex5)");
    const Dataset ds = gen_synthetic(*rule, o.n_samples.value_or(10000),
                                     o.seed.value_or(1));
    const std::string csv = dataset_to_csv(ds);
    if (out_file.empty() || out_file == "-") {
        std::fwrite(csv.data(), 1, csv.size(), stdout);
    } else {
        write_file_atomic(out_file, csv);
        std::printf("wrote %zu rows to %s\n", ds.rows, out_file.c_str());
    }
    return 0;
}

Dataset dataset_from_opts(const CommonOpts& o, const Checkpoint& ckpt) {
    if (!o.rule.empty()) {
        const auto rule = parse_rule(o.rule);
        if (!rule) throw ConfigError("unknown rule id: " + o.rule);
        Dataset ds = gen_synthetic(*rule, o.n_samples.value_or(2000),
                                   o.seed.value_or(1));
        // Evaluate in the units the checkpoint was trained in.
        for (std::size_t r = 0; r < ds.rows; ++r)
            for (std::size_t f = 0; f < ds.n_features; ++f) {
                const FeatureStats s = f < ckpt.meta.stats.size()
                                           ? ckpt.meta.stats[f]
                                           : FeatureStats{};
                const double range = s.hi - s.lo;
                double& v = ds.features[r * ds.n_features + f];
                v = range == 0.0 ? 0.0 : (v - s.lo) / range;
            }
        ds.normalized = true;
        ds.meta.stats = ckpt.meta.stats;
        return ds;
    }
    if (!o.csv.empty()) {
        CsvSchema schema;
        if (!o.schema_path.empty()) {
            const auto doc = config_from_json("{\"data\":{\"csv\":\"x\",\"schema\":" +
                                              read_file(o.schema_path) + "}}");
            schema = doc.data.schema;
        }
        return load_csv(o.csv, schema);
    }
    throw ConfigError("need --rule or --csv to build an evaluation dataset");
}

int run_eval(const CommonOpts& o, const std::string& model_path) {
    const Checkpoint ckpt = load_checkpoint(model_path);
    const Dataset ds = dataset_from_opts(o, ckpt);
    const double acc = evaluate_accuracy(ckpt.params, ds);
    std::printf("rows %zu  accuracy %.6f\n", ds.rows, acc);
    return 0;
}

int run_render(const std::string& model_path, int precision, bool raw,
               double threshold) {
    const Checkpoint ckpt = load_checkpoint(model_path);
    Dnf dnf = decode(ckpt.params, ckpt.meta);
    if (!raw) dnf = simplify(dnf, ckpt.meta.stats, threshold);
    std::printf("%s\n", render(dnf, ckpt.meta.feature_names, precision).c_str());
    return 0;
}

int run_export(const CommonOpts& o, const std::string& model_path,
               const std::string& out_file) {
    const Checkpoint ckpt = load_checkpoint(model_path);
    const Dataset ds = dataset_from_opts(o, ckpt);
    const LiteralTable table = export_literals(ckpt.params, ckpt.meta, ds);
    write_literal_csv(table, out_file);
    std::printf("wrote %zu rows x %zu columns to %s\n", table.rows, table.cols,
                out_file.c_str());
    return 0;
}

struct VerifyOpts {
    std::string sweep_csv;
    bool nr_nonincreasing = false;
    int allow_inversions = 1;
    double inversion_slack = 1.0;
    std::optional<double> at_value;
    std::optional<std::size_t> expect_nr;
    double acc_min = 0.0;
    double acc_max = 1.0;
    std::optional<double> acc_floor;
};

int run_verify(const VerifyOpts& v) {
    const auto rows = sweep_from_csv(read_file(v.sweep_csv));
    bool all_ok = true;
    auto report = [&](const char* name, const TrendCheck& check) {
        std::printf("%-18s %s  %s\n", name, check.passed ? "PASS" : "FAIL",
                    check.detail.c_str());
        all_ok = all_ok && check.passed;
    };
    if (v.nr_nonincreasing)
        report("nr-nonincreasing",
               check_nr_nonincreasing(rows, v.allow_inversions, v.inversion_slack));
    if (v.at_value)
        report("point", check_point(rows, *v.at_value, v.expect_nr, v.acc_min,
                                    v.acc_max));
    if (v.acc_floor) report("accuracy-floor", check_accuracy_floor(rows, *v.acc_floor));
    return all_ok ? 0 : 3;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"halfspace-literal DNF rule learner"};
    app.require_subcommand(1);

    std::string kernels_opt = "auto";
    app.add_option("--kernels", kernels_opt, "kernel lane: auto|scalar|avx2");

    CommonOpts train_opts, sweep_opts, gen_opts, eval_opts, export_opts;

    auto* cmd_train = app.add_subcommand("train", "train one model and decode its rule");
    add_common(cmd_train, train_opts);

    auto* cmd_sweep = app.add_subcommand("sweep", "grid of experiments");
    add_common(cmd_sweep, sweep_opts);
    std::string sweep_axis;
    std::vector<double> sweep_grid;
    std::vector<std::uint64_t> sweep_seeds;
    cmd_sweep->add_option("--axis", sweep_axis, "lambda|noise|train-size");
    cmd_sweep->add_option("--grid", sweep_grid, "axis values")->delimiter(',');
    cmd_sweep->add_option("--seeds", sweep_seeds, "seed list")->delimiter(',');

    auto* cmd_gen = app.add_subcommand("gen-data", "write a synthetic dataset as CSV");
    add_common(cmd_gen, gen_opts);
    std::string gen_out;
    cmd_gen->add_option("--file", gen_out, "output CSV path (default stdout)");

    auto* cmd_eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    add_common(cmd_eval, eval_opts);
    std::string eval_model;
    cmd_eval->add_option("--model", eval_model, "checkpoint JSON")->required();

    auto* cmd_render = app.add_subcommand("render-rules", "print the decoded rule");
    std::string render_model;
    int render_precision = 2;
    bool render_raw = false;
    double render_threshold = 0.025;
    cmd_render->add_option("--model", render_model, "checkpoint JSON")->required();
    cmd_render->add_option("--precision", render_precision, "decimals (default 2)");
    cmd_render->add_flag("--raw", render_raw, "skip simplification");
    cmd_render->add_option("--threshold", render_threshold,
                           "coefficient prune threshold (default 0.025)");

    auto* cmd_export = app.add_subcommand(
        "export-literals", "write the eval-mode literal truth table as CSV");
    add_common(cmd_export, export_opts);
    std::string export_model, export_out;
    cmd_export->add_option("--model", export_model, "checkpoint JSON")->required();
    cmd_export->add_option("--file", export_out, "output CSV path")->required();

    auto* cmd_verify = app.add_subcommand("verify", "trend checks over a sweep CSV");
    VerifyOpts verify_opts;
    cmd_verify->add_option("--sweep", verify_opts.sweep_csv, "aggregate.csv path")
        ->required();
    cmd_verify->add_flag("--nr-nonincreasing", verify_opts.nr_nonincreasing,
                         "mean n_r must not increase with the axis");
    cmd_verify->add_option("--allow-inversions", verify_opts.allow_inversions,
                           "tolerated n_r upticks (default 1)");
    cmd_verify->add_option("--inversion-slack", verify_opts.inversion_slack,
                           "max size of a tolerated uptick (default 1)");
    cmd_verify->add_option("--at", verify_opts.at_value, "grid value to check");
    cmd_verify->add_option("--expect-nr", verify_opts.expect_nr, "required n_r at --at");
    cmd_verify->add_option("--acc-min", verify_opts.acc_min, "min accuracy at --at");
    cmd_verify->add_option("--acc-max", verify_opts.acc_max, "max accuracy at --at");
    cmd_verify->add_option("--acc-floor", verify_opts.acc_floor,
                           "min accuracy over every point");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        rulenet::kernels::set_active_isa(kernels_opt == "scalar"
                                             ? rulenet::kernels::Isa::Scalar
                                         : kernels_opt == "avx2"
                                             ? rulenet::kernels::Isa::Avx2
                                             : rulenet::kernels::Isa::Auto);
        if (cmd_train->parsed()) return run_train(train_opts);
        if (cmd_sweep->parsed())
            return run_sweep_cmd(sweep_opts, sweep_axis, sweep_grid, sweep_seeds);
        if (cmd_gen->parsed()) return run_gen_data(gen_opts, gen_out);
        if (cmd_eval->parsed()) return run_eval(eval_opts, eval_model);
        if (cmd_render->parsed())
            return run_render(render_model, render_precision, render_raw,
                              render_threshold);
        if (cmd_export->parsed())
            return run_export(export_opts, export_model, export_out);
        if (cmd_verify->parsed()) return run_verify(verify_opts);
        std::fprintf(stderr, "no subcommand\n");
        return 1;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const ShapeError& e) {
        std::fprintf(stderr, "shape error: %s\n", e.what());
        return 1;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
