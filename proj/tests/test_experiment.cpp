#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "rulenet/dnf.hpp"
#include "rulenet/errors.hpp"
#include "rulenet/experiment.hpp"
#include "rulenet/serialize.hpp"
#include "rulenet/train.hpp"
#include "rulenet/util.hpp"
#include "test_util.hpp"

using namespace rulenet;

namespace {

ExperimentConfig tiny_config(GroundTruthRule rule, std::size_t n = 600,
                             std::size_t epochs = 60) {
    ExperimentConfig cfg;
    cfg.data.rule = rule;
    cfg.data.n_samples = n;
    cfg.hyper = HyperParams::desk_profile();
    cfg.hyper.epochs_total = epochs;
    cfg.hyper.restart_period = std::max<std::size_t>(1, epochs / 2);
    return cfg;
}

} // namespace

TEST_CASE("config json round trip preserves the fingerprint") {
    ExperimentConfig cfg = tiny_config(GroundTruthRule::Ex3);
    cfg.sweep.axis = SweepAxis::Lambda;
    cfg.sweep.grid = {1e-4, 1e-2};
    cfg.seeds = {3, 4};
    cfg.noise_fraction = 0.05;
    const ExperimentConfig back = config_from_json(config_to_json(cfg));
    CHECK(config_to_json(back) == config_to_json(cfg));
    CHECK(config_fingerprint(back) == config_fingerprint(cfg));

    ExperimentConfig other = cfg;
    other.hyper.lambda_and = 0.5;
    CHECK(config_fingerprint(other) != config_fingerprint(cfg));

    // The output location is not part of the experiment identity.
    ExperimentConfig moved = cfg;
    moved.out_dir = "/somewhere/else";
    CHECK(config_fingerprint(moved) == config_fingerprint(cfg));
}

TEST_CASE("config validation errors") {
    ExperimentConfig cfg;
    CHECK_THROWS_AS(cfg.validate(), ConfigError); // no source
    cfg.data.rule = GroundTruthRule::Ex1;
    cfg.data.csv_path = "also.csv";
    CHECK_THROWS_AS(cfg.validate(), ConfigError); // two sources
    cfg.data.csv_path.reset();
    cfg.sweep.axis = SweepAxis::Lambda;
    CHECK_THROWS_AS(cfg.validate(), ConfigError); // empty grid
    cfg.sweep.grid = {1e-2};
    cfg.validate();
}

TEST_CASE("run_experiment writes artifacts that re-validate exactly") {
    const std::string dir = testutil::temp_dir("exp");
    ExperimentConfig cfg = tiny_config(GroundTruthRule::Ex1, 500, 40);
    const ResultRecord rec = run_experiment(cfg, 11, dir);

    CHECK(rec.seed == 11);
    CHECK(rec.test_accuracy >= 0.0);
    CHECK(rec.test_accuracy <= 1.0);
    CHECK(rec.fingerprint == config_fingerprint(cfg));

    namespace fs = std::filesystem;
    for (const char* name : {"checkpoint.json", "report.json", "history.csv",
                             "rule.txt", "dnf.json", "record.json"})
        CHECK(fs::exists(fs::path(dir) / name));

    // Reload the checkpoint, rebuild the same split, re-evaluate: accuracy
    // must reproduce bit-for-bit.
    const Checkpoint ckpt = load_checkpoint(dir + "/checkpoint.json");
    const Dataset full = gen_synthetic(GroundTruthRule::Ex1, 500, derive_seed(11, 1));
    const SplitResult parts = split(full, cfg.split_ratio, derive_seed(11, 2));
    CHECK(evaluate_accuracy(ckpt.params, parts.test) == rec.test_accuracy);

    // Same seed: identical record.
    const ResultRecord again = run_experiment(cfg, 11, "");
    CHECK(again.test_accuracy == rec.test_accuracy);
    CHECK(again.dnf_text == rec.dnf_text);
    CHECK(again.fingerprint == rec.fingerprint);
}

TEST_CASE("checkpoint json round trip is value-exact") {
    std::mt19937_64 rng(4242);
    Checkpoint ckpt;
    ckpt.params = init_params(5, 3, 2, 4, rng);
    // Awkward values that expose lossy formatting.
    ckpt.params.literal_weights[0] = 0.1;
    ckpt.params.literal_weights[1] = 1e-300;
    ckpt.params.literal_weights[2] = -0.30000000000000004;
    ckpt.meta.feature_names = {"a", "b", "c", "d", "e"};
    ckpt.meta.stats.assign(5, FeatureStats{-1.25, 7.5});
    ckpt.meta.predefined = {{"color", "red", true}, {"color", "red", false}};

    const Checkpoint back = checkpoint_from_json(checkpoint_to_json(ckpt));
    CHECK(back.params.literal_weights == ckpt.params.literal_weights);
    CHECK(back.params.literal_biases == ckpt.params.literal_biases);
    CHECK(back.params.and_logits == ckpt.params.and_logits);
    CHECK(back.params.or_logits == ckpt.params.or_logits);
    CHECK(back.params.n_predefined == 2);
    CHECK(back.meta.predefined == ckpt.meta.predefined);
    CHECK(back.meta.stats == ckpt.meta.stats);

    CHECK_THROWS_AS(checkpoint_from_json("{not json"), DataError);
    CHECK_THROWS_AS(checkpoint_from_json("{}"), DataError);
}

TEST_CASE("run_sweep: one row per grid point and seed, failures recorded") {
    ExperimentConfig cfg = tiny_config(GroundTruthRule::Ex1, 400, 20);
    cfg.sweep.axis = SweepAxis::Lambda;
    cfg.sweep.grid = {1e-3, 1e-2};
    cfg.seeds = {1, 2};
    const auto rows = run_sweep(cfg);
    REQUIRE(rows.size() == 4);
    for (const auto& r : rows) CHECK(r.ok);

    // Same grid through the CSV round trip.
    const auto parsed = sweep_from_csv(sweep_to_csv(SweepAxis::Lambda, rows));
    REQUIRE(parsed.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(parsed[i].value == rows[i].value);
        CHECK(parsed[i].seed == rows[i].seed);
        CHECK(parsed[i].accuracy == rows[i].accuracy);
        CHECK(parsed[i].n_r == rows[i].n_r);
    }

    // A point that cannot train is recorded, not thrown.
    ExperimentConfig bad = cfg;
    bad.sweep.axis = SweepAxis::TrainSize;
    bad.sweep.grid = {1.0, 400.0}; // the 1-sample point must fail
    bad.seeds = {1};
    const auto mixed = run_sweep(bad);
    REQUIRE(mixed.size() == 2);
    CHECK_FALSE(mixed[0].ok);
    CHECK(!mixed[0].error.empty());
    CHECK(mixed[1].ok);
}

TEST_CASE("train-size sweep axis sets the training-split size") {
    ExperimentConfig cfg = tiny_config(GroundTruthRule::Ex1, 999, 10);
    cfg.sweep.axis = SweepAxis::TrainSize;
    cfg.sweep.grid = {200};
    cfg.seeds = {5};
    const std::string dir = testutil::temp_dir("ts");
    cfg.out_dir = dir;
    const auto rows = run_sweep(cfg);
    REQUIRE(rows.size() == 1);
    REQUIRE(rows[0].ok);
    // 200 train rows -> 250 generated at the 0.8 split.
    const std::string hist =
        read_file(dir + "/train-size=200/seed=5/history.csv");
    CHECK(hist.find("epoch,loss") == 0);
    const Checkpoint ckpt =
        load_checkpoint(dir + "/train-size=200/seed=5/checkpoint.json");
    CHECK(ckpt.params.n_features == 5);
}

TEST_CASE("trend checks") {
    std::vector<SweepRow> rows;
    auto add = [&](double v, std::size_t nr, double acc) {
        SweepRow r;
        r.value = v;
        r.seed = 1;
        r.n_r = nr;
        r.accuracy = acc;
        r.ok = true;
        rows.push_back(r);
    };
    add(1e-4, 6, 0.99);
    add(1e-2, 4, 0.99);
    add(1e-1, 5, 0.98); // one small inversion
    add(1.0, 1, 0.77);

    CHECK(check_nr_nonincreasing(rows).passed);
    CHECK(check_nr_nonincreasing(rows, 0).passed == false);
    CHECK(check_point(rows, 1.0, 1, 0.70, 0.85).passed);
    CHECK_FALSE(check_point(rows, 1.0, 2, 0.70, 0.85).passed);
    CHECK_FALSE(check_point(rows, 0.5, 1, 0.0, 1.0).passed); // no such value
    CHECK(check_accuracy_floor(rows, 0.75).passed);
    CHECK_FALSE(check_accuracy_floor(rows, 0.95).passed);

    rows[2].n_r = 7; // inversion of 3 > slack 1
    CHECK_FALSE(check_nr_nonincreasing(rows).passed);
}

TEST_CASE("report json carries the protocol switches") {
    TrainReport report;
    report.history = {{0, 0.5, 1.0, 0}};
    report.has_best = true;
    report.best_epoch = 0;
    report.best_loss = 0.5;
    report.test_accuracy = 0.75;
    report.restart_resets_tau = false;
    report.seed = 9;
    const std::string text = report_to_json(report);
    CHECK(text.find("\"restart_resets_tau\": false") != std::string::npos);
    CHECK(text.find("\"seed\": 9") != std::string::npos);
    CHECK(history_to_csv(report) == "epoch,loss,tau,restart_index\n0,0.5,1,0\n");
}
