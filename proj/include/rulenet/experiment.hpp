#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rulenet/data.hpp"
#include "rulenet/train.hpp"

namespace rulenet {

struct DataSourceSpec {
    std::optional<GroundTruthRule> rule; // synthetic source
    std::size_t n_samples = 10000;
    std::optional<std::string> csv_path; // tabular source
    CsvSchema schema;
};

enum class SweepAxis { None, Lambda, Noise, TrainSize };

struct SweepSpec {
    SweepAxis axis = SweepAxis::None;
    std::vector<double> grid;
};

struct ExperimentConfig {
    DataSourceSpec data;
    HyperParams hyper = HyperParams::desk_profile();
    double split_ratio = 0.8;
    double noise_fraction = 0.0; // applied to the training split only
    double simplify_threshold = 0.025;
    SweepSpec sweep;
    std::string out_dir; // empty: no artifacts written
    std::vector<std::uint64_t> seeds = {1};

    void validate() const;
};

std::string config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const std::string& text);

// FNV-1a over the canonical config JSON; stable across runs.
std::string config_fingerprint(const ExperimentConfig& config);

struct ResultRecord {
    std::string fingerprint;
    std::uint64_t seed = 0;
    double test_accuracy = 0.0;
    std::size_t n_r = 0;
    double l_r = 0.0;
    std::string dnf_text;
    double wall_ms = 0.0;
};

// One full run: data -> split -> (noise) -> train -> decode -> simplify.
// Artifacts (checkpoint.json, report.json, history.csv, rule.txt, dnf.json,
// record.json) land in out_dir when it is set.
ResultRecord run_experiment(const ExperimentConfig& config, std::uint64_t seed,
                            const std::string& out_dir);

struct SweepRow {
    double value = 0.0;
    std::uint64_t seed = 0;
    double accuracy = 0.0;
    std::size_t n_r = 0;
    double l_r = 0.0;
    bool ok = false;
    std::string error;
};

// Grid x seeds, points run concurrently (deterministic per point). Failures
// are recorded per point; the sweep always completes. Writes
// <out_dir>/aggregate.csv when out_dir is set.
std::vector<SweepRow> run_sweep(const ExperimentConfig& config,
                                std::size_t max_workers = 2);

std::string sweep_to_csv(SweepAxis axis, const std::vector<SweepRow>& rows);
std::vector<SweepRow> sweep_from_csv(const std::string& text);

std::string axis_name(SweepAxis axis);
std::optional<SweepAxis> parse_axis(const std::string& name);

// Trend checks over sweep output (scripted acceptance of appendix curves).
struct TrendCheck {
    bool passed = false;
    std::string detail;
};

// Mean n_r per grid value must be non-increasing with the axis, allowing
// `allowed_inversions` upticks of at most `slack` conjunctions.
TrendCheck check_nr_nonincreasing(const std::vector<SweepRow>& rows,
                                  int allowed_inversions = 1, double slack = 1.0);

// All rows at a grid value: optional exact n_r and an accuracy window.
TrendCheck check_point(const std::vector<SweepRow>& rows, double value,
                       std::optional<std::size_t> expect_nr, double acc_min,
                       double acc_max);

// Every successful row reaches at least this accuracy.
TrendCheck check_accuracy_floor(const std::vector<SweepRow>& rows, double acc_min);

// Synthetic dataset as CSV (header x_0..x_{d-1},label) for gen-data.
std::string dataset_to_csv(const Dataset& ds);

} // namespace rulenet
