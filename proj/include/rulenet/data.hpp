#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rulenet/model.hpp"

namespace rulenet {

// Tabular binary-classification dataset. `features` is rows x n_features,
// raw units until split() normalizes it (train-split min/max, stored in
// meta.stats). `predefined` holds exact 0/1 predicate columns.
struct Dataset {
    std::size_t rows = 0;
    std::size_t n_features = 0;
    std::size_t n_predefined = 0;
    std::vector<double> features;
    std::vector<double> predefined;
    std::vector<std::uint8_t> labels;
    FeatureMeta meta;
    bool normalized = false;

    std::span<const double> feature_row(std::size_t r) const {
        return {features.data() + r * n_features, n_features};
    }
    std::span<const double> predefined_row(std::size_t r) const {
        return {predefined.data() + r * n_predefined, n_predefined};
    }

    // Inverse of the min-max mapping for one feature value.
    double denormalize(std::size_t feature, double value) const;
};

enum class GroundTruthRule { Toy, Ex1, Ex2, Ex3, Ex4, Ex5 };

std::optional<GroundTruthRule> parse_rule(const std::string& name);
std::string rule_name(GroundTruthRule rule);
std::size_t rule_feature_count(GroundTruthRule rule);

// Ground-truth label. Ratio predicates x_a/x_b > c are evaluated as
// x_a > c*x_b, which is equivalent on the positive unit box and has no
// singularity at x_b = 0.
bool rule_label(GroundTruthRule rule, std::span<const double> x);

// n rows with features i.i.d. uniform on [0,1]^d, labels from the rule.
Dataset gen_synthetic(GroundTruthRule rule, std::size_t n, std::uint64_t seed);

// Inverts the labels of exactly round(fraction*rows) distinct sampled rows.
Dataset flip_labels(const Dataset& ds, double fraction, std::uint64_t seed);

struct CsvSchema {
    std::string label;
    std::vector<std::string> numeric;
    std::vector<std::string> categorical;
    bool complement_literals = true; // also emit (feature != value) columns
};

// RFC-4180-style CSV with a header row. Categorical columns become
// predefined indicator literals (plus complements); numeric columns stay in
// raw units until split() normalizes them.
Dataset load_csv(const std::string& path, const CsvSchema& schema,
                 std::vector<std::string>* warnings = nullptr);

struct SplitResult {
    Dataset train;
    Dataset test;
};

// Disjoint shuffled partition with round(ratio*rows) training rows.
// Normalization stats are computed from the training side only and applied
// to both; both sides carry the stats in meta.
SplitResult split(const Dataset& ds, double ratio, std::uint64_t seed,
                  std::vector<std::string>* warnings = nullptr);

// Eval-mode truth table of every literal (learned halfspaces first, then
// predefined) with the label as last column, one row per dataset row.
struct LiteralTable {
    std::vector<std::string> headers; // literal names + "label"
    std::vector<std::uint8_t> bits;   // rows x (M+1)
    std::size_t rows = 0;
    std::size_t cols = 0;
};

LiteralTable export_literals(const ModelParams& params, const FeatureMeta& meta,
                             const Dataset& ds);
void write_literal_csv(const LiteralTable& table, const std::string& path);
LiteralTable read_literal_csv(const std::string& path);

} // namespace rulenet
