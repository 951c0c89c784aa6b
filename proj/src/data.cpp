#include "rulenet/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "rulenet/dnf.hpp"
#include "rulenet/errors.hpp"
#include "rulenet/util.hpp"

namespace rulenet {
namespace {

std::vector<std::string> default_names(std::size_t n) {
    std::vector<std::string> names;
    names.reserve(n);
    for (std::size_t i = 0; i < n; ++i) names.push_back("x_" + std::to_string(i));
    return names;
}

// Minimal RFC-4180 reader: quoted fields, escaped quotes, CRLF tolerant.
std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool any = false;
    char c;
    while (in.get(c)) {
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    field.push_back('"');
                    in.get();
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
            any = true;
            continue;
        }
        switch (c) {
            case '"': quoted = true; any = true; break;
            case ',':
                row.push_back(std::move(field));
                field.clear();
                any = true;
                break;
            case '\r': break;
            case '\n':
                if (any) {
                    row.push_back(std::move(field));
                    field.clear();
                    rows.push_back(std::move(row));
                    row.clear();
                    any = false;
                }
                break;
            default: field.push_back(c); any = true; break;
        }
    }
    if (any) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

double parse_numeric_cell(const std::string& cell, std::size_t row,
                          const std::string& column) {
    try {
        std::size_t consumed = 0;
        const double v = std::stod(cell, &consumed);
        while (consumed < cell.size() &&
               static_cast<unsigned char>(cell[consumed]) <= ' ')
            ++consumed;
        if (consumed != cell.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw DataError("unparseable numeric cell '" + cell + "' in column '" +
                        column + "' at data row " + std::to_string(row + 1));
    }
}

Dataset take_rows(const Dataset& ds, const std::vector<std::size_t>& idx) {
    Dataset out;
    out.rows = idx.size();
    out.n_features = ds.n_features;
    out.n_predefined = ds.n_predefined;
    out.meta = ds.meta;
    out.normalized = ds.normalized;
    out.features.resize(out.rows * out.n_features);
    out.predefined.resize(out.rows * out.n_predefined);
    out.labels.resize(out.rows);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const std::size_t s = idx[r];
        std::copy_n(ds.features.data() + s * ds.n_features, ds.n_features,
                    out.features.data() + r * ds.n_features);
        std::copy_n(ds.predefined.data() + s * ds.n_predefined, ds.n_predefined,
                    out.predefined.data() + r * ds.n_predefined);
        out.labels[r] = ds.labels[s];
    }
    return out;
}

} // namespace

double Dataset::denormalize(std::size_t feature, double value) const {
    const FeatureStats& s = meta.stats.at(feature);
    if (!normalized) return value;
    return s.lo + value * (s.hi - s.lo);
}

std::optional<GroundTruthRule> parse_rule(const std::string& name) {
    if (name == "toy") return GroundTruthRule::Toy;
    if (name == "ex1") return GroundTruthRule::Ex1;
    if (name == "ex2") return GroundTruthRule::Ex2;
    if (name == "ex3") return GroundTruthRule::Ex3;
    if (name == "ex4") return GroundTruthRule::Ex4;
    if (name == "ex5") return GroundTruthRule::Ex5;
    return std::nullopt;
}

std::string rule_name(GroundTruthRule rule) {
    switch (rule) {
        case GroundTruthRule::Toy: return "toy";
        case GroundTruthRule::Ex1: return "ex1";
        case GroundTruthRule::Ex2: return "ex2";
        case GroundTruthRule::Ex3: return "ex3";
        case GroundTruthRule::Ex4: return "ex4";
        case GroundTruthRule::Ex5: return "ex5";
    }
    throw ConfigError("unknown rule id");
}

std::size_t rule_feature_count(GroundTruthRule rule) {
    return rule == GroundTruthRule::Toy ? 2 : 5;
}

bool rule_label(GroundTruthRule rule, std::span<const double> x) {
    switch (rule) {
        case GroundTruthRule::Toy: // x0/x1 > 1 and x0 > 0.5
            return x[0] > x[1] && x[0] > 0.5;
        case GroundTruthRule::Ex1: // x0 > 0.25 or x1 < 0.5
            return x[0] > 0.25 || x[1] < 0.5;
        case GroundTruthRule::Ex2: // x0/x1 > 0.5 or x4 < 0.25
            return x[0] > 0.5 * x[1] || x[4] < 0.25;
        case GroundTruthRule::Ex3: // x0 + 0.5 x1 > 0.5 or x4 < 0.25
            return x[0] + 0.5 * x[1] > 0.5 || x[4] < 0.25;
        case GroundTruthRule::Ex4: // (x0<0.2 and x1+x2>0.5) or (x4/x3>1 and x1<0.5)
            return (x[0] < 0.2 && x[1] + x[2] > 0.5) || (x[4] > x[3] && x[1] < 0.5);
        case GroundTruthRule::Ex5: // (x4<0.2 and x0/x1>0.5) or (0.5x3+0.2x1>0.5) or x0<0.2
            return (x[4] < 0.2 && x[0] > 0.5 * x[1]) ||
                   (0.5 * x[3] + 0.2 * x[1] > 0.5) || x[0] < 0.2;
    }
    throw ConfigError("unknown rule id");
}

Dataset gen_synthetic(GroundTruthRule rule, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw ConfigError("gen_synthetic: n must be >= 1");
    const std::size_t d = rule_feature_count(rule);

    Dataset ds;
    ds.rows = n;
    ds.n_features = d;
    ds.features.resize(n * d);
    ds.labels.resize(n);
    ds.meta.feature_names = default_names(d);
    ds.meta.stats.assign(d, FeatureStats{});

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (std::size_t r = 0; r < n; ++r) {
        double* row = ds.features.data() + r * d;
        for (std::size_t f = 0; f < d; ++f) row[f] = uni(rng);
        ds.labels[r] = rule_label(rule, {row, d}) ? 1 : 0;
    }
    return ds;
}

Dataset flip_labels(const Dataset& ds, double fraction, std::uint64_t seed) {
    if (fraction < 0.0 || fraction > 1.0)
        throw ConfigError("flip_labels: fraction must be in [0,1]");
    const auto count = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(ds.rows)));

    Dataset out = ds;
    std::vector<std::size_t> idx(ds.rows);
    for (std::size_t i = 0; i < ds.rows; ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    // Partial Fisher-Yates: the first `count` entries are a uniform sample
    // of distinct rows.
    for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, ds.rows - 1);
        std::swap(idx[i], idx[pick(rng)]);
        out.labels[idx[i]] ^= 1;
    }
    return out;
}

Dataset load_csv(const std::string& path, const CsvSchema& schema,
                 std::vector<std::string>* warnings) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open CSV file: " + path);
    const auto rows = parse_csv(in);
    if (rows.empty()) throw DataError("CSV file has no header row: " + path);

    const auto& header = rows.front();
    auto column_of = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw DataError("missing column '" + name + "' in " + path);
        return static_cast<std::size_t>(it - header.begin());
    };

    const std::size_t label_col = column_of(schema.label);
    std::vector<std::size_t> numeric_cols, categorical_cols;
    for (const auto& c : schema.numeric) numeric_cols.push_back(column_of(c));
    for (const auto& c : schema.categorical) categorical_cols.push_back(column_of(c));

    const std::size_t n_rows = rows.size() - 1;
    if (n_rows == 0) throw DataError("CSV file has no data rows: " + path);

    Dataset ds;
    ds.rows = n_rows;
    ds.n_features = numeric_cols.size();
    ds.meta.feature_names = schema.numeric;
    ds.meta.stats.assign(ds.n_features, FeatureStats{});
    ds.features.resize(n_rows * ds.n_features);
    ds.labels.resize(n_rows);

    for (std::size_t r = 0; r < n_rows; ++r) {
        const auto& cells = rows[r + 1];
        if (cells.size() != header.size())
            throw DataError("row " + std::to_string(r + 1) + " has " +
                            std::to_string(cells.size()) + " cells, header has " +
                            std::to_string(header.size()));
        const double y = parse_numeric_cell(cells[label_col], r, schema.label);
        if (y != 0.0 && y != 1.0)
            throw DataError("non-binary label '" + cells[label_col] +
                            "' at data row " + std::to_string(r + 1));
        ds.labels[r] = y == 1.0 ? 1 : 0;
        for (std::size_t f = 0; f < numeric_cols.size(); ++f)
            ds.features[r * ds.n_features + f] =
                parse_numeric_cell(cells[numeric_cols[f]], r, schema.numeric[f]);
    }

    // One-hot predefined literals: for every distinct value an indicator and,
    // unless disabled, its complement (the rule language has no negation).
    for (std::size_t ci = 0; ci < categorical_cols.size(); ++ci) {
        std::map<std::string, std::size_t> values;
        for (std::size_t r = 0; r < n_rows; ++r)
            values.emplace(rows[r + 1][categorical_cols[ci]], values.size());
        std::size_t v = 0;
        for (auto& [value, order] : values) {
            order = v++;
            ds.meta.predefined.push_back(
                PredefinedDescriptor{schema.categorical[ci], value, true});
            if (schema.complement_literals)
                ds.meta.predefined.push_back(
                    PredefinedDescriptor{schema.categorical[ci], value, false});
        }
        const std::size_t base = ds.n_predefined;
        const std::size_t per_value = schema.complement_literals ? 2 : 1;
        ds.n_predefined += values.size() * per_value;
        ds.predefined.resize(n_rows * ds.n_predefined);
        // Rebuild row-major storage with the widened column count.
        for (std::size_t r = n_rows; r-- > 0;) {
            double* dst = ds.predefined.data() + r * ds.n_predefined;
            const double* src = ds.predefined.data() + r * base;
            std::copy_backward(src, src + base, dst + base);
            const auto& cell = rows[r + 1][categorical_cols[ci]];
            for (const auto& [value, order] : values) {
                const bool hit = cell == value;
                dst[base + order * per_value] = hit ? 1.0 : 0.0;
                if (schema.complement_literals)
                    dst[base + order * per_value + 1] = hit ? 0.0 : 1.0;
            }
        }
    }

    if (warnings) {
        for (std::size_t f = 0; f < ds.n_features; ++f) {
            double lo = ds.features[f], hi = ds.features[f];
            for (std::size_t r = 1; r < n_rows; ++r) {
                lo = std::min(lo, ds.features[r * ds.n_features + f]);
                hi = std::max(hi, ds.features[r * ds.n_features + f]);
            }
            if (lo == hi)
                warnings->push_back("column '" + ds.meta.feature_names[f] +
                                    "' is constant; it will normalize to 0");
        }
    }
    return ds;
}

SplitResult split(const Dataset& ds, double ratio, std::uint64_t seed,
                  std::vector<std::string>* warnings) {
    if (!(ratio > 0.0 && ratio < 1.0))
        throw ConfigError("split: ratio must be in (0,1)");
    const auto n_train = static_cast<std::size_t>(
        std::llround(ratio * static_cast<double>(ds.rows)));
    if (n_train == 0 || n_train == ds.rows)
        throw DataError("split: one side of the split is empty");

    std::vector<std::size_t> idx(ds.rows);
    for (std::size_t i = 0; i < ds.rows; ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);

    SplitResult res;
    res.train = take_rows(ds, {idx.begin(), idx.begin() + n_train});
    res.test = take_rows(ds, {idx.begin() + n_train, idx.end()});

    // Min-max stats from the training side only.
    std::vector<FeatureStats> stats(ds.n_features);
    for (std::size_t f = 0; f < ds.n_features; ++f) {
        double lo = res.train.features[f];
        double hi = res.train.features[f];
        for (std::size_t r = 1; r < res.train.rows; ++r) {
            const double v = res.train.features[r * ds.n_features + f];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        stats[f] = {lo, hi};
        if (lo == hi && warnings)
            warnings->push_back("feature '" + ds.meta.feature_names[f] +
                                "' has a degenerate range; normalized to 0");
    }
    auto apply = [&](Dataset& part) {
        for (std::size_t r = 0; r < part.rows; ++r)
            for (std::size_t f = 0; f < ds.n_features; ++f) {
                double& v = part.features[r * ds.n_features + f];
                const double range = stats[f].hi - stats[f].lo;
                v = range == 0.0 ? 0.0 : (v - stats[f].lo) / range;
            }
        part.meta.stats = stats;
        part.normalized = true;
    };
    apply(res.train);
    apply(res.test);
    return res;
}

LiteralTable export_literals(const ModelParams& params, const FeatureMeta& meta,
                             const Dataset& ds) {
    if (ds.n_features != params.n_features)
        throw ShapeError("export_literals: dataset/model feature count mismatch");
    if (ds.n_predefined != params.n_predefined)
        throw ShapeError("export_literals: dataset/model predefined count mismatch");

    const std::size_t m = params.n_learned;
    LiteralTable t;
    t.rows = ds.rows;
    t.cols = params.n_literals_total() + 1;
    t.bits.resize(t.rows * t.cols);

    for (std::size_t k = 0; k < m; ++k) {
        // Header names in original feature units.
        std::vector<double> col(params.n_features);
        for (std::size_t f = 0; f < params.n_features; ++f)
            col[f] = params.literal_weights[f * m + k];
        std::vector<double> coeffs(params.n_features, 0.0);
        double bias = params.literal_biases[k];
        for (std::size_t f = 0; f < params.n_features; ++f) {
            const FeatureStats s =
                f < meta.stats.size() ? meta.stats[f] : FeatureStats{};
            const double range = s.hi - s.lo;
            if (range == 0.0) continue;
            coeffs[f] = col[f] / range;
            bias -= col[f] * s.lo / range;
        }
        t.headers.push_back(
            render_literal(Literal::halfspace(std::move(coeffs), bias, k),
                           meta.feature_names));
    }
    for (const auto& d : meta.predefined) t.headers.push_back(d.text());
    t.headers.push_back("label");

    // Eval-mode truth values; features must be in the units the model was
    // trained on (normalize raw rows through the stored stats).
    for (std::size_t r = 0; r < ds.rows; ++r) {
        std::vector<double> x(ds.feature_row(r).begin(), ds.feature_row(r).end());
        if (!ds.normalized) {
            for (std::size_t f = 0; f < x.size(); ++f) {
                const FeatureStats s =
                    f < meta.stats.size() ? meta.stats[f] : FeatureStats{};
                const double range = s.hi - s.lo;
                x[f] = range == 0.0 ? 0.0 : (x[f] - s.lo) / range;
            }
        }
        const auto phi = literal_forward(x, params, 1.0, Mode::Eval);
        std::uint8_t* row = t.bits.data() + r * t.cols;
        for (std::size_t k = 0; k < m; ++k) row[k] = phi[k] != 0.0 ? 1 : 0;
        for (std::size_t p = 0; p < ds.n_predefined; ++p)
            row[m + p] = ds.predefined[r * ds.n_predefined + p] != 0.0 ? 1 : 0;
        row[t.cols - 1] = ds.labels[r];
    }
    return t;
}

void write_literal_csv(const LiteralTable& table, const std::string& path) {
    std::string out;
    for (std::size_t c = 0; c < table.headers.size(); ++c) {
        if (c) out += ',';
        out += csv_quote(table.headers[c]);
    }
    out += '\n';
    for (std::size_t r = 0; r < table.rows; ++r) {
        for (std::size_t c = 0; c < table.cols; ++c) {
            if (c) out += ',';
            out += table.bits[r * table.cols + c] ? '1' : '0';
        }
        out += '\n';
    }
    write_file_atomic(path, out);
}

LiteralTable read_literal_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open literal CSV: " + path);
    const auto rows = parse_csv(in);
    if (rows.size() < 2) throw DataError("literal CSV has no data rows: " + path);
    LiteralTable t;
    t.headers = rows.front();
    t.cols = t.headers.size();
    t.rows = rows.size() - 1;
    t.bits.resize(t.rows * t.cols);
    for (std::size_t r = 0; r < t.rows; ++r) {
        const auto& cells = rows[r + 1];
        if (cells.size() != t.cols)
            throw DataError("literal CSV row " + std::to_string(r + 1) +
                            " has wrong cell count");
        for (std::size_t c = 0; c < t.cols; ++c) {
            if (cells[c] != "0" && cells[c] != "1")
                throw DataError("literal CSV cell is not 0/1 at row " +
                                std::to_string(r + 1));
            t.bits[r * t.cols + c] = cells[c] == "1" ? 1 : 0;
        }
    }
    return t;
}

} // namespace rulenet
