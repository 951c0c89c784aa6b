#include "rulenet/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <thread>

#include "rulenet/dnf.hpp"
#include "rulenet/errors.hpp"
#include "rulenet/serialize.hpp"
#include "rulenet/util.hpp"

namespace rulenet {

using nlohmann::json;

namespace {

constexpr std::uint64_t kSeedTagData = 1;
constexpr std::uint64_t kSeedTagSplit = 2;
constexpr std::uint64_t kSeedTagNoise = 3;

json hyper_to_json(const HyperParams& hp) {
    return {
        {"m", hp.n_literals},
        {"J", hp.n_conjunctions},
        {"lambda_and", hp.lambda_and},
        {"lambda_or", hp.lambda_or},
        {"lambda_p", hp.lambda_p},
        {"tau0", hp.tau0},
        {"gamma", hp.gamma},
        {"tau_min", hp.tau_min},
        {"epochs_total", hp.epochs_total},
        {"restart_period", hp.restart_period},
        {"batch_size", hp.batch_size},
        {"learning_rate", hp.learning_rate},
        {"adam_beta1", hp.adam_beta1},
        {"adam_beta2", hp.adam_beta2},
        {"adam_eps", hp.adam_eps},
        {"restart_resets_tau", hp.restart_resets_tau},
        {"epoch_unit", hp.epoch_unit == EpochUnit::Passes ? "passes" : "steps"},
    };
}

void hyper_from_json(const json& j, HyperParams& hp) {
    if (j.contains("m")) hp.n_literals = j.at("m").get<std::size_t>();
    if (j.contains("J")) hp.n_conjunctions = j.at("J").get<std::size_t>();
    if (j.contains("lambda")) hp.set_all_lambdas(j.at("lambda").get<double>());
    if (j.contains("lambda_and")) hp.lambda_and = j.at("lambda_and").get<double>();
    if (j.contains("lambda_or")) hp.lambda_or = j.at("lambda_or").get<double>();
    if (j.contains("lambda_p")) hp.lambda_p = j.at("lambda_p").get<double>();
    if (j.contains("tau0")) hp.tau0 = j.at("tau0").get<double>();
    if (j.contains("gamma")) hp.gamma = j.at("gamma").get<double>();
    if (j.contains("tau_min")) hp.tau_min = j.at("tau_min").get<double>();
    if (j.contains("epochs_total"))
        hp.epochs_total = j.at("epochs_total").get<std::size_t>();
    if (j.contains("restart_period"))
        hp.restart_period = j.at("restart_period").get<std::size_t>();
    if (j.contains("batch_size")) hp.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("learning_rate"))
        hp.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("adam_beta1")) hp.adam_beta1 = j.at("adam_beta1").get<double>();
    if (j.contains("adam_beta2")) hp.adam_beta2 = j.at("adam_beta2").get<double>();
    if (j.contains("adam_eps")) hp.adam_eps = j.at("adam_eps").get<double>();
    if (j.contains("restart_resets_tau"))
        hp.restart_resets_tau = j.at("restart_resets_tau").get<bool>();
    if (j.contains("epoch_unit"))
        hp.epoch_unit = j.at("epoch_unit").get<std::string>() == "steps"
                            ? EpochUnit::Steps
                            : EpochUnit::Passes;
}

std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

} // namespace

void ExperimentConfig::validate() const {
    const bool has_rule = data.rule.has_value();
    const bool has_csv = data.csv_path.has_value();
    if (has_rule == has_csv)
        throw ConfigError("exactly one dataset source (rule or csv) required");
    if (has_rule && data.n_samples < 2)
        throw ConfigError("synthetic dataset needs n >= 2");
    if (!(split_ratio > 0.0 && split_ratio < 1.0))
        throw ConfigError("split_ratio must be in (0,1)");
    if (noise_fraction < 0.0 || noise_fraction > 1.0)
        throw ConfigError("noise fraction must be in [0,1]");
    if (sweep.axis != SweepAxis::None && sweep.grid.empty())
        throw ConfigError("sweep grid must be nonempty when an axis is set");
    if (seeds.empty()) throw ConfigError("at least one seed required");
    hyper.validate();
}

std::string config_to_json(const ExperimentConfig& c) {
    json data;
    if (c.data.rule) {
        data["rule"] = rule_name(*c.data.rule);
        data["n"] = c.data.n_samples;
    }
    if (c.data.csv_path) {
        data["csv"] = *c.data.csv_path;
        data["schema"] = {{"label", c.data.schema.label},
                          {"numeric", c.data.schema.numeric},
                          {"categorical", c.data.schema.categorical},
                          {"complement_literals", c.data.schema.complement_literals}};
    }
    json doc = {
        {"data", data},
        {"hyper", hyper_to_json(c.hyper)},
        {"split_ratio", c.split_ratio},
        {"noise", c.noise_fraction},
        {"simplify_threshold", c.simplify_threshold},
        {"out", c.out_dir},
        {"seeds", c.seeds},
    };
    if (c.sweep.axis != SweepAxis::None)
        doc["sweep"] = {{"axis", axis_name(c.sweep.axis)}, {"grid", c.sweep.grid}};
    return doc.dump(2);
}

ExperimentConfig config_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    try {
        ExperimentConfig c;
        c.hyper = HyperParams::desk_profile();
        if (doc.contains("data")) {
            const auto& d = doc.at("data");
            if (d.contains("rule")) {
                const auto name = d.at("rule").get<std::string>();
                const auto rule = parse_rule(name);
                if (!rule) throw ConfigError("unknown rule id: " + name);
                c.data.rule = rule;
                if (d.contains("n")) c.data.n_samples = d.at("n").get<std::size_t>();
            }
            if (d.contains("csv")) {
                c.data.csv_path = d.at("csv").get<std::string>();
                if (d.contains("schema")) {
                    const auto& s = d.at("schema");
                    c.data.schema.label = s.at("label").get<std::string>();
                    if (s.contains("numeric"))
                        c.data.schema.numeric =
                            s.at("numeric").get<std::vector<std::string>>();
                    if (s.contains("categorical"))
                        c.data.schema.categorical =
                            s.at("categorical").get<std::vector<std::string>>();
                    if (s.contains("complement_literals"))
                        c.data.schema.complement_literals =
                            s.at("complement_literals").get<bool>();
                }
            }
        }
        if (doc.contains("hyper")) hyper_from_json(doc.at("hyper"), c.hyper);
        if (doc.contains("split_ratio"))
            c.split_ratio = doc.at("split_ratio").get<double>();
        if (doc.contains("noise")) c.noise_fraction = doc.at("noise").get<double>();
        if (doc.contains("simplify_threshold"))
            c.simplify_threshold = doc.at("simplify_threshold").get<double>();
        if (doc.contains("out")) c.out_dir = doc.at("out").get<std::string>();
        if (doc.contains("seeds"))
            c.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
        if (doc.contains("sweep")) {
            const auto& s = doc.at("sweep");
            const auto axis = parse_axis(s.at("axis").get<std::string>());
            if (!axis)
                throw ConfigError("unknown sweep axis: " +
                                  s.at("axis").get<std::string>());
            c.sweep.axis = *axis;
            c.sweep.grid = s.at("grid").get<std::vector<double>>();
        }
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field error: ") + e.what());
    }
}

std::string config_fingerprint(const ExperimentConfig& config) {
    ExperimentConfig canonical = config;
    canonical.out_dir.clear(); // location does not change the experiment
    const std::string text = config_to_json(canonical);
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        hash ^= ch;
        hash *= 0x100000001b3ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

std::string axis_name(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::Lambda: return "lambda";
        case SweepAxis::Noise: return "noise";
        case SweepAxis::TrainSize: return "train-size";
        default: return "none";
    }
}

std::optional<SweepAxis> parse_axis(const std::string& name) {
    if (name == "lambda") return SweepAxis::Lambda;
    if (name == "noise") return SweepAxis::Noise;
    if (name == "train-size") return SweepAxis::TrainSize;
    if (name == "none") return SweepAxis::None;
    return std::nullopt;
}

ResultRecord run_experiment(const ExperimentConfig& config, std::uint64_t seed,
                            const std::string& out_dir) {
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();

    Dataset full;
    std::vector<std::string> warnings;
    if (config.data.rule) {
        full = gen_synthetic(*config.data.rule, config.data.n_samples,
                             derive_seed(seed, kSeedTagData));
    } else {
        full = load_csv(*config.data.csv_path, config.data.schema, &warnings);
    }

    SplitResult parts =
        split(full, config.split_ratio, derive_seed(seed, kSeedTagSplit), &warnings);
    if (config.noise_fraction > 0.0)
        parts.train = flip_labels(parts.train, config.noise_fraction,
                                  derive_seed(seed, kSeedTagNoise));

    HyperParams hp = config.hyper;
    hp.seed = seed;
    TrainResult trained = train(parts.train, parts.test, hp);

    const Dnf raw = decode(trained.params, parts.train.meta);
    const Dnf simplified =
        simplify(raw, parts.train.meta.stats, config.simplify_threshold);
    const RuleMetrics rm = metrics(simplified);

    ResultRecord rec;
    rec.fingerprint = config_fingerprint(config);
    rec.seed = seed;
    rec.test_accuracy = trained.report.test_accuracy;
    rec.n_r = rm.n_conjunctions;
    rec.l_r = rm.mean_literals;
    rec.dnf_text = render(simplified, parts.train.meta.feature_names);
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();

    if (!out_dir.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(out_dir);
        const auto at = [&](const char* name) { return (fs::path(out_dir) / name).string(); };
        save_checkpoint({trained.params, parts.train.meta}, at("checkpoint.json"));
        save_report(trained.report, at("report.json"));
        write_file_atomic(at("history.csv"), history_to_csv(trained.report));
        write_file_atomic(at("rule.txt"), rec.dnf_text + "\n");
        write_file_atomic(at("dnf.json"), dnf_to_json(simplified));
        json record = {
            {"fingerprint", rec.fingerprint}, {"seed", rec.seed},
            {"test_accuracy", rec.test_accuracy}, {"n_r", rec.n_r},
            {"l_r", rec.l_r},                 {"dnf", rec.dnf_text},
            {"wall_ms", rec.wall_ms},
        };
        if (!warnings.empty()) record["warnings"] = warnings;
        write_file_atomic(at("record.json"), record.dump(2));
    }
    return rec;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& config,
                               std::size_t max_workers) {
    config.validate();
    if (config.sweep.axis == SweepAxis::None)
        throw ConfigError("run_sweep: sweep axis not set");

    struct Job {
        double value;
        std::uint64_t seed;
        ExperimentConfig cfg;
        std::string dir;
    };
    std::vector<Job> jobs;
    for (const double value : config.sweep.grid) {
        for (const std::uint64_t seed : config.seeds) {
            ExperimentConfig cfg = config;
            cfg.sweep = SweepSpec{}; // a point is a single experiment
            switch (config.sweep.axis) {
                case SweepAxis::Lambda: cfg.hyper.set_all_lambdas(value); break;
                case SweepAxis::Noise: cfg.noise_fraction = value; break;
                case SweepAxis::TrainSize:
                    // Axis value is the training-split size.
                    cfg.data.n_samples = static_cast<std::size_t>(
                        std::llround(value / cfg.split_ratio));
                    break;
                default: break;
            }
            std::string dir;
            if (!config.out_dir.empty())
                dir = config.out_dir + "/" + axis_name(config.sweep.axis) + "=" +
                      format_value(value) + "/seed=" + std::to_string(seed);
            jobs.push_back(Job{value, seed, std::move(cfg), std::move(dir)});
        }
    }

    std::vector<SweepRow> rows(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            SweepRow& row = rows[i];
            row.value = jobs[i].value;
            row.seed = jobs[i].seed;
            try {
                const ResultRecord rec =
                    run_experiment(jobs[i].cfg, jobs[i].seed, jobs[i].dir);
                row.accuracy = rec.test_accuracy;
                row.n_r = rec.n_r;
                row.l_r = rec.l_r;
                row.ok = true;
            } catch (const std::exception& e) {
                row.ok = false;
                row.error = e.what();
            }
        }
    };
    const std::size_t n_workers = std::max<std::size_t>(
        1, std::min({max_workers, jobs.size(),
                     static_cast<std::size_t>(std::thread::hardware_concurrency())}));
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    if (!config.out_dir.empty())
        write_file_atomic(config.out_dir + "/aggregate.csv",
                          sweep_to_csv(config.sweep.axis, rows));
    return rows;
}

std::string sweep_to_csv(SweepAxis axis, const std::vector<SweepRow>& rows) {
    std::string out = "axis,value,seed,accuracy,n_r,l_r,status\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%.17g,%llu,%.17g,%zu,%.17g,",
                      axis_name(axis).c_str(), r.value,
                      static_cast<unsigned long long>(r.seed), r.accuracy, r.n_r,
                      r.l_r);
        out += buf;
        out += r.ok ? "ok" : csv_quote("error: " + r.error);
        out += '\n';
    }
    return out;
}

std::vector<SweepRow> sweep_from_csv(const std::string& text) {
    std::vector<SweepRow> rows;
    std::istringstream in(text);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (line.empty()) continue;
        SweepRow row;
        char status[128] = {0};
        unsigned long long seed = 0;
        char axis[32] = {0};
        const int got = std::sscanf(line.c_str(), "%31[^,],%lg,%llu,%lg,%zu,%lg,%127s",
                                    axis, &row.value, &seed, &row.accuracy, &row.n_r,
                                    &row.l_r, status);
        if (got < 7) throw DataError("malformed sweep row: " + line);
        row.seed = seed;
        row.ok = std::string(status) == "ok";
        if (!row.ok) row.error = status;
        rows.push_back(row);
    }
    return rows;
}

namespace {

// Mean n_r per distinct grid value, in ascending value order.
std::vector<std::pair<double, double>> mean_nr_by_value(
    const std::vector<SweepRow>& rows) {
    std::vector<std::pair<double, double>> out;
    std::vector<double> values;
    for (const auto& r : rows)
        if (r.ok && std::find(values.begin(), values.end(), r.value) == values.end())
            values.push_back(r.value);
    std::sort(values.begin(), values.end());
    for (const double v : values) {
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& r : rows)
            if (r.ok && r.value == v) {
                sum += static_cast<double>(r.n_r);
                ++count;
            }
        out.emplace_back(v, sum / static_cast<double>(count));
    }
    return out;
}

} // namespace

TrendCheck check_nr_nonincreasing(const std::vector<SweepRow>& rows,
                                  int allowed_inversions, double slack) {
    const auto series = mean_nr_by_value(rows);
    if (series.size() < 2) return {false, "need at least two grid values"};
    int inversions = 0;
    std::ostringstream detail;
    for (std::size_t i = 1; i < series.size(); ++i) {
        const double rise = series[i].second - series[i - 1].second;
        if (rise > 1e-9) {
            ++inversions;
            if (rise > slack + 1e-9)
                return {false, "n_r rises by " + format_value(rise) + " at value " +
                                   format_value(series[i].first)};
        }
    }
    for (const auto& [v, nr] : series) detail << " (" << v << ", " << nr << ")";
    if (inversions > allowed_inversions)
        return {false, std::to_string(inversions) + " inversions in" + detail.str()};
    return {true, "n_r trend" + detail.str()};
}

TrendCheck check_point(const std::vector<SweepRow>& rows, double value,
                       std::optional<std::size_t> expect_nr, double acc_min,
                       double acc_max) {
    bool found = false;
    for (const auto& r : rows) {
        if (std::fabs(r.value - value) > 1e-9 * std::max(1.0, std::fabs(value)))
            continue;
        found = true;
        if (!r.ok) return {false, "point failed: " + r.error};
        if (expect_nr && r.n_r != *expect_nr)
            return {false, "n_r=" + std::to_string(r.n_r) + " expected " +
                               std::to_string(*expect_nr) + " at value " +
                               format_value(value)};
        if (r.accuracy < acc_min || r.accuracy > acc_max)
            return {false, "accuracy " + format_value(r.accuracy) + " outside [" +
                               format_value(acc_min) + "," + format_value(acc_max) +
                               "] at value " + format_value(value)};
    }
    if (!found) return {false, "no rows at value " + format_value(value)};
    return {true, "point " + format_value(value) + " ok"};
}

TrendCheck check_accuracy_floor(const std::vector<SweepRow>& rows, double acc_min) {
    for (const auto& r : rows) {
        if (!r.ok) return {false, "point failed: " + r.error};
        if (r.accuracy < acc_min)
            return {false, "accuracy " + format_value(r.accuracy) + " < " +
                               format_value(acc_min) + " at value " +
                               format_value(r.value)};
    }
    return {true, "all points >= " + format_value(acc_min)};
}

std::string dataset_to_csv(const Dataset& ds) {
    std::string out;
    for (std::size_t f = 0; f < ds.n_features; ++f) {
        out += csv_quote(ds.meta.feature_names[f]);
        out += ',';
    }
    out += "label\n";
    char buf[64];
    for (std::size_t r = 0; r < ds.rows; ++r) {
        for (std::size_t f = 0; f < ds.n_features; ++f) {
            std::snprintf(buf, sizeof buf, "%.17g,", ds.features[r * ds.n_features + f]);
            out += buf;
        }
        out += ds.labels[r] ? "1\n" : "0\n";
    }
    return out;
}

} // namespace rulenet
