#include "rulenet/serialize.hpp"

#include <json.hpp>

#include "rulenet/errors.hpp"
#include "rulenet/util.hpp"

namespace rulenet {

using nlohmann::json;

namespace {

json stats_to_json(const std::vector<FeatureStats>& stats) {
    json arr = json::array();
    for (const auto& s : stats) arr.push_back({{"lo", s.lo}, {"hi", s.hi}});
    return arr;
}

std::vector<FeatureStats> stats_from_json(const json& arr) {
    std::vector<FeatureStats> stats;
    for (const auto& s : arr)
        stats.push_back({s.at("lo").get<double>(), s.at("hi").get<double>()});
    return stats;
}

json descriptors_to_json(const std::vector<PredefinedDescriptor>& descriptors) {
    json arr = json::array();
    for (const auto& d : descriptors)
        arr.push_back({{"feature", d.feature}, {"value", d.value},
                       {"positive", d.positive}});
    return arr;
}

std::vector<PredefinedDescriptor> descriptors_from_json(const json& arr) {
    std::vector<PredefinedDescriptor> out;
    for (const auto& d : arr)
        out.push_back({d.at("feature").get<std::string>(),
                       d.at("value").get<std::string>(),
                       d.at("positive").get<bool>()});
    return out;
}

} // namespace

std::string checkpoint_to_json(const Checkpoint& ckpt) {
    const ModelParams& p = ckpt.params;
    json doc = {
        {"n_features", p.n_features},
        {"m", p.n_learned},
        {"J", p.n_conjunctions},
        {"literal_weights", p.literal_weights},
        {"literal_biases", p.literal_biases},
        {"and_logits", p.and_logits},
        {"or_logits", p.or_logits},
        {"feature_names", ckpt.meta.feature_names},
        {"predefined_literal_descriptors", descriptors_to_json(ckpt.meta.predefined)},
        {"normalization_stats", stats_to_json(ckpt.meta.stats)},
    };
    return doc.dump(2);
}

Checkpoint checkpoint_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("checkpoint parse error: ") + e.what());
    }
    try {
        Checkpoint ckpt;
        ModelParams& p = ckpt.params;
        p.n_features = doc.at("n_features").get<std::size_t>();
        p.n_learned = doc.at("m").get<std::size_t>();
        p.n_conjunctions = doc.at("J").get<std::size_t>();
        p.literal_weights = doc.at("literal_weights").get<std::vector<double>>();
        p.literal_biases = doc.at("literal_biases").get<std::vector<double>>();
        p.and_logits = doc.at("and_logits").get<std::vector<double>>();
        p.or_logits = doc.at("or_logits").get<std::vector<double>>();
        ckpt.meta.feature_names =
            doc.at("feature_names").get<std::vector<std::string>>();
        ckpt.meta.predefined =
            descriptors_from_json(doc.at("predefined_literal_descriptors"));
        ckpt.meta.stats = stats_from_json(doc.at("normalization_stats"));
        if (p.n_conjunctions == 0)
            throw DataError("checkpoint: J must be >= 1");
        const std::size_t mt = p.and_logits.size() / p.n_conjunctions;
        if (mt * p.n_conjunctions != p.and_logits.size() || mt < p.n_learned)
            throw DataError("checkpoint: and_logits shape inconsistent");
        p.n_predefined = mt - p.n_learned;
        p.validate();
        return ckpt;
    } catch (const json::exception& e) {
        throw DataError(std::string("checkpoint field error: ") + e.what());
    }
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    write_file_atomic(path, checkpoint_to_json(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) {
    return checkpoint_from_json(read_file(path));
}

std::string report_to_json(const TrainReport& r) {
    json doc = {
        {"best_epoch", r.has_best ? json(r.best_epoch) : json(nullptr)},
        {"best_loss", r.has_best ? json(r.best_loss) : json(nullptr)},
        {"final_tau", r.final_tau},
        {"total_steps", r.total_steps},
        {"test_accuracy", r.test_accuracy},
        {"n_r", r.rule_conjunctions},
        {"l_r", r.rule_mean_literals},
        {"restart_resets_tau", r.restart_resets_tau},
        {"seed", r.seed},
        {"epochs_recorded", r.history.size()},
    };
    return doc.dump(2);
}

void save_report(const TrainReport& report, const std::string& path) {
    write_file_atomic(path, report_to_json(report));
}

std::string history_to_csv(const TrainReport& report) {
    std::string out = "epoch,loss,tau,restart_index\n";
    char buf[128];
    for (const auto& rec : report.history) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%zu\n", rec.epoch, rec.loss,
                      rec.tau, rec.restart_index);
        out += buf;
    }
    return out;
}

std::string dnf_to_json(const Dnf& dnf) {
    json doc;
    if (dnf.is_constant_true()) {
        doc["constant"] = true;
    } else if (dnf.is_constant_false()) {
        doc["constant"] = false;
    } else {
        json conjs = json::array();
        for (const auto& c : dnf.conjunctions) {
            json lits = json::array();
            for (const auto& l : c.literals) {
                if (l.kind == Literal::Kind::Halfspace) {
                    lits.push_back({{"kind", "halfspace"},
                                    {"coeffs", l.coeffs},
                                    {"bias", l.bias},
                                    {"source_row", l.source_row}});
                } else {
                    lits.push_back({{"kind", "predefined"},
                                    {"feature", l.pred.feature},
                                    {"value", l.pred.value},
                                    {"positive", l.pred.positive},
                                    {"column", l.pred_column},
                                    {"source_row", l.source_row}});
                }
            }
            conjs.push_back({{"or_index", c.or_index}, {"literals", lits}});
        }
        doc["conjunctions"] = conjs;
    }
    return doc.dump(2);
}

Dnf dnf_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("dnf parse error: ") + e.what());
    }
    try {
        if (doc.contains("constant"))
            return doc.at("constant").get<bool>() ? Dnf::constant_true()
                                                  : Dnf::constant_false();
        Dnf dnf;
        for (const auto& c : doc.at("conjunctions")) {
            Conjunction conj;
            conj.or_index = c.at("or_index").get<std::size_t>();
            for (const auto& l : c.at("literals")) {
                if (l.at("kind").get<std::string>() == "halfspace") {
                    conj.literals.push_back(Literal::halfspace(
                        l.at("coeffs").get<std::vector<double>>(),
                        l.at("bias").get<double>(),
                        l.at("source_row").get<std::size_t>()));
                } else {
                    conj.literals.push_back(Literal::predefined(
                        PredefinedDescriptor{l.at("feature").get<std::string>(),
                                             l.at("value").get<std::string>(),
                                             l.at("positive").get<bool>()},
                        l.at("column").get<std::size_t>(),
                        l.at("source_row").get<std::size_t>()));
                }
            }
            dnf.conjunctions.push_back(std::move(conj));
        }
        return dnf;
    } catch (const json::exception& e) {
        throw DataError(std::string("dnf field error: ") + e.what());
    }
}

} // namespace rulenet
