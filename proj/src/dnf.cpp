#include "rulenet/dnf.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "rulenet/errors.hpp"

namespace rulenet {
namespace {

// Identity for dedup/subsumption: predicate content only, provenance ignored.
bool literal_same(const Literal& a, const Literal& b) {
    if (a.kind != b.kind) return false;
    if (a.kind == Literal::Kind::Halfspace)
        return a.coeffs == b.coeffs && a.bias == b.bias;
    return a.pred == b.pred;
}

bool contains_literal(const std::vector<Literal>& lits, const Literal& l) {
    return std::any_of(lits.begin(), lits.end(),
                       [&](const Literal& x) { return literal_same(x, l); });
}

// every literal of `a` appears in `b`
bool literal_subset(const std::vector<Literal>& a, const std::vector<Literal>& b) {
    return std::all_of(a.begin(), a.end(),
                       [&](const Literal& l) { return contains_literal(b, l); });
}

std::string format_constant(double v, int precision) {
    if (v == 0.0) return "0";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    std::string s(buf);
    while (s.size() > 1 && s.back() == '0') s.pop_back();
    if (s.back() == '.') s.push_back('0');
    return s;
}

} // namespace

DisplayHalfspace display_form(const Literal& lit) {
    DisplayHalfspace d;
    d.coeffs = lit.coeffs;
    double cmax = 0.0;
    for (double c : d.coeffs) cmax = std::max(cmax, std::fabs(c));
    if (cmax == 0.0) cmax = 1.0;
    for (double& c : d.coeffs) c /= cmax;
    d.rhs = -lit.bias / cmax;
    return d;
}

Literal Literal::halfspace(std::vector<double> coeffs, double bias,
                           std::size_t source_row) {
    Literal l;
    l.kind = Kind::Halfspace;
    l.coeffs = std::move(coeffs);
    l.bias = bias;
    l.source_row = source_row;
    return l;
}

Literal Literal::predefined(PredefinedDescriptor d, std::size_t column,
                            std::size_t source_row) {
    Literal l;
    l.kind = Kind::Predefined;
    l.pred = std::move(d);
    l.pred_column = column;
    l.source_row = source_row;
    return l;
}

Dnf Dnf::constant_true() {
    Dnf d;
    d.conjunctions.push_back(Conjunction{});
    return d;
}

Dnf Dnf::constant_false() { return Dnf{}; }

bool Dnf::is_constant_true() const {
    return std::any_of(conjunctions.begin(), conjunctions.end(),
                       [](const Conjunction& c) { return c.literals.empty(); });
}

Dnf decode(const ModelParams& params, const FeatureMeta& meta) {
    const std::size_t n = params.n_features;
    const std::size_t m = params.n_learned;
    const std::size_t mt = params.n_literals_total();
    const std::size_t nj = params.n_conjunctions;

    std::vector<FeatureStats> stats = meta.stats;
    if (stats.empty()) stats.assign(n, FeatureStats{});
    if (stats.size() != n) throw ShapeError("decode: normalization stats length mismatch");
    if (!meta.predefined.empty() && meta.predefined.size() != params.n_predefined)
        throw ShapeError("decode: predefined descriptor count mismatch");

    Dnf dnf;
    for (std::size_t j = 0; j < nj; ++j) {
        if (!(params.or_logits[j] > 0.0)) continue;
        Conjunction conj;
        conj.or_index = j;
        for (std::size_t i = 0; i < mt; ++i) {
            if (!(params.and_logits[i * nj + j] > 0.0)) continue;
            if (i < m) {
                // De-normalize: w'*(x-lo)/(hi-lo) + b  ->  (w'/range)*x + shifted b.
                std::vector<double> coeffs(n, 0.0);
                double bias = params.literal_biases[i];
                for (std::size_t f = 0; f < n; ++f) {
                    const double wn = params.literal_weights[f * m + i];
                    const double range = stats[f].hi - stats[f].lo;
                    if (range == 0.0) continue; // feature constant in training data
                    coeffs[f] = wn / range;
                    bias -= wn * stats[f].lo / range;
                }
                conj.literals.push_back(Literal::halfspace(std::move(coeffs), bias, i));
            } else {
                PredefinedDescriptor d;
                if (!meta.predefined.empty()) d = meta.predefined[i - m];
                conj.literals.push_back(Literal::predefined(std::move(d), i - m, i));
            }
        }
        dnf.conjunctions.push_back(std::move(conj));
    }
    return dnf;
}

Dnf simplify(const Dnf& dnf, std::span<const FeatureStats> bounds, double threshold) {
    for (const auto& b : bounds) {
        if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || b.lo > b.hi)
            throw ConfigError("simplify: invalid feature bounds");
    }
    if (dnf.is_constant_true()) return Dnf::constant_true();

    std::vector<Conjunction> kept;
    for (const auto& conj : dnf.conjunctions) {
        bool conj_false = false;
        std::vector<Literal> lits;
        for (const auto& lit : conj.literals) {
            if (lit.kind == Literal::Kind::Predefined) {
                if (!contains_literal(lits, lit)) lits.push_back(lit);
                continue;
            }
            if (lit.coeffs.size() != bounds.size())
                throw ShapeError("simplify: literal arity != bounds length");

            Literal pruned = lit;
            double cmax = 0.0;
            for (double c : pruned.coeffs) cmax = std::max(cmax, std::fabs(c));
            for (double& c : pruned.coeffs)
                if (std::fabs(c) < threshold * cmax) c = 0.0;

            // Interval bound of coeffs.x + bias over the box.
            double vmin = pruned.bias;
            double vmax = pruned.bias;
            for (std::size_t f = 0; f < pruned.coeffs.size(); ++f) {
                const double c = pruned.coeffs[f];
                if (c > 0.0) {
                    vmin += c * bounds[f].lo;
                    vmax += c * bounds[f].hi;
                } else {
                    vmin += c * bounds[f].hi;
                    vmax += c * bounds[f].lo;
                }
            }
            if (vmin > 0.0) continue;          // always true in the box
            if (vmax <= 0.0) {                 // never true in the box
                conj_false = true;
                break;
            }
            if (!contains_literal(lits, pruned)) lits.push_back(std::move(pruned));
        }
        if (conj_false) continue;
        if (lits.empty()) return Dnf::constant_true();
        kept.push_back(Conjunction{conj.or_index, std::move(lits)});
    }

    // Deduplicate (keep first occurrence).
    std::vector<Conjunction> dedup;
    for (auto& c : kept) {
        const bool dup = std::any_of(dedup.begin(), dedup.end(), [&](const Conjunction& d) {
            return d.literals.size() == c.literals.size() &&
                   literal_subset(d.literals, c.literals);
        });
        if (!dup) dedup.push_back(std::move(c));
    }

    // Remove conjunctions subsumed by a strictly smaller one.
    std::vector<bool> removed(dedup.size(), false);
    for (std::size_t b = 0; b < dedup.size(); ++b) {
        for (std::size_t a = 0; a < dedup.size() && !removed[b]; ++a) {
            if (a == b || removed[a]) continue;
            if (dedup[a].literals.size() < dedup[b].literals.size() &&
                literal_subset(dedup[a].literals, dedup[b].literals))
                removed[b] = true;
        }
    }

    Dnf out;
    for (std::size_t i = 0; i < dedup.size(); ++i)
        if (!removed[i]) out.conjunctions.push_back(std::move(dedup[i]));
    return out;
}

bool evaluate_dnf(const Dnf& dnf, std::span<const double> x,
                  std::span<const double> predef) {
    for (const auto& conj : dnf.conjunctions) {
        bool all = true;
        for (const auto& lit : conj.literals) {
            bool v;
            if (lit.kind == Literal::Kind::Halfspace) {
                if (lit.coeffs.size() != x.size())
                    throw ShapeError("evaluate_dnf: input length != literal arity");
                double acc = lit.bias;
                for (std::size_t f = 0; f < x.size(); ++f) acc += lit.coeffs[f] * x[f];
                v = acc > 0.0;
            } else {
                if (lit.pred_column >= predef.size())
                    throw DataError("evaluate_dnf: missing predefined evaluation for " +
                                    lit.pred.text());
                v = predef[lit.pred_column] != 0.0;
            }
            if (!v) {
                all = false;
                break;
            }
        }
        if (all) return true;
    }
    return false;
}

RuleMetrics metrics(const Dnf& dnf) {
    RuleMetrics m;
    m.n_conjunctions = dnf.conjunctions.size();
    if (m.n_conjunctions == 0) return m;
    std::size_t total = 0;
    for (const auto& c : dnf.conjunctions) total += c.literals.size();
    m.mean_literals = static_cast<double>(total) / static_cast<double>(m.n_conjunctions);
    return m;
}

std::string render_literal(const Literal& lit,
                           const std::vector<std::string>& feature_names,
                           int precision) {
    if (lit.kind == Literal::Kind::Predefined) return lit.pred.text();

    auto name = [&](std::size_t f) {
        return f < feature_names.size() ? feature_names[f] : "x_" + std::to_string(f);
    };

    const DisplayHalfspace d = display_form(lit);
    std::vector<std::size_t> nz;
    for (std::size_t f = 0; f < d.coeffs.size(); ++f)
        if (d.coeffs[f] != 0.0) nz.push_back(f);

    if (nz.empty())
        return "(0 > " + format_constant(d.rhs, precision) + ")";

    if (nz.size() == 1) {
        // c*x > r with c = +-1: flip to "<" for the negative direction.
        const std::size_t f = nz[0];
        if (d.coeffs[f] > 0.0)
            return "(" + name(f) + " > " + format_constant(d.rhs, precision) + ")";
        return "(" + name(f) + " < " + format_constant(-d.rhs, precision) + ")";
    }

    std::string s = "(";
    bool first = true;
    for (std::size_t f : nz) {
        const double c = d.coeffs[f];
        const double mag = std::fabs(c);
        if (first) {
            if (c < 0.0) s += "-";
            first = false;
        } else {
            s += c < 0.0 ? " - " : " + ";
        }
        if (mag != 1.0) s += format_constant(mag, precision) + "·";
        s += name(f);
    }
    s += " > " + format_constant(d.rhs, precision) + ")";
    return s;
}

std::string render(const Dnf& dnf, const std::vector<std::string>& feature_names,
                   int precision) {
    if (dnf.is_constant_true()) return "TRUE";
    if (dnf.is_constant_false()) return "FALSE";

    std::string out;
    bool first_conj = true;
    for (const auto& conj : dnf.conjunctions) {
        if (!first_conj) out += "\n∨ ";
        first_conj = false;
        bool first_lit = true;
        for (const auto& lit : conj.literals) {
            if (!first_lit) out += " ∧ ";
            first_lit = false;
            out += render_literal(lit, feature_names, precision);
        }
    }
    return out;
}

} // namespace rulenet
