#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rulenet/model.hpp"

namespace rulenet {

// One atomic predicate: either a learned halfspace (coeffs . x + bias > 0,
// strict, in original feature units) or a predefined 0/1 predicate.
struct Literal {
    enum class Kind { Halfspace, Predefined };

    Kind kind = Kind::Halfspace;
    std::vector<double> coeffs; // length n_features (halfspace only)
    double bias = 0.0;
    PredefinedDescriptor pred;   // predefined only
    std::size_t pred_column = 0; // index into the predefined evaluation row

    // Conjunction-layer row this literal came from; drives stable ordering.
    std::size_t source_row = 0;

    static Literal halfspace(std::vector<double> coeffs, double bias,
                             std::size_t source_row = 0);
    static Literal predefined(PredefinedDescriptor d, std::size_t column,
                              std::size_t source_row = 0);

    bool operator==(const Literal&) const = default;
};

struct Conjunction {
    std::size_t or_index = 0; // disjunction-layer node this conjunction came from
    std::vector<Literal> literals;
};

// Disjunction of conjunctions. An empty conjunction list is constant false;
// a conjunction with no literals is vacuously true (so a DNF holding one
// empty conjunction is the constant-true form).
struct Dnf {
    std::vector<Conjunction> conjunctions;

    static Dnf constant_true();
    static Dnf constant_false();
    bool is_constant_true() const;
    bool is_constant_false() const { return conjunctions.empty(); }
};

struct RuleMetrics {
    std::size_t n_conjunctions = 0; // n_r
    double mean_literals = 0.0;     // l_r; 0 when n_r = 0
};

// Read the crisp rule out of the trained parameters: conjunction j is kept
// iff or_logit_j > 0, literal i joins it iff and_logit_ij > 0. Halfspace
// coefficients are mapped back to original feature units via meta.stats.
Dnf decode(const ModelParams& params, const FeatureMeta& meta);

// Simplification pipeline: (1) zero halfspace coefficients below
// threshold * max|coeff| of the same predicate, (2) classify each halfspace
// over the feature bounding box by interval arithmetic and remove constant
// predicates, (3) drop true literals / false conjunctions, (4) deduplicate
// and remove subsumed conjunctions. Order of survivors is preserved.
Dnf simplify(const Dnf& dnf, std::span<const FeatureStats> bounds,
             double threshold = 0.025);

// x in original feature units; predef holds the 0/1 evaluations of the
// predefined literal columns referenced by the DNF.
bool evaluate_dnf(const Dnf& dnf, std::span<const double> x,
                  std::span<const double> predef = {});

RuleMetrics metrics(const Dnf& dnf);

// Display-normalized view of a halfspace: coefficients scaled so the largest
// magnitude is 1, constant moved to the right-hand side (coeffs . x > rhs).
struct DisplayHalfspace {
    std::vector<double> coeffs;
    double rhs = 0.0;
};
DisplayHalfspace display_form(const Literal& lit);

// Deterministic text form. Halfspaces are scaled so the largest-magnitude
// coefficient is +-1; single-variable predicates print as "x > c" / "x < c".
std::string render(const Dnf& dnf, const std::vector<std::string>& feature_names,
                   int precision = 2);
std::string render_literal(const Literal& lit,
                           const std::vector<std::string>& feature_names,
                           int precision = 2);

} // namespace rulenet
