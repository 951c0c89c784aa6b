#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rulenet {

// Forward semantics: annealed sigmoids while training, crisp steps at
// evaluation time. The step convention is step(t) = 1 iff t > 0, applied
// uniformly to literal boundaries and logit signs.
enum class Mode { Train, Eval };

struct FeatureStats {
    double lo = 0.0;
    double hi = 1.0;

    bool operator==(const FeatureStats&) const = default;
};

// Fixed 0/1 predicate fed straight to the conjunction layer. Polarity is
// explicit because the rule language has no negation operator.
struct PredefinedDescriptor {
    std::string feature;
    std::string value;
    bool positive = true;

    std::string text() const;
    bool operator==(const PredefinedDescriptor&) const = default;
};

struct FeatureMeta {
    std::vector<std::string> feature_names;
    std::vector<FeatureStats> stats; // per-feature train-split min/max
    std::vector<PredefinedDescriptor> predefined;
};

// All learnable parameters. literal_weights is n_features x n_learned,
// and_logits is (n_learned + n_predefined) x n_conjunctions, both row-major.
struct ModelParams {
    std::size_t n_features = 0;
    std::size_t n_learned = 0;
    std::size_t n_predefined = 0;
    std::size_t n_conjunctions = 0;

    std::vector<double> literal_weights;
    std::vector<double> literal_biases;
    std::vector<double> and_logits;
    std::vector<double> or_logits;

    std::size_t n_literals_total() const { return n_learned + n_predefined; }

    static ModelParams zeros(std::size_t n_features, std::size_t n_learned,
                             std::size_t n_predefined, std::size_t n_conjunctions);

    // Throws ShapeError on inconsistent shapes, TrainError on non-finite entries.
    void validate() const;
};

// Learned-literal activations for one input row: sigma((x^T W + b)/tau) in
// train mode, step(x^T W + b) in eval mode.
std::vector<double> literal_forward(std::span<const double> x, const ModelParams& params,
                                    double tau, Mode mode);

// z_j = 1 - min(sum_i w_ij (1 - phi_i), 1) with w_ij = sigma(u_ij/tau) or step(u_ij).
std::vector<double> and_forward(std::span<const double> phi, const ModelParams& params,
                                double tau, Mode mode);

// max_j w_j z_j with w_j = sigma(v_j/tau) or step(v_j).
double or_forward(std::span<const double> z, const ModelParams& params, double tau,
                  Mode mode);

// Reusable buffers for batched forward passes.
struct ForwardScratch {
    std::vector<double> pre;       // rows x n_learned
    std::vector<double> phi;       // rows x M
    std::vector<double> and_w;     // M x J, materialized weights at current tau
    std::vector<double> and_w_t;   // J x M
    std::vector<double> or_w;      // J
    std::vector<double> slack;     // rows x J
    std::vector<double> z;         // rows x J
    std::vector<double> yhat;      // rows
    std::vector<std::int32_t> argmax; // rows

    void resize(std::size_t rows, const ModelParams& params);
};

// Materialize annealed (train) or crisp (eval) layer weights into scratch.
void materialize_weights(const ModelParams& params, double tau, Mode mode,
                         ForwardScratch& scratch);

// Batched forward for `rows` inputs; x is rows x n_features, predef is
// rows x n_predefined (may be empty when the model has no predefined
// literals). Results land in scratch.yhat / scratch.argmax. Weights must have
// been materialized for the same (tau, mode).
void model_forward_batch(const ModelParams& params, std::span<const double> x,
                         std::span<const double> predef, std::size_t rows,
                         double tau, Mode mode, ForwardScratch& scratch);

// Convenience single-shot batch evaluation.
std::vector<double> model_forward(const ModelParams& params, std::span<const double> x,
                                  std::span<const double> predef, std::size_t rows,
                                  double tau, Mode mode);

struct BinaryMasks {
    std::vector<std::uint8_t> and_mask; // M x J, w_ij = 1 iff u_ij > 0
    std::vector<std::uint8_t> or_mask;  // J, w_j = 1 iff v_j > 0
};

BinaryMasks binarize_masks(const ModelParams& params);

} // namespace rulenet
