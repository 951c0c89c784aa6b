#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "rulenet/data.hpp"
#include "rulenet/model.hpp"

namespace rulenet {

enum class EpochUnit { Passes, Steps };

struct HyperParams {
    std::size_t n_literals = 10;     // learned-literal count (m)
    std::size_t n_conjunctions = 25; // conjunction nodes (J)

    double lambda_and = 1e-2;
    double lambda_or = 1e-2;
    double lambda_p = 1e-2;

    double tau0 = 0.3;
    double gamma = 0.995;   // cooling factor per epoch
    double tau_min = 1e-4;

    std::size_t epochs_total = 250000;
    std::size_t restart_period = 10000;
    std::size_t batch_size = 100;

    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    std::uint64_t seed = 1;

    // Restarts re-initialize weights and optimizer state; by default the
    // cooling schedule restarts from tau0 as well.
    bool restart_resets_tau = true;
    // Passes: an epoch is one shuffled pass over the training split.
    // Steps: an epoch is a single optimizer step.
    EpochUnit epoch_unit = EpochUnit::Passes;

    // Reduced schedule for interactive runs and the test suite.
    static HyperParams desk_profile();

    void validate() const;
    void set_all_lambdas(double v) { lambda_and = lambda_or = lambda_p = v; }
};

// Gradients shaped like ModelParams.
struct Gradients {
    std::vector<double> literal_weights;
    std::vector<double> literal_biases;
    std::vector<double> and_logits;
    std::vector<double> or_logits;

    static Gradients zeros_like(const ModelParams& p);
    void zero();
};

struct OptimizerState {
    std::vector<double> m1; // first moments, flattened param order
    std::vector<double> m2; // second moments
    std::size_t step = 0;

    static OptimizerState zeros_like(const ModelParams& p);
    void reset();
};

struct LossRecord {
    std::size_t epoch = 0;
    double loss = 0.0;
    double tau = 0.0;
    std::size_t restart_index = 0;
};

struct TrainReport {
    std::vector<LossRecord> history; // full-training-set loss per epoch
    std::size_t best_epoch = 0;      // meaningful only when has_best
    double best_loss = 0.0;
    bool has_best = false;
    double final_tau = 0.0;
    std::size_t total_steps = 0;
    double test_accuracy = 0.0;
    std::size_t rule_conjunctions = 0; // n_r of the simplified decoded rule
    double rule_mean_literals = 0.0;   // l_r
    bool restart_resets_tau = true;
    std::uint64_t seed = 0;
};

struct TrainResult {
    ModelParams params; // lowest-training-loss snapshot
    TrainReport report;
};

struct Batch {
    std::span<const double> x;            // rows x n_features
    std::span<const double> predef;       // rows x n_predefined
    std::span<const std::uint8_t> labels; // rows
    std::size_t rows = 0;
};

// tau = max(tau0 * gamma^epoch, tau_min)
double cooling(double tau0, double gamma, std::size_t epoch, double tau_min);

// Mean squared error over the batch plus L1 penalties at per-sample scale
// (lambda * ||.||_1 / batch): the conjunction and disjunction penalties apply
// to the annealed sigmoid weights at the current tau, the literal penalty to
// the raw halfspace weights.
double loss(std::span<const double> y_hat, std::span<const std::uint8_t> y,
            const ModelParams& params, double tau, double lambda_and,
            double lambda_or, double lambda_p);

double penalty_value(const ModelParams& params, double tau, double lambda_and,
                     double lambda_or, double lambda_p);

// Reverse-mode gradients of loss() w.r.t. all parameters. Subgradient
// conventions: d/ds min(s,1) = 1 for s < 1 and 0 for s >= 1; max routes to
// the single lowest maximizing index; d|w|/dw = 0 at w = 0.
Gradients backward(const Batch& batch, const ModelParams& params, double tau,
                   double lambda_and, double lambda_or, double lambda_p);

// One bias-corrected Adam update in place.
void adam_step(ModelParams& params, const Gradients& grads, OptimizerState& state,
               double lr, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8);

// Max relative error between backward() and central finite differences over
// every parameter. Throws DiagnosticError when the configuration sits within
// 10h of a subgradient kink (min clamp, argmax tie, |w| at 0).
double grad_check(const ModelParams& params, double tau, const Batch& batch,
                  double h, double lambda_and = 0.0, double lambda_or = 0.0,
                  double lambda_p = 0.0);

// Random configuration + batch for grad_check, resampled until kink-free;
// throws DiagnosticError after `max_tries` failures.
struct GradCheckCase {
    ModelParams params;
    std::vector<double> x;
    std::vector<double> predef;
    std::vector<std::uint8_t> labels;
    std::size_t rows = 0;

    Batch batch() const { return {x, predef, labels, rows}; }
};
GradCheckCase make_kink_free_case(std::size_t n_features, std::size_t n_learned,
                                  std::size_t n_predefined, std::size_t n_conjunctions,
                                  std::size_t rows, double tau, double h,
                                  std::mt19937_64& rng, double lambda_p = 0.0,
                                  int max_tries = 100);

// Uniform(-1,1) halfspace weights/biases; logits normal around a knee-of-the-
// clamp operating point in the annealed-weight domain (see the definition).
ModelParams init_params(std::size_t n_features, std::size_t n_learned,
                        std::size_t n_predefined, std::size_t n_conjunctions,
                        std::mt19937_64& rng, double tau0 = 0.3);

// Full training protocol: shuffled mini-batch passes, per-epoch cooling,
// periodic restarts, best-snapshot selection on the full-training-set loss,
// crisp-mode test accuracy of the selected snapshot.
TrainResult train(const Dataset& train_set, const Dataset& test_set,
                  const HyperParams& hp);

// Crisp-mode accuracy of params on a dataset.
double evaluate_accuracy(const ModelParams& params, const Dataset& ds);

} // namespace rulenet
