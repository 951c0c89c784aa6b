#include "rulenet/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <numeric>

#include "rulenet/dnf.hpp"
#include "rulenet/errors.hpp"
#include "rulenet/kernels.hpp"

namespace rulenet {
namespace {

constexpr std::size_t kEvalChunk = 1024;

struct TrainContext {
    ForwardScratch fwd;
    std::vector<double> gy;           // rows
    std::vector<double> gz;           // rows x J
    std::vector<double> gs;           // rows x J
    std::vector<double> gphi;         // rows x M
    std::vector<double> gphi_learned; // rows x m (contiguous copy when P > 0)
    std::vector<double> gpre;         // rows x m
    std::vector<double> gw_and;       // M x J, dLoss/dw before the logit chain
    std::vector<double> gw_or;        // J
    Gradients grads;

    void resize(std::size_t rows, const ModelParams& p) {
        fwd.resize(rows, p);
        const std::size_t mt = p.n_literals_total();
        const std::size_t j = p.n_conjunctions;
        gy.resize(rows);
        gz.resize(rows * j);
        gs.resize(rows * j);
        gphi.resize(rows * mt);
        gphi_learned.resize(rows * p.n_learned);
        gpre.resize(rows * p.n_learned);
        gw_and.resize(mt * j);
        gw_or.resize(j);
        grads = Gradients::zeros_like(p);
    }
};

inline double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Assumes model_forward_batch already ran on ctx.fwd for this batch at
// (params, tau, Train). Leaves gradients in ctx.grads.
void backward_into(TrainContext& ctx, const Batch& batch, const ModelParams& params,
                   double tau, double lambda_and, double lambda_or, double lambda_p) {
    const auto& ops = kernels::active_ops();
    const std::size_t rows = batch.rows;
    const std::size_t n = params.n_features;
    const std::size_t m = params.n_learned;
    const std::size_t p = params.n_predefined;
    const std::size_t mt = params.n_literals_total();
    const std::size_t nj = params.n_conjunctions;
    const double inv_tau = 1.0 / tau;

    ctx.grads.zero();

    // dMSE/dyhat, then route through the disjunction's argmax.
    const double inv_rows = 1.0 / static_cast<double>(rows);
    for (std::size_t b = 0; b < rows; ++b)
        ctx.gy[b] = 2.0 * (ctx.fwd.yhat[b] - static_cast<double>(batch.labels[b])) *
                    inv_rows;

    std::fill(ctx.gz.begin(), ctx.gz.end(), 0.0);
    std::fill(ctx.gw_or.begin(), ctx.gw_or.end(), 0.0);
    for (std::size_t b = 0; b < rows; ++b) {
        const auto j = static_cast<std::size_t>(ctx.fwd.argmax[b]);
        ctx.gz[b * nj + j] = ctx.gy[b] * ctx.fwd.or_w[j];
        ctx.gw_or[j] += ctx.gy[b] * ctx.fwd.z[b * nj + j];
    }

    ops.min1_backward(rows * nj, ctx.fwd.slack.data(), ctx.gz.data(), ctx.gs.data());

    std::fill(ctx.gw_and.begin(), ctx.gw_and.end(), 0.0);
    ops.conj_backward_weights(rows, mt, nj, ctx.fwd.phi.data(), ctx.gs.data(),
                              ctx.gw_and.data());
    ops.conj_backward_inputs(rows, mt, nj, ctx.fwd.and_w_t.data(), ctx.gs.data(),
                             ctx.gphi.data());

    // Sparsity penalties hit the annealed weights directly (they are positive,
    // so the L1 subgradient is the constant lambda), then chain through the
    // scaled sigmoid to the logits. Penalties enter the loss at per-sample
    // scale (see loss()).
    const double and_rate = lambda_and * inv_rows;
    const double or_rate = lambda_or * inv_rows;
    for (double& g : ctx.gw_and) g += and_rate;
    for (double& g : ctx.gw_or) g += or_rate;
    ops.sigmoid_backward(mt * nj, ctx.fwd.and_w.data(), inv_tau, ctx.gw_and.data(),
                         ctx.grads.and_logits.data());
    ops.sigmoid_backward(nj, ctx.fwd.or_w.data(), inv_tau, ctx.gw_or.data(),
                         ctx.grads.or_logits.data());

    // Learned-literal chain.
    const double* learned_acts;
    const double* g_learned;
    if (p == 0) {
        learned_acts = ctx.fwd.phi.data();
        g_learned = ctx.gphi.data();
    } else {
        learned_acts = ctx.fwd.pre.data(); // holds the sigmoid outputs
        for (std::size_t b = 0; b < rows; ++b)
            std::memcpy(ctx.gphi_learned.data() + b * m, ctx.gphi.data() + b * mt,
                        m * sizeof(double));
        g_learned = ctx.gphi_learned.data();
    }
    ops.sigmoid_backward(rows * m, learned_acts, inv_tau, g_learned, ctx.gpre.data());
    ops.affine_backward(rows, n, m, batch.x.data(), ctx.gpre.data(),
                        ctx.grads.literal_weights.data(),
                        ctx.grads.literal_biases.data());

    if (lambda_p != 0.0) {
        const double p_rate = lambda_p * inv_rows;
        for (std::size_t i = 0; i < params.literal_weights.size(); ++i)
            ctx.grads.literal_weights[i] += p_rate * sign0(params.literal_weights[i]);
    }
}

double mse(std::span<const double> y_hat, std::span<const std::uint8_t> y) {
    if (y_hat.size() != y.size()) throw ShapeError("loss: y_hat/y length mismatch");
    if (y_hat.empty()) throw DataError("loss: empty batch");
    double acc = 0.0;
    for (std::size_t i = 0; i < y_hat.size(); ++i) {
        const double d = y_hat[i] - static_cast<double>(y[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(y_hat.size());
}

void check_lambdas(double lambda_and, double lambda_or, double lambda_p) {
    if (lambda_and < 0.0 || lambda_or < 0.0 || lambda_p < 0.0)
        throw ConfigError("sparsity penalties must be nonnegative");
}

void adam_apply(std::span<double> theta, std::span<const double> g,
                std::span<double> m1, std::span<double> m2, double lr, double beta1,
                double beta2, double eps, double bc1, double bc2) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
        m1[i] = beta1 * m1[i] + (1.0 - beta1) * g[i];
        m2[i] = beta2 * m2[i] + (1.0 - beta2) * g[i] * g[i];
        const double mhat = m1[i] / bc1;
        const double vhat = m2[i] / bc2;
        theta[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

// Full-training-set loss at the given parameters/temperature, chunked through
// the batch-sized scratch. Weight materialization happens once.
double full_train_loss(TrainContext& ctx, const ModelParams& params, double tau,
                       const Dataset& ds, std::size_t chunk, double lambda_and,
                       double lambda_or, double lambda_p) {
    materialize_weights(params, tau, Mode::Train, ctx.fwd);
    double acc = 0.0;
    for (std::size_t start = 0; start < ds.rows; start += chunk) {
        const std::size_t rows = std::min(chunk, ds.rows - start);
        model_forward_batch(
            params,
            {ds.features.data() + start * ds.n_features, rows * ds.n_features},
            {ds.predefined.data() + start * ds.n_predefined, rows * ds.n_predefined},
            rows, tau, Mode::Train, ctx.fwd);
        for (std::size_t b = 0; b < rows; ++b) {
            const double d =
                ctx.fwd.yhat[b] - static_cast<double>(ds.labels[start + b]);
            acc += d * d;
        }
    }
    const double inv_rows = 1.0 / static_cast<double>(ds.rows);
    double value = acc * inv_rows;
    double pen = 0.0;
    for (double w : ctx.fwd.and_w) pen += w;
    value += lambda_and * pen * inv_rows;
    pen = 0.0;
    for (double w : ctx.fwd.or_w) pen += w;
    value += lambda_or * pen * inv_rows;
    pen = 0.0;
    for (double w : params.literal_weights) pen += std::fabs(w);
    value += lambda_p * pen * inv_rows;
    return value;
}

} // namespace

HyperParams HyperParams::desk_profile() {
    HyperParams hp;
    hp.epochs_total = 20000;
    hp.restart_period = 5000;
    if (getenv("RN_TAU0")) hp.tau0 = atof(getenv("RN_TAU0")); // TEMP hook
    return hp;
}

void HyperParams::validate() const {
    if (n_literals == 0) throw ConfigError("n_literals must be >= 1");
    if (n_conjunctions == 0) throw ConfigError("at least one conjunction node required");
    check_lambdas(lambda_and, lambda_or, lambda_p);
    if (!(tau0 > 0.0)) throw ConfigError("tau0 must be positive");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must be in (0,1)");
    if (!(tau_min > 0.0)) throw ConfigError("tau_min must be positive");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (restart_period < 1) throw ConfigError("restart_period must be >= 1");
    if (epochs_total > 0 && restart_period > epochs_total)
        throw ConfigError("restart_period must be <= epochs_total");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
}

Gradients Gradients::zeros_like(const ModelParams& p) {
    Gradients g;
    g.literal_weights.assign(p.literal_weights.size(), 0.0);
    g.literal_biases.assign(p.literal_biases.size(), 0.0);
    g.and_logits.assign(p.and_logits.size(), 0.0);
    g.or_logits.assign(p.or_logits.size(), 0.0);
    return g;
}

void Gradients::zero() {
    std::fill(literal_weights.begin(), literal_weights.end(), 0.0);
    std::fill(literal_biases.begin(), literal_biases.end(), 0.0);
    std::fill(and_logits.begin(), and_logits.end(), 0.0);
    std::fill(or_logits.begin(), or_logits.end(), 0.0);
}

OptimizerState OptimizerState::zeros_like(const ModelParams& p) {
    OptimizerState s;
    const std::size_t total = p.literal_weights.size() + p.literal_biases.size() +
                              p.and_logits.size() + p.or_logits.size();
    s.m1.assign(total, 0.0);
    s.m2.assign(total, 0.0);
    s.step = 0;
    return s;
}

void OptimizerState::reset() {
    std::fill(m1.begin(), m1.end(), 0.0);
    std::fill(m2.begin(), m2.end(), 0.0);
    step = 0;
}

double cooling(double tau0, double gamma, std::size_t epoch, double tau_min) {
    const double tau = tau0 * std::pow(gamma, static_cast<double>(epoch));
    return std::max(tau, tau_min);
}

double penalty_value(const ModelParams& params, double tau, double lambda_and,
                     double lambda_or, double lambda_p) {
    check_lambdas(lambda_and, lambda_or, lambda_p);
    const auto& ops = kernels::active_ops();
    const double inv_tau = 1.0 / tau;
    std::vector<double> w(params.and_logits.size());
    ops.sigmoid_scaled(w.size(), params.and_logits.data(), inv_tau, w.data());
    double value = 0.0;
    double pen = 0.0;
    for (double v : w) pen += v;
    value += lambda_and * pen;
    w.resize(params.or_logits.size());
    ops.sigmoid_scaled(w.size(), params.or_logits.data(), inv_tau, w.data());
    pen = 0.0;
    for (double v : w) pen += v;
    value += lambda_or * pen;
    pen = 0.0;
    for (double v : params.literal_weights) pen += std::fabs(v);
    value += lambda_p * pen;
    return value;
}

double loss(std::span<const double> y_hat, std::span<const std::uint8_t> y,
            const ModelParams& params, double tau, double lambda_and,
            double lambda_or, double lambda_p) {
    check_lambdas(lambda_and, lambda_or, lambda_p);
    // Penalties compete with the per-sample squared error, so they enter at
    // per-sample scale: lambda values keep their published meaning for any
    // batch size.
    return mse(y_hat, y) + penalty_value(params, tau, lambda_and, lambda_or,
                                         lambda_p) /
                               static_cast<double>(y_hat.size());
}

Gradients backward(const Batch& batch, const ModelParams& params, double tau,
                   double lambda_and, double lambda_or, double lambda_p) {
    check_lambdas(lambda_and, lambda_or, lambda_p);
    if (batch.rows == 0) throw DataError("backward: empty batch");
    TrainContext ctx;
    ctx.resize(batch.rows, params);
    materialize_weights(params, tau, Mode::Train, ctx.fwd);
    model_forward_batch(params, batch.x, batch.predef, batch.rows, tau, Mode::Train,
                        ctx.fwd);
    backward_into(ctx, batch, params, tau, lambda_and, lambda_or, lambda_p);
    return std::move(ctx.grads);
}

void adam_step(ModelParams& params, const Gradients& grads, OptimizerState& state,
               double lr, double beta1, double beta2, double eps) {
    if (grads.literal_weights.size() != params.literal_weights.size() ||
        grads.and_logits.size() != params.and_logits.size())
        throw ShapeError("adam_step: gradient shape mismatch");
    state.step += 1;
    const auto t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(beta1, t);
    const double bc2 = 1.0 - std::pow(beta2, t);

    std::size_t off = 0;
    auto seg = [&](std::vector<double>& theta, const std::vector<double>& g) {
        adam_apply({theta.data(), theta.size()}, {g.data(), g.size()},
                   {state.m1.data() + off, theta.size()},
                   {state.m2.data() + off, theta.size()}, lr, beta1, beta2, eps, bc1,
                   bc2);
        off += theta.size();
    };
    seg(params.literal_weights, grads.literal_weights);
    seg(params.literal_biases, grads.literal_biases);
    seg(params.and_logits, grads.and_logits);
    seg(params.or_logits, grads.or_logits);
}

ModelParams init_params(std::size_t n_features, std::size_t n_learned,
                        std::size_t n_predefined, std::size_t n_conjunctions,
                        std::mt19937_64& rng, double tau0) {
    // Halfspaces start as random hyperplanes through the unit box. Logits are
    // pinned in the annealed-weight domain: conjunction weights start near
    // sigma(-1.5) ~ 0.18 so the slack sum sits at the knee of the min clamp
    // (gradients reach the literal layer from step one), disjunction weights
    // near sigma(+0.5) ~ 0.62 so every conjunction competes for rows while
    // the temperature is warm. Scaling by tau0 keeps that operating point for
    // any starting temperature.
    ModelParams p =
        ModelParams::zeros(n_features, n_learned, n_predefined, n_conjunctions);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& w : p.literal_weights) w = uni(rng);
    for (double& b : p.literal_biases) b = uni(rng);
    // TEMP hooks
    static const double am = getenv("RN_AM") ? atof(getenv("RN_AM")) : -1.5;
    static const double as = getenv("RN_AS") ? atof(getenv("RN_AS")) : 0.5;
    static const double om = getenv("RN_OM") ? atof(getenv("RN_OM")) : 0.5;
    static const double os = getenv("RN_OS") ? atof(getenv("RN_OS")) : 0.5;
    for (double& u : p.and_logits) u = tau0 * (am + as * gauss(rng));
    for (double& v : p.or_logits) v = tau0 * (om + os * gauss(rng));
    return p;
}

namespace {

// Shared by grad_check and the case sampler: margin test against every
// subgradient kink reachable by a +-h parameter perturbation.
bool kink_free(const ModelParams& params, const Batch& batch, double tau,
               double margin, double lambda_p) {
    ForwardScratch fwd;
    fwd.resize(batch.rows, params);
    materialize_weights(params, tau, Mode::Train, fwd);
    model_forward_batch(params, batch.x, batch.predef, batch.rows, tau, Mode::Train,
                        fwd);
    const std::size_t nj = params.n_conjunctions;
    for (double s : fwd.slack)
        if (std::fabs(s - 1.0) <= margin) return false;
    if (nj > 1) {
        for (std::size_t b = 0; b < batch.rows; ++b) {
            double top = -1.0, second = -1.0;
            for (std::size_t j = 0; j < nj; ++j) {
                const double p = fwd.or_w[j] * fwd.z[b * nj + j];
                if (p > top) {
                    second = top;
                    top = p;
                } else if (p > second) {
                    second = p;
                }
            }
            if (top - second <= margin) return false;
        }
    }
    if (lambda_p != 0.0)
        for (double w : params.literal_weights)
            if (std::fabs(w) <= margin) return false;
    return true;
}

double loss_at(const ModelParams& params, const Batch& batch, double tau,
               double lambda_and, double lambda_or, double lambda_p,
               ForwardScratch& fwd) {
    materialize_weights(params, tau, Mode::Train, fwd);
    model_forward_batch(params, batch.x, batch.predef, batch.rows, tau, Mode::Train,
                        fwd);
    double acc = 0.0;
    for (std::size_t b = 0; b < batch.rows; ++b) {
        const double d = fwd.yhat[b] - static_cast<double>(batch.labels[b]);
        acc += d * d;
    }
    acc /= static_cast<double>(batch.rows);
    return acc + penalty_value(params, tau, lambda_and, lambda_or, lambda_p) /
                     static_cast<double>(batch.rows);
}

} // namespace

double grad_check(const ModelParams& params, double tau, const Batch& batch,
                  double h, double lambda_and, double lambda_or, double lambda_p) {
    if (tau < 0.5) throw ConfigError("grad_check: tau must be >= 0.5");
    if (!(h > 0.0)) throw ConfigError("grad_check: h must be positive");
    if (!kink_free(params, batch, tau, 10.0 * h, lambda_p))
        throw DiagnosticError("grad_check: configuration sits within 10h of a kink");

    const Gradients analytic =
        backward(batch, params, tau, lambda_and, lambda_or, lambda_p);

    ModelParams work = params;
    ForwardScratch fwd;
    fwd.resize(batch.rows, params);

    double max_rel = 0.0;
    auto probe = [&](std::vector<double>& theta, const std::vector<double>& g) {
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double saved = theta[i];
            theta[i] = saved + h;
            const double fp = loss_at(work, batch, tau, lambda_and, lambda_or,
                                      lambda_p, fwd);
            theta[i] = saved - h;
            const double fm = loss_at(work, batch, tau, lambda_and, lambda_or,
                                      lambda_p, fwd);
            theta[i] = saved;
            const double central = (fp - fm) / (2.0 * h);
            const double rel = std::fabs(g[i] - central) /
                               (std::fabs(g[i]) + std::fabs(central) + 1e-12);
            max_rel = std::max(max_rel, rel);
        }
    };
    probe(work.literal_weights, analytic.literal_weights);
    probe(work.literal_biases, analytic.literal_biases);
    probe(work.and_logits, analytic.and_logits);
    probe(work.or_logits, analytic.or_logits);
    return max_rel;
}

GradCheckCase make_kink_free_case(std::size_t n_features, std::size_t n_learned,
                                  std::size_t n_predefined, std::size_t n_conjunctions,
                                  std::size_t rows, double tau, double h,
                                  std::mt19937_64& rng, double lambda_p,
                                  int max_tries) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int attempt = 0; attempt < max_tries; ++attempt) {
        GradCheckCase c;
        c.rows = rows;
        c.params = init_params(n_features, n_learned, n_predefined, n_conjunctions, rng);
        c.x.resize(rows * n_features);
        c.predef.resize(rows * n_predefined);
        c.labels.resize(rows);
        for (double& v : c.x) v = uni(rng);
        for (double& v : c.predef) v = uni(rng) < 0.5 ? 0.0 : 1.0;
        for (auto& y : c.labels) y = uni(rng) < 0.5 ? 0 : 1;
        if (kink_free(c.params, c.batch(), tau, 10.0 * h, lambda_p)) return c;
    }
    throw DiagnosticError("make_kink_free_case: no kink-free configuration after " +
                          std::to_string(max_tries) + " tries");
}

double evaluate_accuracy(const ModelParams& params, const Dataset& ds) {
    if (ds.rows == 0) throw DataError("evaluate_accuracy: empty dataset");
    ForwardScratch fwd;
    fwd.resize(std::min<std::size_t>(kEvalChunk, ds.rows), params);
    materialize_weights(params, 1.0, Mode::Eval, fwd);
    std::size_t hits = 0;
    for (std::size_t start = 0; start < ds.rows; start += kEvalChunk) {
        const std::size_t rows = std::min(kEvalChunk, ds.rows - start);
        model_forward_batch(
            params,
            {ds.features.data() + start * ds.n_features, rows * ds.n_features},
            {ds.predefined.data() + start * ds.n_predefined, rows * ds.n_predefined},
            rows, 1.0, Mode::Eval, fwd);
        for (std::size_t b = 0; b < rows; ++b)
            hits += (fwd.yhat[b] != 0.0) == (ds.labels[start + b] != 0);
    }
    return static_cast<double>(hits) / static_cast<double>(ds.rows);
}

TrainResult train(const Dataset& train_set, const Dataset& test_set,
                  const HyperParams& hp) {
    hp.validate();
    if (train_set.rows == 0) throw DataError("train: empty training set");
    if (train_set.n_features != test_set.n_features ||
        train_set.n_predefined != test_set.n_predefined)
        throw ShapeError("train: train/test column mismatch");
    {
        std::size_t pos = 0;
        for (auto y : train_set.labels) {
            if (y != 0 && y != 1) throw DataError("train: labels must be binary");
            pos += y;
        }
        if (pos < 2 || train_set.rows - pos < 2)
            throw DataError("train: need >= 2 samples of each class");
    }

    std::mt19937_64 rng(hp.seed);
    ModelParams params = init_params(train_set.n_features, hp.n_literals,
                                     train_set.n_predefined, hp.n_conjunctions, rng,
                                     hp.tau0);
    OptimizerState opt = OptimizerState::zeros_like(params);

    const std::size_t nf = train_set.n_features;
    const std::size_t np = train_set.n_predefined;
    const std::size_t bs = std::min(hp.batch_size, train_set.rows);

    TrainContext ctx;
    ctx.resize(bs, params);

    std::vector<std::size_t> order(train_set.rows);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> xperm(train_set.rows * nf);
    std::vector<double> pperm(train_set.rows * np);
    std::vector<std::uint8_t> yperm(train_set.rows);

    auto shuffle_pass = [&] {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t r = 0; r < order.size(); ++r) {
            const std::size_t s = order[r];
            std::memcpy(xperm.data() + r * nf, train_set.features.data() + s * nf,
                        nf * sizeof(double));
            if (np)
                std::memcpy(pperm.data() + r * np,
                            train_set.predefined.data() + s * np, np * sizeof(double));
            yperm[r] = train_set.labels[s];
        }
    };

    auto run_step = [&](std::size_t start, std::size_t rows, double tau) {
        const Batch batch{{xperm.data() + start * nf, rows * nf},
                          {pperm.data() + start * np, rows * np},
                          {yperm.data() + start, rows},
                          rows};
        materialize_weights(params, tau, Mode::Train, ctx.fwd);
        model_forward_batch(params, batch.x, batch.predef, rows, tau, Mode::Train,
                            ctx.fwd);
        backward_into(ctx, batch, params, tau, hp.lambda_and, hp.lambda_or,
                      hp.lambda_p);
        adam_step(params, ctx.grads, opt, hp.learning_rate, hp.adam_beta1,
                  hp.adam_beta2, hp.adam_eps);
    };

    TrainReport report;
    report.history.reserve(hp.epochs_total);
    report.restart_resets_tau = hp.restart_resets_tau;
    report.seed = hp.seed;

    ModelParams best = params;
    double best_loss = 0.0;
    bool has_best = false;
    std::size_t best_epoch = 0;
    std::size_t total_steps = 0;
    std::size_t cursor = train_set.rows; // steps mode: reshuffle on first use
    double tau = hp.tau0;

    for (std::size_t epoch = 0; epoch < hp.epochs_total; ++epoch) {
        if (epoch > 0 && epoch % hp.restart_period == 0) {
            params = init_params(nf, hp.n_literals, np, hp.n_conjunctions, rng,
                                 hp.tau0);
            opt.reset();
        }
        const std::size_t seg =
            hp.restart_resets_tau ? epoch % hp.restart_period : epoch;
        tau = cooling(hp.tau0, hp.gamma, seg, hp.tau_min);

        if (hp.epoch_unit == EpochUnit::Passes) {
            shuffle_pass();
            for (std::size_t start = 0; start < train_set.rows; start += bs) {
                const std::size_t rows = std::min(bs, train_set.rows - start);
                run_step(start, rows, tau);
                ++total_steps;
            }
        } else {
            if (cursor >= train_set.rows) {
                shuffle_pass();
                cursor = 0;
            }
            const std::size_t rows = std::min(bs, train_set.rows - cursor);
            run_step(cursor, rows, tau);
            cursor += rows;
            ++total_steps;
        }

        const double full = full_train_loss(ctx, params, tau, train_set, bs,
                                            hp.lambda_and, hp.lambda_or, hp.lambda_p);
        if (!std::isfinite(full))
            throw TrainError("train: non-finite loss at epoch " + std::to_string(epoch));
        report.history.push_back({epoch, full, tau, epoch / hp.restart_period});
        if (!has_best || full < best_loss) {
            has_best = true;
            best_loss = full;
            best_epoch = epoch;
            best = params;
        }
    }

    best.validate();
    report.best_epoch = best_epoch;
    report.best_loss = best_loss;
    report.has_best = has_best;
    report.final_tau = tau;
    report.total_steps = total_steps;
    report.test_accuracy = evaluate_accuracy(best, test_set);

    std::vector<FeatureStats> bounds = train_set.meta.stats;
    if (bounds.empty()) bounds.assign(nf, FeatureStats{});
    const Dnf rule = simplify(decode(best, train_set.meta), bounds);
    const RuleMetrics rm = metrics(rule);
    report.rule_conjunctions = rm.n_conjunctions;
    report.rule_mean_literals = rm.mean_literals;

    return TrainResult{std::move(best), std::move(report)};
}

} // namespace rulenet
