#include "rulenet/model.hpp"

#include <cmath>
#include <cstring>

#include "rulenet/errors.hpp"
#include "rulenet/kernels.hpp"

namespace rulenet {
namespace {

inline double step(double t) { return t > 0.0 ? 1.0 : 0.0; }

void check_finite(const std::vector<double>& v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x)) throw TrainError(std::string(what) + " has non-finite entry");
}

} // namespace

std::string PredefinedDescriptor::text() const {
    return "(" + feature + (positive ? " = " : " != ") + value + ")";
}

ModelParams ModelParams::zeros(std::size_t n_features, std::size_t n_learned,
                               std::size_t n_predefined, std::size_t n_conjunctions) {
    ModelParams p;
    p.n_features = n_features;
    p.n_learned = n_learned;
    p.n_predefined = n_predefined;
    p.n_conjunctions = n_conjunctions;
    p.literal_weights.assign(n_features * n_learned, 0.0);
    p.literal_biases.assign(n_learned, 0.0);
    p.and_logits.assign((n_learned + n_predefined) * n_conjunctions, 0.0);
    p.or_logits.assign(n_conjunctions, 0.0);
    return p;
}

void ModelParams::validate() const {
    if (n_conjunctions == 0)
        throw ConfigError("at least one conjunction node required");
    if (literal_weights.size() != n_features * n_learned)
        throw ShapeError("literal_weights size mismatch");
    if (literal_biases.size() != n_learned)
        throw ShapeError("literal_biases size mismatch");
    if (and_logits.size() != n_literals_total() * n_conjunctions)
        throw ShapeError("and_logits size mismatch");
    if (or_logits.size() != n_conjunctions)
        throw ShapeError("or_logits size mismatch");
    check_finite(literal_weights, "literal_weights");
    check_finite(literal_biases, "literal_biases");
    check_finite(and_logits, "and_logits");
    check_finite(or_logits, "or_logits");
}

std::vector<double> literal_forward(std::span<const double> x, const ModelParams& params,
                                    double tau, Mode mode) {
    if (x.size() != params.n_features)
        throw ShapeError("literal_forward: input length != n_features");
    if (!(tau > 0.0)) throw ConfigError("literal_forward: tau must be positive");

    const auto& ops = kernels::active_ops();
    std::vector<double> pre(params.n_learned);
    ops.affine_forward(1, params.n_features, params.n_learned, x.data(),
                       params.literal_weights.data(), params.literal_biases.data(),
                       pre.data());
    std::vector<double> out(params.n_learned);
    if (mode == Mode::Train) {
        ops.sigmoid_scaled(pre.size(), pre.data(), 1.0 / tau, out.data());
    } else {
        for (std::size_t k = 0; k < pre.size(); ++k) out[k] = step(pre[k]);
    }
    return out;
}

std::vector<double> and_forward(std::span<const double> phi, const ModelParams& params,
                                double tau, Mode mode) {
    const std::size_t m = params.n_literals_total();
    const std::size_t j = params.n_conjunctions;
    if (phi.size() != m) throw ShapeError("and_forward: phi length != literal count");
    if (!(tau > 0.0)) throw ConfigError("and_forward: tau must be positive");

    const auto& ops = kernels::active_ops();
    std::vector<double> w(m * j);
    if (mode == Mode::Train) {
        ops.sigmoid_scaled(w.size(), params.and_logits.data(), 1.0 / tau, w.data());
    } else {
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = step(params.and_logits[i]);
    }
    std::vector<double> slack(j), z(j);
    ops.conj_forward(1, m, j, w.data(), phi.data(), slack.data(), z.data());
    return z;
}

double or_forward(std::span<const double> z, const ModelParams& params, double tau,
                  Mode mode) {
    const std::size_t j = params.n_conjunctions;
    if (j == 0) throw ConfigError("at least one conjunction node required");
    if (z.size() != j) throw ShapeError("or_forward: z length != n_conjunctions");
    if (!(tau > 0.0)) throw ConfigError("or_forward: tau must be positive");

    const auto& ops = kernels::active_ops();
    std::vector<double> w(j);
    if (mode == Mode::Train) {
        ops.sigmoid_scaled(j, params.or_logits.data(), 1.0 / tau, w.data());
    } else {
        for (std::size_t i = 0; i < j; ++i) w[i] = step(params.or_logits[i]);
    }
    double yhat = 0.0;
    std::int32_t arg = 0;
    ops.disj_forward(1, j, w.data(), z.data(), &yhat, &arg);
    return yhat;
}

void ForwardScratch::resize(std::size_t rows, const ModelParams& params) {
    const std::size_t m = params.n_literals_total();
    const std::size_t j = params.n_conjunctions;
    pre.resize(rows * params.n_learned);
    phi.resize(rows * m);
    and_w.resize(m * j);
    and_w_t.resize(j * m);
    or_w.resize(j);
    slack.resize(rows * j);
    z.resize(rows * j);
    yhat.resize(rows);
    argmax.resize(rows);
}

void materialize_weights(const ModelParams& params, double tau, Mode mode,
                         ForwardScratch& scratch) {
    const auto& ops = kernels::active_ops();
    const std::size_t m = params.n_literals_total();
    const std::size_t j = params.n_conjunctions;
    scratch.and_w.resize(m * j);
    scratch.and_w_t.resize(j * m);
    scratch.or_w.resize(j);
    if (mode == Mode::Train) {
        ops.sigmoid_scaled(m * j, params.and_logits.data(), 1.0 / tau,
                           scratch.and_w.data());
        ops.sigmoid_scaled(j, params.or_logits.data(), 1.0 / tau, scratch.or_w.data());
    } else {
        for (std::size_t i = 0; i < m * j; ++i)
            scratch.and_w[i] = step(params.and_logits[i]);
        for (std::size_t i = 0; i < j; ++i) scratch.or_w[i] = step(params.or_logits[i]);
    }
    kernels::transpose(m, j, scratch.and_w.data(), scratch.and_w_t.data());
}

void model_forward_batch(const ModelParams& params, std::span<const double> x,
                         std::span<const double> predef, std::size_t rows,
                         double tau, Mode mode, ForwardScratch& scratch) {
    const std::size_t n = params.n_features;
    const std::size_t m = params.n_learned;
    const std::size_t p = params.n_predefined;
    const std::size_t mt = params.n_literals_total();
    const std::size_t j = params.n_conjunctions;
    if (j == 0) throw ConfigError("at least one conjunction node required");
    if (x.size() != rows * n) throw ShapeError("model_forward: x size mismatch");
    if (predef.size() != rows * p) throw ShapeError("model_forward: predef size mismatch");
    if (!(tau > 0.0)) throw ConfigError("model_forward: tau must be positive");

    const auto& ops = kernels::active_ops();
    ops.affine_forward(rows, n, m, x.data(), params.literal_weights.data(),
                       params.literal_biases.data(), scratch.pre.data());

    if (p == 0) {
        // phi is the learned block only; write it in place.
        if (mode == Mode::Train) {
            ops.sigmoid_scaled(rows * m, scratch.pre.data(), 1.0 / tau,
                               scratch.phi.data());
        } else {
            for (std::size_t i = 0; i < rows * m; ++i)
                scratch.phi[i] = step(scratch.pre[i]);
        }
    } else {
        if (mode == Mode::Train) {
            // Sigmoid in bulk, then interleave with the predefined columns.
            ops.sigmoid_scaled(rows * m, scratch.pre.data(), 1.0 / tau,
                               scratch.pre.data());
        } else {
            for (std::size_t i = 0; i < rows * m; ++i)
                scratch.pre[i] = step(scratch.pre[i]);
        }
        for (std::size_t b = 0; b < rows; ++b) {
            double* row = scratch.phi.data() + b * mt;
            std::memcpy(row, scratch.pre.data() + b * m, m * sizeof(double));
            std::memcpy(row + m, predef.data() + b * p, p * sizeof(double));
        }
    }

    ops.conj_forward(rows, mt, j, scratch.and_w.data(), scratch.phi.data(),
                     scratch.slack.data(), scratch.z.data());
    ops.disj_forward(rows, j, scratch.or_w.data(), scratch.z.data(),
                     scratch.yhat.data(), scratch.argmax.data());
}

std::vector<double> model_forward(const ModelParams& params, std::span<const double> x,
                                  std::span<const double> predef, std::size_t rows,
                                  double tau, Mode mode) {
    ForwardScratch scratch;
    scratch.resize(rows, params);
    materialize_weights(params, tau, mode, scratch);
    model_forward_batch(params, x, predef, rows, tau, mode, scratch);
    return scratch.yhat;
}

BinaryMasks binarize_masks(const ModelParams& params) {
    BinaryMasks masks;
    masks.and_mask.resize(params.and_logits.size());
    masks.or_mask.resize(params.or_logits.size());
    for (std::size_t i = 0; i < params.and_logits.size(); ++i)
        masks.and_mask[i] = params.and_logits[i] > 0.0 ? 1 : 0;
    for (std::size_t i = 0; i < params.or_logits.size(); ++i)
        masks.or_mask[i] = params.or_logits[i] > 0.0 ? 1 : 0;
    return masks;
}

} // namespace rulenet
