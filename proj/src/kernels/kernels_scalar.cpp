#include "rulenet/kernels.hpp"

#include <cstring>

#include "sigmoid_core.hpp"

// Scalar reference kernels. Loop nests put the contiguous output index
// innermost and keep reduction order fixed; the AVX2 lane mirrors this
// layout so both lanes are bitwise identical.
namespace rulenet::kernels {
namespace {

void affine_forward_scalar(std::size_t rows, std::size_t n_in, std::size_t n_out,
                           const double* x, const double* w, const double* bias,
                           double* out) {
    for (std::size_t b = 0; b < rows; ++b) {
        double* o = out + b * n_out;
        std::memcpy(o, bias, n_out * sizeof(double));
        const double* xr = x + b * n_in;
        for (std::size_t n = 0; n < n_in; ++n) {
            const double xv = xr[n];
            const double* wr = w + n * n_out;
            for (std::size_t k = 0; k < n_out; ++k) o[k] += wr[k] * xv;
        }
    }
}

void affine_backward_scalar(std::size_t rows, std::size_t n_in, std::size_t n_out,
                            const double* x, const double* g, double* dw,
                            double* dbias) {
    for (std::size_t b = 0; b < rows; ++b) {
        const double* gr = g + b * n_out;
        const double* xr = x + b * n_in;
        for (std::size_t n = 0; n < n_in; ++n) {
            const double xv = xr[n];
            double* dwr = dw + n * n_out;
            for (std::size_t k = 0; k < n_out; ++k) dwr[k] += gr[k] * xv;
        }
        for (std::size_t k = 0; k < n_out; ++k) dbias[k] += gr[k];
    }
}

void sigmoid_scaled_scalar(std::size_t n, const double* x, double inv_tau,
                           double* out) {
    for (std::size_t i = 0; i < n; ++i)
        out[i] = detail::sigmoid_at(x[i] * inv_tau);
}

void sigmoid_backward_scalar(std::size_t n, const double* s, double inv_tau,
                             const double* g_in, double* g_out) {
    for (std::size_t i = 0; i < n; ++i)
        g_out[i] = g_in[i] * s[i] * (1.0 - s[i]) * inv_tau;
}

void conj_forward_scalar(std::size_t rows, std::size_t n_lits, std::size_t n_conj,
                         const double* w, const double* phi, double* slack,
                         double* z) {
    for (std::size_t b = 0; b < rows; ++b) {
        double* s = slack + b * n_conj;
        for (std::size_t j = 0; j < n_conj; ++j) s[j] = 0.0;
        const double* pr = phi + b * n_lits;
        for (std::size_t i = 0; i < n_lits; ++i) {
            const double beta = 1.0 - pr[i];
            const double* wr = w + i * n_conj;
            for (std::size_t j = 0; j < n_conj; ++j) s[j] += wr[j] * beta;
        }
        double* zr = z + b * n_conj;
        for (std::size_t j = 0; j < n_conj; ++j)
            zr[j] = 1.0 - (s[j] < 1.0 ? s[j] : 1.0);
    }
}

void min1_backward_scalar(std::size_t n, const double* slack, const double* gz,
                          double* gs) {
    for (std::size_t i = 0; i < n; ++i)
        gs[i] = slack[i] < 1.0 ? -gz[i] : 0.0;
}

void conj_backward_weights_scalar(std::size_t rows, std::size_t n_lits,
                                  std::size_t n_conj, const double* phi,
                                  const double* gs, double* gw) {
    for (std::size_t b = 0; b < rows; ++b) {
        const double* gr = gs + b * n_conj;
        const double* pr = phi + b * n_lits;
        for (std::size_t i = 0; i < n_lits; ++i) {
            const double beta = 1.0 - pr[i];
            double* gwr = gw + i * n_conj;
            for (std::size_t j = 0; j < n_conj; ++j) gwr[j] += gr[j] * beta;
        }
    }
}

void conj_backward_inputs_scalar(std::size_t rows, std::size_t n_lits,
                                 std::size_t n_conj, const double* wt,
                                 const double* gs, double* gphi) {
    for (std::size_t b = 0; b < rows; ++b) {
        double* out = gphi + b * n_lits;
        for (std::size_t i = 0; i < n_lits; ++i) out[i] = 0.0;
        const double* gr = gs + b * n_conj;
        for (std::size_t j = 0; j < n_conj; ++j) {
            const double c = gr[j];
            const double* wr = wt + j * n_lits;
            for (std::size_t i = 0; i < n_lits; ++i) out[i] -= wr[i] * c;
        }
    }
}

void disj_forward_scalar(std::size_t rows, std::size_t n_conj, const double* wd,
                         const double* z, double* yhat, std::int32_t* argmax) {
    for (std::size_t b = 0; b < rows; ++b) {
        const double* zr = z + b * n_conj;
        double best = wd[0] * zr[0];
        std::int32_t arg = 0;
        for (std::size_t j = 1; j < n_conj; ++j) {
            const double p = wd[j] * zr[j];
            if (p > best) { // strict: ties stay at the lowest index
                best = p;
                arg = static_cast<std::int32_t>(j);
            }
        }
        yhat[b] = best;
        argmax[b] = arg;
    }
}

} // namespace

const KernelOps& scalar_ops() {
    static const KernelOps ops = {
        "scalar",
        affine_forward_scalar,
        affine_backward_scalar,
        sigmoid_scaled_scalar,
        sigmoid_backward_scalar,
        conj_forward_scalar,
        min1_backward_scalar,
        conj_backward_weights_scalar,
        conj_backward_inputs_scalar,
        disj_forward_scalar,
    };
    return ops;
}

void transpose(std::size_t rows, std::size_t cols, const double* in, double* out) {
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = in[r * cols + c];
}

} // namespace rulenet::kernels
