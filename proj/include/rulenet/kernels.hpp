#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace rulenet::kernels {

// Batched layer primitives behind the model and the trainer. All matrices are
// row-major double arrays; no op allocates; inputs and outputs must not alias.
//
// Two implementations exist: a scalar reference and an AVX2 variant. Both
// execute the same floating-point operations in the same order (vectorization
// is across output indices, reductions stay sequential, no FMA), so their
// results are bitwise identical — the equivalence tests assert exact equality.
struct KernelOps {
    const char* name;

    // out[b,k] = sum_n x[b,n]*w[n,k] + bias[k]
    void (*affine_forward)(std::size_t rows, std::size_t n_in, std::size_t n_out,
                           const double* x, const double* w, const double* bias,
                           double* out);

    // dw[n,k] += sum_b x[b,n]*g[b,k];  dbias[k] += sum_b g[b,k]
    void (*affine_backward)(std::size_t rows, std::size_t n_in, std::size_t n_out,
                            const double* x, const double* g, double* dw,
                            double* dbias);

    // out[i] = sigma(x[i]*inv_tau), stable for extreme arguments
    void (*sigmoid_scaled)(std::size_t n, const double* x, double inv_tau,
                           double* out);

    // g_out[i] = g_in[i]*s[i]*(1-s[i])*inv_tau, s = stored sigmoid outputs
    void (*sigmoid_backward)(std::size_t n, const double* s, double inv_tau,
                             const double* g_in, double* g_out);

    // slack[b,j] = sum_i w[i,j]*(1-phi[b,i]);  z[b,j] = 1 - min(slack[b,j], 1)
    void (*conj_forward)(std::size_t rows, std::size_t n_lits, std::size_t n_conj,
                         const double* w, const double* phi, double* slack,
                         double* z);

    // gs[i] = slack[i] < 1 ? -gz[i] : 0   (subgradient of z = 1 - min(slack,1))
    void (*min1_backward)(std::size_t n, const double* slack, const double* gz,
                          double* gs);

    // gw[i,j] += sum_b gs[b,j]*(1-phi[b,i])
    void (*conj_backward_weights)(std::size_t rows, std::size_t n_lits,
                                  std::size_t n_conj, const double* phi,
                                  const double* gs, double* gw);

    // gphi[b,i] = -sum_j wt[j,i]*gs[b,j]   (wt = w transposed, n_conj x n_lits)
    void (*conj_backward_inputs)(std::size_t rows, std::size_t n_lits,
                                 std::size_t n_conj, const double* wt,
                                 const double* gs, double* gphi);

    // yhat[b] = max_j wd[j]*z[b,j]; argmax[b] = lowest maximizing j
    void (*disj_forward)(std::size_t rows, std::size_t n_conj, const double* wd,
                         const double* z, double* yhat, std::int32_t* argmax);
};

enum class Isa { Auto, Scalar, Avx2 };

const KernelOps& scalar_ops();

// Compiled in and supported by the running CPU.
bool avx2_supported();
const KernelOps& avx2_ops();

// Process-wide selection. Auto resolves to the best supported lane; the
// RULENET_KERNELS environment variable (scalar|avx2|auto) sets the default.
const KernelOps& active_ops();
void set_active_isa(Isa isa);
Isa active_isa();
std::string isa_name(Isa isa);

// out[j,i] = in[i,j]; helper for conj_backward_inputs' transposed weights.
void transpose(std::size_t rows, std::size_t cols, const double* in, double* out);

} // namespace rulenet::kernels
