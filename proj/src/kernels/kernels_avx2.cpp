#include "rulenet/kernels.hpp"

#include "rulenet/errors.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define RULENET_HAVE_AVX2_BUILD 1
#include <immintrin.h>

#include <cstring>

#include "sigmoid_core.hpp"
#endif

// AVX2 kernels. Vector lanes run across output indices while reductions stay
// sequential, and all arithmetic is plain mul/add — each output element sees
// the exact operation sequence of the scalar reference, so results match it
// bitwise (asserted by the equivalence tests).
namespace rulenet::kernels {

#if RULENET_HAVE_AVX2_BUILD

namespace {

void affine_forward_avx2(std::size_t rows, std::size_t n_in, std::size_t n_out,
                         const double* x, const double* w, const double* bias,
                         double* out) {
    for (std::size_t b = 0; b < rows; ++b) {
        double* o = out + b * n_out;
        std::memcpy(o, bias, n_out * sizeof(double));
        const double* xr = x + b * n_in;
        for (std::size_t n = 0; n < n_in; ++n) {
            const __m256d xv = _mm256_set1_pd(xr[n]);
            const double* wr = w + n * n_out;
            std::size_t k = 0;
            for (; k + 4 <= n_out; k += 4) {
                __m256d acc = _mm256_loadu_pd(o + k);
                acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(wr + k), xv));
                _mm256_storeu_pd(o + k, acc);
            }
            const double xs = xr[n];
            for (; k < n_out; ++k) o[k] += wr[k] * xs;
        }
    }
}

void affine_backward_avx2(std::size_t rows, std::size_t n_in, std::size_t n_out,
                          const double* x, const double* g, double* dw,
                          double* dbias) {
    for (std::size_t b = 0; b < rows; ++b) {
        const double* gr = g + b * n_out;
        const double* xr = x + b * n_in;
        for (std::size_t n = 0; n < n_in; ++n) {
            const __m256d xv = _mm256_set1_pd(xr[n]);
            double* dwr = dw + n * n_out;
            std::size_t k = 0;
            for (; k + 4 <= n_out; k += 4) {
                __m256d acc = _mm256_loadu_pd(dwr + k);
                acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(gr + k), xv));
                _mm256_storeu_pd(dwr + k, acc);
            }
            const double xs = xr[n];
            for (; k < n_out; ++k) dwr[k] += gr[k] * xs;
        }
        std::size_t k = 0;
        for (; k + 4 <= n_out; k += 4) {
            __m256d acc = _mm256_loadu_pd(dbias + k);
            acc = _mm256_add_pd(acc, _mm256_loadu_pd(gr + k));
            _mm256_storeu_pd(dbias + k, acc);
        }
        for (; k < n_out; ++k) dbias[k] += gr[k];
    }
}

// Vector mirror of detail::exp_nonpos, lane for lane.
inline __m256d exp_nonpos_pd(__m256d a) {
    const __m256d underflow = _mm256_set1_pd(detail::kExpUnderflow);
    const __m256d dead = _mm256_cmp_pd(a, underflow, _CMP_LT_OQ);
    const __m256d ac = _mm256_max_pd(a, underflow);

    const __m256d k = _mm256_round_pd(
        _mm256_mul_pd(ac, _mm256_set1_pd(detail::kLog2E)),
        _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_sub_pd(ac, _mm256_mul_pd(k, _mm256_set1_pd(detail::kLn2Hi)));
    r = _mm256_sub_pd(r, _mm256_mul_pd(k, _mm256_set1_pd(detail::kLn2Lo)));
    const __m256d r2 = _mm256_mul_pd(r, r);

    __m256d p = _mm256_mul_pd(_mm256_set1_pd(detail::kExpP0), r2);
    p = _mm256_add_pd(p, _mm256_set1_pd(detail::kExpP1));
    p = _mm256_mul_pd(p, r2);
    p = _mm256_add_pd(p, _mm256_set1_pd(detail::kExpP2));
    p = _mm256_mul_pd(p, r);

    __m256d q = _mm256_mul_pd(_mm256_set1_pd(detail::kExpQ0), r2);
    q = _mm256_add_pd(q, _mm256_set1_pd(detail::kExpQ1));
    q = _mm256_mul_pd(q, r2);
    q = _mm256_add_pd(q, _mm256_set1_pd(detail::kExpQ2));
    q = _mm256_mul_pd(q, r2);
    q = _mm256_add_pd(q, _mm256_set1_pd(detail::kExpQ3));

    const __m256d ratio = _mm256_div_pd(p, _mm256_sub_pd(q, p));
    __m256d e = _mm256_add_pd(_mm256_set1_pd(1.0),
                              _mm256_mul_pd(_mm256_set1_pd(2.0), ratio));

    const __m128i k32 = _mm256_cvtpd_epi32(k);
    const __m256i k64 = _mm256_cvtepi32_epi64(k32);
    const __m256i bits =
        _mm256_slli_epi64(_mm256_add_epi64(k64, _mm256_set1_epi64x(1023)), 52);
    e = _mm256_mul_pd(e, _mm256_castsi256_pd(bits));
    return _mm256_andnot_pd(dead, e);
}

inline __m256d sigmoid_pd(__m256d t) {
    const __m256d neg = _mm256_xor_pd(t, _mm256_set1_pd(-0.0));
    const __m256d a = _mm256_min_pd(t, neg); // -|t|, sign-of-zero like scalar
    const __m256d e = exp_nonpos_pd(a);
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d s = _mm256_div_pd(e, _mm256_add_pd(one, e));
    const __m256d gt = _mm256_cmp_pd(t, _mm256_setzero_pd(), _CMP_GT_OQ);
    return _mm256_blendv_pd(s, _mm256_sub_pd(one, s), gt);
}

void sigmoid_scaled_avx2(std::size_t n, const double* x, double inv_tau,
                         double* out) {
    const __m256d it = _mm256_set1_pd(inv_tau);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, sigmoid_pd(_mm256_mul_pd(_mm256_loadu_pd(x + i), it)));
    for (; i < n; ++i) out[i] = detail::sigmoid_at(x[i] * inv_tau);
}

void sigmoid_backward_avx2(std::size_t n, const double* s, double inv_tau,
                           const double* g_in, double* g_out) {
    const __m256d it = _mm256_set1_pd(inv_tau);
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d sv = _mm256_loadu_pd(s + i);
        __m256d g = _mm256_mul_pd(_mm256_loadu_pd(g_in + i), sv);
        g = _mm256_mul_pd(g, _mm256_sub_pd(one, sv));
        _mm256_storeu_pd(g_out + i, _mm256_mul_pd(g, it));
    }
    for (; i < n; ++i) g_out[i] = g_in[i] * s[i] * (1.0 - s[i]) * inv_tau;
}

void conj_forward_avx2(std::size_t rows, std::size_t n_lits, std::size_t n_conj,
                       const double* w, const double* phi, double* slack,
                       double* z) {
    const __m256d one = _mm256_set1_pd(1.0);
    for (std::size_t b = 0; b < rows; ++b) {
        double* s = slack + b * n_conj;
        for (std::size_t j = 0; j < n_conj; ++j) s[j] = 0.0;
        const double* pr = phi + b * n_lits;
        for (std::size_t i = 0; i < n_lits; ++i) {
            const double beta = 1.0 - pr[i];
            const __m256d bv = _mm256_set1_pd(beta);
            const double* wr = w + i * n_conj;
            std::size_t j = 0;
            for (; j + 4 <= n_conj; j += 4) {
                __m256d acc = _mm256_loadu_pd(s + j);
                acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(wr + j), bv));
                _mm256_storeu_pd(s + j, acc);
            }
            for (; j < n_conj; ++j) s[j] += wr[j] * beta;
        }
        double* zr = z + b * n_conj;
        std::size_t j = 0;
        for (; j + 4 <= n_conj; j += 4) {
            const __m256d sv = _mm256_loadu_pd(s + j);
            _mm256_storeu_pd(zr + j, _mm256_sub_pd(one, _mm256_min_pd(sv, one)));
        }
        for (; j < n_conj; ++j) zr[j] = 1.0 - (s[j] < 1.0 ? s[j] : 1.0);
    }
}

void min1_backward_avx2(std::size_t n, const double* slack, const double* gz,
                        double* gs) {
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d msign = _mm256_set1_pd(-0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d open = _mm256_cmp_pd(_mm256_loadu_pd(slack + i), one, _CMP_LT_OQ);
        const __m256d ng = _mm256_xor_pd(_mm256_loadu_pd(gz + i), msign);
        _mm256_storeu_pd(gs + i, _mm256_and_pd(open, ng));
    }
    for (; i < n; ++i) gs[i] = slack[i] < 1.0 ? -gz[i] : 0.0;
}

void conj_backward_weights_avx2(std::size_t rows, std::size_t n_lits,
                                std::size_t n_conj, const double* phi,
                                const double* gs, double* gw) {
    for (std::size_t b = 0; b < rows; ++b) {
        const double* gr = gs + b * n_conj;
        const double* pr = phi + b * n_lits;
        for (std::size_t i = 0; i < n_lits; ++i) {
            const double beta = 1.0 - pr[i];
            const __m256d bv = _mm256_set1_pd(beta);
            double* gwr = gw + i * n_conj;
            std::size_t j = 0;
            for (; j + 4 <= n_conj; j += 4) {
                __m256d acc = _mm256_loadu_pd(gwr + j);
                acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(gr + j), bv));
                _mm256_storeu_pd(gwr + j, acc);
            }
            for (; j < n_conj; ++j) gwr[j] += gr[j] * beta;
        }
    }
}

void conj_backward_inputs_avx2(std::size_t rows, std::size_t n_lits,
                               std::size_t n_conj, const double* wt,
                               const double* gs, double* gphi) {
    for (std::size_t b = 0; b < rows; ++b) {
        double* out = gphi + b * n_lits;
        for (std::size_t i = 0; i < n_lits; ++i) out[i] = 0.0;
        const double* gr = gs + b * n_conj;
        for (std::size_t j = 0; j < n_conj; ++j) {
            const double c = gr[j];
            const __m256d cv = _mm256_set1_pd(c);
            const double* wr = wt + j * n_lits;
            std::size_t i = 0;
            for (; i + 4 <= n_lits; i += 4) {
                __m256d acc = _mm256_loadu_pd(out + i);
                acc = _mm256_sub_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(wr + i), cv));
                _mm256_storeu_pd(out + i, acc);
            }
            for (; i < n_lits; ++i) out[i] -= wr[i] * c;
        }
    }
}

} // namespace

bool avx2_supported() { return __builtin_cpu_supports("avx2") != 0; }

const KernelOps& avx2_ops() {
    static const KernelOps ops = {
        "avx2",
        affine_forward_avx2,
        affine_backward_avx2,
        sigmoid_scaled_avx2,
        sigmoid_backward_avx2,
        conj_forward_avx2,
        min1_backward_avx2,
        conj_backward_weights_avx2,
        conj_backward_inputs_avx2,
        scalar_ops().disj_forward, // argmax scan is inherently scalar
    };
    return ops;
}

#else // !RULENET_HAVE_AVX2_BUILD

bool avx2_supported() { return false; }

const KernelOps& avx2_ops() {
    throw ConfigError("avx2 kernels not compiled for this architecture");
}

#endif

} // namespace rulenet::kernels
