#pragma once

#include <bit>
#include <cmath>
#include <cstdint>

// exp/sigmoid core shared by the scalar and AVX2 lanes. Both lanes must keep
// the exact operation sequence below (Cody-Waite reduction, Pade approximant,
// exponent-bit scaling, mul/add only) so their outputs stay bitwise equal.
namespace rulenet::kernels::detail {

inline constexpr double kLog2E = 1.4426950408889634073599;
inline constexpr double kLn2Hi = 6.93145751953125e-1;
inline constexpr double kLn2Lo = 1.42860682030941723212e-6;

// Cephes-style rational approximation of exp on [-ln2/2, ln2/2].
inline constexpr double kExpP0 = 1.26177193074810590878e-4;
inline constexpr double kExpP1 = 3.02994407707441961300e-2;
inline constexpr double kExpP2 = 9.99999999999999999910e-1;
inline constexpr double kExpQ0 = 3.00198505138664455042e-6;
inline constexpr double kExpQ1 = 2.52448340349684104192e-3;
inline constexpr double kExpQ2 = 2.27265548208155028766e-1;
inline constexpr double kExpQ3 = 2.00000000000000000005e0;

// Below this the result underflows toward denormals; flush to exact 0.
inline constexpr double kExpUnderflow = -708.0;

// exp(a) for a <= 0.
inline double exp_nonpos(double a) {
    if (a < kExpUnderflow) return 0.0;
    const double k = std::nearbyint(a * kLog2E);
    double r = a - k * kLn2Hi;
    r = r - k * kLn2Lo;
    const double r2 = r * r;
    const double p = ((kExpP0 * r2 + kExpP1) * r2 + kExpP2) * r;
    const double q = ((kExpQ0 * r2 + kExpQ1) * r2 + kExpQ2) * r2 + kExpQ3;
    const double e = 1.0 + 2.0 * (p / (q - p));
    const auto bits = static_cast<std::uint64_t>(static_cast<std::int64_t>(k) + 1023)
                      << 52;
    return e * std::bit_cast<double>(bits);
}

// sigma(t) via exp of the non-positive half: never overflows.
inline double sigmoid_at(double t) {
    const double a = t < 0.0 ? t : -t;
    const double e = exp_nonpos(a);
    const double s = e / (1.0 + e);
    return t > 0.0 ? 1.0 - s : s;
}

} // namespace rulenet::kernels::detail
