#include "rulenet/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string_view>

#include "rulenet/errors.hpp"

namespace rulenet::kernels {
namespace {

Isa parse_isa(std::string_view s) {
    if (s == "scalar") return Isa::Scalar;
    if (s == "avx2") return Isa::Avx2;
    if (s == "auto" || s.empty()) return Isa::Auto;
    throw ConfigError("unknown kernel isa: " + std::string(s) +
                      " (expected scalar|avx2|auto)");
}

Isa resolve(Isa isa) {
    if (isa == Isa::Auto) return avx2_supported() ? Isa::Avx2 : Isa::Scalar;
    return isa;
}

Isa initial_isa() {
    if (const char* env = std::getenv("RULENET_KERNELS"))
        return resolve(parse_isa(env));
    return resolve(Isa::Auto);
}

std::atomic<Isa>& current() {
    static std::atomic<Isa> isa{initial_isa()};
    return isa;
}

} // namespace

const KernelOps& active_ops() {
    return current().load() == Isa::Avx2 ? avx2_ops() : scalar_ops();
}

void set_active_isa(Isa isa) {
    const Isa r = resolve(isa);
    if (r == Isa::Avx2 && !avx2_supported())
        throw ConfigError("avx2 kernels requested but not supported on this CPU");
    current().store(r);
}

Isa active_isa() { return current().load(); }

std::string isa_name(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
        default: return "auto";
    }
}

} // namespace rulenet::kernels
