#include <cstdlib>
#include <string_view>

#include "ppgsleep/kernels/kernels.hpp"

namespace ppgsleep::kernels {
namespace {

const KernelTable& select() noexcept {
    const KernelTable* best = avx2_kernels();
    if (!best) best = neon_kernels();
    if (!best) best = &scalar_kernels();

    if (const char* env = std::getenv("PPGSLEEP_SIMD")) {
        const std::string_view want(env);
        if (want == "scalar") return scalar_kernels();
        if (want == "avx2" && avx2_kernels()) return *avx2_kernels();
        if (want == "neon" && neon_kernels()) return *neon_kernels();
    }
    return *best;
}

}  // namespace

const KernelTable& active() noexcept {
    static const KernelTable& table = select();
    return table;
}

std::string_view backend_name(Backend b) noexcept {
    switch (b) {
        case Backend::Scalar: return "scalar";
        case Backend::Avx2: return "avx2";
        case Backend::Neon: return "neon";
    }
    return "scalar";
}

}  // namespace ppgsleep::kernels
