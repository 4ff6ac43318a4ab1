#include "gsa/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace gsa::kernels {

bool avx2_supported() {
#if defined(__x86_64__) || defined(_M_X64)
#if defined(__GNUC__) || defined(__clang__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
#else
    return false;
#endif
}

namespace {

const Ops& select() {
    const char* forced = std::getenv("GSA_KERNELS");
    if (forced != nullptr) {
        if (std::strcmp(forced, "scalar") == 0) return scalar_ops();
        if (std::strcmp(forced, "avx2") == 0 && avx2_ops() != nullptr && avx2_supported()) {
            return *avx2_ops();
        }
        return scalar_ops();
    }
    if (avx2_ops() != nullptr && avx2_supported()) return *avx2_ops();
    return scalar_ops();
}

} // namespace

const Ops& active() {
    static const Ops& ops = select();
    return ops;
}

} // namespace gsa::kernels
