#include <cstdlib>
#include <cstring>

#include "anisostable/simd.hpp"

namespace anisostable::simd {

namespace {

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) || defined(__i386__)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

}  // namespace

bool avx2_supported() { return cpu_has_avx2_fma(); }

const Kernels& active() {
    static const Kernels* chosen = [] {
        const char* env = std::getenv("ANISOSTABLE_SIMD");
        if (env && std::strcmp(env, "scalar") == 0) return &scalar_kernels();
        if (cpu_has_avx2_fma()) return avx2_kernels();
        return &scalar_kernels();
    }();
    return *chosen;
}

}  // namespace anisostable::simd
