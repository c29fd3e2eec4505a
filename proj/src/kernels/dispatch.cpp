#include <atomic>
#include <cstdlib>

#include "hbnet/kernels.hpp"

namespace hbnet::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") != 0;
#else
    return false;
#endif
}

const KernelTable* lookup(const std::string& name) {
    if (name == "scalar") return &kScalarTable;
#if defined(__x86_64__) || defined(_M_X64)
    if (name == "avx2") {
        if (!cpu_has_avx2()) fail("kernel variant 'avx2' not supported by this CPU");
        return &kAvx2Table;
    }
#endif
#if defined(__aarch64__)
    if (name == "neon") return &kNeonTable;
#endif
    fail("unknown kernel variant '" + name + "' (have: scalar" +
#if defined(__x86_64__) || defined(_M_X64)
         std::string(cpu_has_avx2() ? ", avx2" : "") +
#endif
#if defined(__aarch64__)
         std::string(", neon") +
#endif
         ")");
}

const KernelTable* pick_default() {
    if (const char* env = std::getenv("HBNET_KERNEL"); env != nullptr && *env != '\0' &&
                                                       std::string(env) != "auto") {
        return lookup(env);
    }
#if defined(__x86_64__) || defined(_M_X64)
    if (cpu_has_avx2()) return &kAvx2Table;
#endif
#if defined(__aarch64__)
    return &kNeonTable;
#endif
    return &kScalarTable;
}

std::atomic<const KernelTable*> g_active{nullptr};

}  // namespace

const KernelTable& active() {
    const KernelTable* t = g_active.load(std::memory_order_acquire);
    if (t == nullptr) {
        t = pick_default();
        g_active.store(t, std::memory_order_release);
    }
    return *t;
}

void force(const std::string& name) {
    g_active.store(name == "auto" ? pick_default() : lookup(name), std::memory_order_release);
}

std::vector<std::string> available() {
    std::vector<std::string> names{"scalar"};
#if defined(__x86_64__) || defined(_M_X64)
    if (cpu_has_avx2()) names.emplace_back("avx2");
#endif
#if defined(__aarch64__)
    names.emplace_back("neon");
#endif
    return names;
}

}  // namespace hbnet::kernels
