#include <atomic>
#include <cstdlib>
#include <string_view>

#include "kernels_internal.hpp"

namespace srnr::simd {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

const KernelTable* initial_table() noexcept {
    const KernelTable* best = avx2_kernels();
    if (const char* env = std::getenv("SRNR_KERNEL")) {
        const std::string_view name(env);
        if (name == "scalar") return &scalar_kernels();
        if (name == "avx2" && best) return best;
    }
    return best ? best : &scalar_kernels();
}

std::atomic<const KernelTable*>& active() noexcept {
    static std::atomic<const KernelTable*> table{initial_table()};
    return table;
}

}  // namespace

const KernelTable* avx2_kernels() noexcept {
    static const KernelTable* table = cpu_has_avx2() ? detail::avx2_table() : nullptr;
    return table;
}

const KernelTable& kernels() noexcept { return *active().load(std::memory_order_acquire); }

bool select_isa(Isa isa) noexcept {
    const KernelTable* table = isa == Isa::scalar ? &scalar_kernels() : avx2_kernels();
    if (!table) return false;
    active().store(table, std::memory_order_release);
    return true;
}

bool select_isa(std::string_view name) noexcept {
    if (name == "scalar") return select_isa(Isa::scalar);
    if (name == "avx2") return select_isa(Isa::avx2);
    if (name == "auto") {
        active().store(avx2_kernels() ? avx2_kernels() : &scalar_kernels(),
                       std::memory_order_release);
        return true;
    }
    return false;
}

std::string_view active_isa_name() noexcept { return kernels().name; }

}  // namespace srnr::simd
