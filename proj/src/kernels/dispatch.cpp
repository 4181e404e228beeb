#include <cstdlib>
#include <string_view>

#include "clmrc/kernels.hpp"

namespace clmrc::kernels {

const KernelTable& active() {
    static const KernelTable& table = [] () -> const KernelTable& {
        const char* forced = std::getenv("CLMRC_KERNELS");
        if (forced != nullptr && std::string_view(forced) == "scalar") return scalar_table();
        if (const KernelTable* simd = avx2_table()) return *simd;
        return scalar_table();
    }();
    return table;
}

}  // namespace clmrc::kernels
