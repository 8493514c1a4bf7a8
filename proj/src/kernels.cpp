#include "beta/kernels.hpp"

#include <cstdlib>
#include <string_view>

#include "beta/errors.hpp"

namespace beta::kern {

const Ops& ops() {
    static const Ops* chosen = [] {
        if (const char* env = std::getenv("BETA_KERNELS")) {
            std::string_view want(env);
            if (want == "scalar") return &scalar_ops();
            if (want == "avx2") {
                const Ops* t = avx2_ops();
                if (!t) throw config_error("BETA_KERNELS=avx2 but AVX2 is unavailable");
                return t;
            }
            throw config_error("unknown BETA_KERNELS value: " + std::string(env));
        }
        if (const Ops* t = avx2_ops()) return t;
        return &scalar_ops();
    }();
    return *chosen;
}

}  // namespace beta::kern
