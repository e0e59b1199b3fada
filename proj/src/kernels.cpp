#include "hrgrad/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>

namespace hrgrad::kernels {

namespace {

const Ops& select_ops() {
    const char* pref = std::getenv("HRGRAD_KERNEL");
    if (pref != nullptr && std::strcmp(pref, "scalar") == 0) return scalar_ops();
    if (pref != nullptr && std::strcmp(pref, "avx2") == 0) {
        const Ops* v = avx2_ops();
        return v != nullptr ? *v : scalar_ops();
    }
    const Ops* v = avx2_ops();
    return v != nullptr ? *v : scalar_ops();
}

} // namespace

const Ops& active_ops() {
    static const Ops& ops = select_ops();
    return ops;
}

double nrm2(const double* a, std::size_t n) { return std::sqrt(nrm2sq(a, n)); }

} // namespace hrgrad::kernels
