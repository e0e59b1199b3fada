#pragma once

#include <cstddef>

// Vector kernels used by every stage of the pipeline. A scalar reference
// implementation always exists; an AVX2/FMA variant is selected at runtime
// when the CPU supports it. The environment variable HRGRAD_KERNEL
// ("scalar" | "avx2" | "auto") overrides the selection at process start.
//
// A given backend is deterministic: lane layout and reduction order are
// fixed, so repeated runs produce bitwise-identical results.

namespace hrgrad::kernels {

struct Ops {
    const char* name;
    double (*dot)(const double* a, const double* b, std::size_t n);
    double (*nrm2sq)(const double* a, std::size_t n);
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n); // y += alpha*x
    void (*scal)(double alpha, double* x, std::size_t n);
    // out = ca*a + cb*b
    void (*combine)(double ca, const double* a, double cb, const double* b, double* out,
                    std::size_t n);
};

const Ops& scalar_ops();
const Ops* avx2_ops(); // nullptr when unsupported at compile or run time
const Ops& active_ops();

inline double dot(const double* a, const double* b, std::size_t n) {
    return active_ops().dot(a, b, n);
}
inline double nrm2sq(const double* a, std::size_t n) { return active_ops().nrm2sq(a, n); }
double nrm2(const double* a, std::size_t n);
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
    active_ops().axpy(alpha, x, y, n);
}
inline void scal(double alpha, double* x, std::size_t n) { active_ops().scal(alpha, x, n); }
inline void combine(double ca, const double* a, double cb, const double* b, double* out,
                    std::size_t n) {
    active_ops().combine(ca, a, cb, b, out, n);
}

} // namespace hrgrad::kernels
