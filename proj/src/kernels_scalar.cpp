#include "hrgrad/kernels.hpp"

namespace hrgrad::kernels {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double nrm2sq_scalar(const double* a, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * a[i];
    return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scal_scalar(double alpha, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void combine_scalar(double ca, const double* a, double cb, const double* b, double* out,
                    std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = ca * a[i] + cb * b[i];
}

} // namespace

const Ops& scalar_ops() {
    static const Ops ops{"scalar", dot_scalar, nrm2sq_scalar, axpy_scalar, scal_scalar,
                         combine_scalar};
    return ops;
}

} // namespace hrgrad::kernels
