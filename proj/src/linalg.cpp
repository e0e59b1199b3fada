#include "hrgrad/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hrgrad/kernels.hpp"
#include "hrgrad/rng.hpp"

namespace hrgrad {

ColMatrix gram(const GradientSet& g) {
    const std::size_t m = g.tasks(), d = g.dim();
    ColMatrix a(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i; j < m; ++j) {
            const double v = kernels::dot(g.matrix().col(i), g.matrix().col(j), d);
            a(i, j) = v;
            a(j, i) = v;
        }
    return a;
}

std::size_t Svd::rank(double cutoff_rel) const {
    if (sigma.empty() || sigma[0] == 0.0) return 0;
    const double cut = cutoff_rel * sigma[0];
    std::size_t r = 0;
    while (r < sigma.size() && sigma[r] > cut) ++r;
    return r;
}

// One-sided (Hestenes) Jacobi: plane rotations orthogonalize column pairs of
// a working copy W until all pairwise dots vanish relative to the column
// norms; then W = U diag(sigma) and the accumulated rotations form V.
Svd svd(const ColMatrix& m_in) {
    const std::size_t d = m_in.rows(), m = m_in.cols();
    ColMatrix w = m_in;
    ColMatrix v(m, m);
    for (std::size_t i = 0; i < m; ++i) v(i, i) = 1.0;

    const double eps = 1e-15;
    const int max_sweeps = 64;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < m; ++p) {
            for (std::size_t q = p + 1; q < m; ++q) {
                const double app = kernels::nrm2sq(w.col(p), d);
                const double aqq = kernels::nrm2sq(w.col(q), d);
                const double apq = kernels::dot(w.col(p), w.col(q), d);
                if (app == 0.0 || aqq == 0.0) continue;
                if (std::abs(apq) <= eps * std::sqrt(app * aqq)) continue;
                rotated = true;
                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < d; ++i) {
                    const double wp = w(i, p), wq = w(i, q);
                    w(i, p) = c * wp - s * wq;
                    w(i, q) = s * wp + c * wq;
                }
                for (std::size_t i = 0; i < m; ++i) {
                    const double vp = v(i, p), vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) break;
    }

    Svd out;
    out.sigma.resize(m);
    for (std::size_t j = 0; j < m; ++j) out.sigma[j] = kernels::nrm2(w.col(j), d);

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return out.sigma[a] > out.sigma[b]; });

    out.u = ColMatrix(d, m);
    out.v = ColMatrix(m, m);
    Vec sorted(m);
    for (std::size_t j = 0; j < m; ++j) {
        const std::size_t src = order[j];
        sorted[j] = out.sigma[src];
        if (out.sigma[src] > 0.0) {
            const double inv = 1.0 / out.sigma[src];
            for (std::size_t i = 0; i < d; ++i) out.u(i, j) = w(i, src) * inv;
        }
        for (std::size_t i = 0; i < m; ++i) out.v(i, j) = v(i, src);
    }
    out.sigma = std::move(sorted);
    return out;
}

PinvOnes pseudoinverse_rows_times_ones(const ColMatrix& m_in, const NumericTolerances& tol) {
    const std::size_t d = m_in.rows(), m = m_in.cols();
    for (double x : m_in.data())
        if (!std::isfinite(x)) throw InvalidInputError("pseudoinverse: non-finite entry");
    PinvOnes out;
    out.value.assign(d, 0.0);
    const Svd s = svd(m_in);
    out.rank = s.rank(tol.svd_cutoff_rel);
    if (out.rank == 0) {
        out.degenerate = true;
        return out;
    }
    // (M^+)^T 1 = U S^+ V^T 1: project ones onto V, damp by 1/sigma, expand in U.
    for (std::size_t k = 0; k < out.rank; ++k) {
        double z = 0.0;
        for (std::size_t i = 0; i < m; ++i) z += s.v(i, k);
        kernels::axpy(z / s.sigma[k], s.u.col(k), out.value.data(), d);
    }
    return out;
}

Vec lu_solve(ColMatrix a, Vec b, double rel_tol) {
    const std::size_t n = a.rows();
    if (a.cols() != n || b.size() != n) throw InvalidInputError("lu_solve: shape mismatch");
    double amax = 0.0;
    for (double x : a.data()) amax = std::max(amax, std::abs(x));
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
        if (std::abs(a(piv, k)) <= rel_tol * amax)
            throw DegeneracyError("lu_solve: singular system");
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
            std::swap(b[k], b[piv]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = a(i, k) / a(k, k);
            a(i, k) = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
            b[i] -= f * b[k];
        }
    }
    Vec x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= a(ii, j) * x[j];
        x[ii] = s / a(ii, ii);
    }
    return x;
}

Vec svd_least_squares(const ColMatrix& a, const Vec& b, double cutoff_rel) {
    const std::size_t d = a.rows(), m = a.cols();
    if (b.size() != d) throw InvalidInputError("svd_least_squares: shape mismatch");
    const Svd s = svd(a);
    const std::size_t r = s.rank(cutoff_rel);
    Vec x(m, 0.0);
    for (std::size_t k = 0; k < r; ++k) {
        const double z = kernels::dot(s.u.col(k), b.data(), d) / s.sigma[k];
        for (std::size_t i = 0; i < m; ++i) x[i] += z * s.v(i, k);
    }
    return x;
}

Vec matvec(const ColMatrix& a, const Vec& x) {
    if (x.size() != a.cols()) throw InvalidInputError("matvec: shape mismatch");
    Vec y(a.rows(), 0.0);
    for (std::size_t j = 0; j < a.cols(); ++j) kernels::axpy(x[j], a.col(j), y.data(), a.rows());
    return y;
}

double spectral_norm_psd(const ColMatrix& a, std::uint64_t seed) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw InvalidInputError("spectral_norm_psd: matrix must be square");
    std::mt19937_64 rng(seed);
    Vec x(n);
    for (double& xi : x) xi = gaussian(rng);
    double nx = kernels::nrm2(x.data(), n);
    if (nx == 0.0) {
        x[0] = 1.0;
        nx = 1.0;
    }
    kernels::scal(1.0 / nx, x.data(), n);
    double lambda = 0.0;
    for (int it = 0; it < 100000; ++it) {
        Vec y = matvec(a, x);
        const double ny = kernels::nrm2(y.data(), n);
        if (ny == 0.0) return 0.0;
        const double next = kernels::dot(x.data(), y.data(), n); // Rayleigh quotient
        kernels::scal(1.0 / ny, y.data(), n);
        x = std::move(y);
        if (it > 0 && std::abs(next - lambda) <= 1e-12 * std::max(1.0, std::abs(next))) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    return lambda;
}

ColMatrix random_orthogonal(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    ColMatrix a(n, n);
    for (double& x : a.data()) x = gaussian(rng);

    // Householder QR; Q assembled by applying the reflectors to the identity.
    std::vector<Vec> reflectors;
    Vec betas;
    for (std::size_t k = 0; k < n; ++k) {
        Vec v(n - k);
        for (std::size_t i = k; i < n; ++i) v[i - k] = a(i, k);
        const double alpha = -std::copysign(kernels::nrm2(v.data(), v.size()), v[0]);
        v[0] -= alpha;
        const double vn2 = kernels::nrm2sq(v.data(), v.size());
        const double beta = vn2 > 0.0 ? 2.0 / vn2 : 0.0;
        for (std::size_t j = k; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k; i < n; ++i) s += v[i - k] * a(i, j);
            s *= beta;
            for (std::size_t i = k; i < n; ++i) a(i, j) -= s * v[i - k];
        }
        reflectors.push_back(std::move(v));
        betas.push_back(beta);
    }
    ColMatrix q(n, n);
    for (std::size_t i = 0; i < n; ++i) q(i, i) = 1.0;
    for (std::size_t k = n; k-- > 0;) {
        const Vec& v = reflectors[k];
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k; i < n; ++i) s += v[i - k] * q(i, j);
            s *= betas[k];
            for (std::size_t i = k; i < n; ++i) q(i, j) -= s * v[i - k];
        }
    }
    // Fix column signs so the factorization (and hence Q) is unique.
    for (std::size_t k = 0; k < n; ++k)
        if (a(k, k) < 0.0)
            for (std::size_t i = 0; i < n; ++i) q(i, k) = -q(i, k);
    return q;
}

} // namespace hrgrad
