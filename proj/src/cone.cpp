#include "hrgrad/cone.hpp"

#include <algorithm>
#include <bitset>
#include <cmath>

#include "hrgrad/kernels.hpp"

namespace hrgrad {

namespace {

constexpr std::size_t kMaxTasks = 16;
constexpr std::size_t kMaxRays = 512;

// Constraint indices: [0, m) are the orthant rows e_i, [m, 2m) the rows of A.
using ZeroSet = std::bitset<2 * kMaxTasks>;

struct Ray {
    Vec v; // unit length
    ZeroSet zero;
};

// Active-constraint set w.r.t. the orthant rows and the first `inserted`
// rows of A. Recomputed from scratch after each combination step; this is
// sturdier than intersecting parent sets when values sit near the tolerance.
ZeroSet active_set(const Vec& v, const ColMatrix& a, std::size_t inserted,
                   const Vec& row_norm, double zero_tol) {
    const std::size_t m = v.size();
    ZeroSet z;
    for (std::size_t i = 0; i < m; ++i)
        if (std::abs(v[i]) <= zero_tol) z.set(i);
    for (std::size_t r = 0; r < inserted; ++r) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += a(r, i) * v[i];
        if (std::abs(s) <= zero_tol * std::max(row_norm[r], 1e-300)) z.set(m + r);
    }
    return z;
}

} // namespace

std::vector<Vec> extreme_rays(const ColMatrix& a, const NumericTolerances& tol) {
    const std::size_t m = a.rows();
    if (a.cols() != m) throw InvalidInputError("extreme_rays: matrix must be square");
    if (m > kMaxTasks) throw SizeLimitError("extreme_rays: more than 16 tasks");
    double amax = 0.0;
    for (double x : a.data()) {
        if (!std::isfinite(x)) throw InvalidInputError("extreme_rays: non-finite entry");
        amax = std::max(amax, std::abs(x));
    }
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j)
            if (std::abs(a(i, j) - a(j, i)) > 1e-12 * std::max(amax, 1.0))
                throw InvalidInputError("extreme_rays: matrix is not symmetric");

    Vec row_norm(m, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += a(r, i) * a(r, i);
        row_norm[r] = std::sqrt(s);
    }

    std::vector<Ray> rays;
    rays.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        Ray r;
        r.v.assign(m, 0.0);
        r.v[i] = 1.0;
        r.zero = active_set(r.v, a, 0, row_norm, tol.cone_zero_tol);
        rays.push_back(std::move(r));
    }

    for (std::size_t rrow = 0; rrow < m; ++rrow) {
        const double scale = tol.cone_zero_tol * std::max(row_norm[rrow], 1e-300);
        std::vector<double> val(rays.size());
        std::vector<int> cls(rays.size()); // +1 / 0 / -1
        for (std::size_t k = 0; k < rays.size(); ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i < m; ++i) s += a(rrow, i) * rays[k].v[i];
            val[k] = s;
            cls[k] = std::abs(s) <= scale ? 0 : (s > 0.0 ? 1 : -1);
        }

        std::vector<Ray> next;
        for (std::size_t k = 0; k < rays.size(); ++k)
            if (cls[k] >= 0) {
                Ray kept = rays[k];
                if (cls[k] == 0) kept.zero.set(m + rrow);
                next.push_back(std::move(kept));
            }

        for (std::size_t p = 0; p < rays.size(); ++p) {
            if (cls[p] != 1) continue;
            for (std::size_t q = 0; q < rays.size(); ++q) {
                if (cls[q] != -1) continue;
                // Adjacency: no third ray's zero set contains the common one.
                const ZeroSet common = rays[p].zero & rays[q].zero;
                bool adjacent = true;
                for (std::size_t t = 0; t < rays.size(); ++t) {
                    if (t == p || t == q) continue;
                    if ((common & rays[t].zero) == common) {
                        adjacent = false;
                        break;
                    }
                }
                if (!adjacent) continue;

                Ray nw;
                nw.v.assign(m, 0.0);
                for (std::size_t i = 0; i < m; ++i)
                    nw.v[i] = val[p] * rays[q].v[i] - val[q] * rays[p].v[i];
                const double nn = kernels::nrm2(nw.v.data(), m);
                if (nn <= 1e-300) continue;
                kernels::scal(1.0 / nn, nw.v.data(), m);
                for (double& x : nw.v)
                    if (x < 0.0 && x >= -tol.cone_zero_tol) x = 0.0;
                nw.zero = active_set(nw.v, a, rrow + 1, row_norm, tol.cone_zero_tol);
                nw.zero.set(m + rrow);
                next.push_back(std::move(nw));
            }
        }
        if (next.size() > kMaxRays) throw SizeLimitError("extreme_rays: ray budget exceeded");
        rays = std::move(next);
    }

    std::vector<Vec> out;
    out.reserve(rays.size());
    for (auto& r : rays) {
        const double nn = kernels::nrm2(r.v.data(), m);
        if (nn <= 1e-300) continue;
        kernels::scal(1.0 / nn, r.v.data(), m);
        out.push_back(std::move(r.v));
    }
    // Drop numerical duplicates, keep a deterministic order.
    std::sort(out.begin(), out.end());
    std::vector<Vec> dedup;
    for (auto& v : out) {
        bool dup = false;
        for (const auto& u : dedup)
            if (kernels::dot(u.data(), v.data(), m) >= 1.0 - 1e-12) {
                dup = true;
                break;
            }
        if (!dup) dedup.push_back(std::move(v));
    }
    return dedup;
}

HarmonizedCone build_cone(const GradientSet& g, const NumericTolerances& tol) {
    if (g.nonzero_count() == 0)
        throw InvalidInputError("build_cone: all task gradients are zero");
    HarmonizedCone cone;
    cone.weight_rays = extreme_rays(gram(g), tol);

    const std::size_t d = g.dim();
    const double drop = tol.cone_zero_tol * g.max_norm();
    Vec centroid(d, 0.0);
    for (const auto& pi : cone.weight_rays) {
        Vec r = matvec(g.matrix(), pi);
        const double rn = kernels::nrm2(r.data(), d);
        if (rn <= drop) continue;
        kernels::axpy(1.0 / rn, r.data(), centroid.data(), d);
        cone.physical_rays.push_back(std::move(r));
    }
    if (cone.physical_rays.empty()) {
        cone.degenerate = true;
        cone.anchor.assign(d, 0.0);
        return cone;
    }
    cone.anchor = normalize(centroid, g.delta());
    return cone;
}

} // namespace hrgrad
