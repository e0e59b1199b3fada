#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "hrgrad/gradient_set.hpp"
#include "hrgrad/kernels.hpp"
#include "hrgrad/linalg.hpp"
#include "hrgrad/rng.hpp"

using namespace hrgrad;

namespace {

ColMatrix two_columns(const Vec& a, const Vec& b) {
    ColMatrix g(a.size(), 2);
    std::copy(a.begin(), a.end(), g.col(0));
    std::copy(b.begin(), b.end(), g.col(1));
    return g;
}

} // namespace

TEST_CASE("normalize matches hand values") {
    const Vec v1{3.0, 4.0};
    const Vec u1 = normalize(v1, 0.0);
    CHECK(u1[0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(u1[1] == doctest::Approx(0.8).epsilon(1e-15));

    const Vec z{0.0, 0.0, 0.0};
    const Vec uz = normalize(z, 1e-12);
    CHECK(uz[0] == 0.0);
    CHECK(uz[1] == 0.0);
    CHECK(uz[2] == 0.0);

    const Vec v2{1.0, 0.0};
    const Vec u2 = normalize(v2, 1.0);
    CHECK(u2[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(u2[1] == 0.0);

    const Vec bad{1.0, std::numeric_limits<double>::infinity()};
    CHECK_THROWS_AS(normalize(bad, 1e-12), InvalidInputError);
}

TEST_CASE("normalize keeps direction and shrinks norm") {
    auto rng = make_stream(11, 0);
    for (int it = 0; it < 200; ++it) {
        const std::size_t d = 2 + rng() % 32;
        Vec v(d);
        for (double& x : v) x = gaussian(rng) * std::exp(3.0 * (uniform01(rng) - 0.5));
        const double delta = 1e-12;
        const Vec u = normalize(v, delta);
        const double nv = kernels::nrm2(v.data(), d);
        const double nu = kernels::nrm2(u.data(), d);
        CHECK(nu < 1.0);
        if (nv > 0.0) {
            const double cosv = kernels::dot(u.data(), v.data(), d) / (nu * nv);
            CHECK(cosv == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("gram matches hand values and is PSD") {
    {
        GradientSet g(two_columns({1, 0}, {0, 1}));
        const ColMatrix a = gram(g);
        CHECK(a(0, 0) == doctest::Approx(1.0));
        CHECK(a(0, 1) == doctest::Approx(0.0));
        CHECK(a(1, 1) == doctest::Approx(1.0));
    }
    {
        GradientSet g(two_columns({1, 0}, {-1, 0}));
        const ColMatrix a = gram(g);
        CHECK(a(0, 1) == doctest::Approx(-1.0));
        CHECK(a(1, 0) == doctest::Approx(-1.0));
    }
    {
        GradientSet g(two_columns({1, 0}, {std::cos(2.0943951023931953), std::sin(2.0943951023931953)}));
        const ColMatrix a = gram(g);
        CHECK(a(0, 1) == doctest::Approx(-0.5).epsilon(1e-14));
        CHECK(a(1, 0) == a(0, 1)); // exact symmetry by construction
    }
    // PSD: x^T A x >= -1e-10 trace for random probes.
    auto rng = make_stream(13, 0);
    for (int it = 0; it < 100; ++it) {
        const std::size_t d = 3 + rng() % 16, m = 2 + rng() % 5;
        ColMatrix g(d, m);
        for (double& x : g.data()) x = gaussian(rng);
        const GradientSet gs(std::move(g));
        const ColMatrix a = gram(gs);
        double trace = 0.0;
        for (std::size_t i = 0; i < m; ++i) trace += a(i, i);
        for (int probe = 0; probe < 20; ++probe) {
            Vec x(m);
            for (double& xi : x) xi = gaussian(rng);
            const Vec ax = matvec(a, x);
            CHECK(kernels::dot(x.data(), ax.data(), m) >= -1e-10 * trace);
        }
    }
}

TEST_CASE("pseudoinverse of orthonormal columns reduces to the plain sum") {
    ColMatrix m(3, 2);
    m(0, 0) = 1.0;
    m(1, 1) = 1.0;
    const PinvOnes p = pseudoinverse_rows_times_ones(m, {});
    CHECK_FALSE(p.degenerate);
    CHECK(p.rank == 2);
    CHECK(p.value[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(p.value[1] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(p.value[2] == doctest::Approx(0.0));
}

TEST_CASE("pseudoinverse of a single unit column returns it") {
    ColMatrix m(3, 1);
    m(0, 0) = 0.6;
    m(1, 0) = 0.8;
    const PinvOnes p = pseudoinverse_rows_times_ones(m, {});
    CHECK(p.value[0] == doctest::Approx(0.6).epsilon(1e-14));
    CHECK(p.value[1] == doctest::Approx(0.8).epsilon(1e-14));
}

TEST_CASE("pseudoinverse equalizes the projections (60 degree pair)") {
    const double c = 0.5, s = std::sqrt(3.0) / 2.0;
    ColMatrix m = two_columns({1, 0}, {c, s});
    const PinvOnes p = pseudoinverse_rows_times_ones(m, {});
    // Hand solve of the 2x2 normal system gives M lambda with lambda = (2/3, 2/3).
    CHECK(p.value[0] == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(p.value[1] == doctest::Approx(std::sqrt(3.0) / 3.0).epsilon(1e-13));
    const double d0 = p.value[0];
    const double d1 = c * p.value[0] + s * p.value[1];
    CHECK(d0 == doctest::Approx(d1).epsilon(1e-13));
}

TEST_CASE("pseudoinverse flags the all-zero matrix instead of throwing") {
    ColMatrix m(4, 2);
    const PinvOnes p = pseudoinverse_rows_times_ones(m, {});
    CHECK(p.degenerate);
    CHECK(p.rank == 0);
    for (double x : p.value) CHECK(x == 0.0);
}

TEST_CASE("equal-projection identity M^T y = 1 on random full-rank matrices") {
    auto rng = make_stream(17, 0);
    for (int it = 0; it < 300; ++it) {
        const std::size_t m = 1 + rng() % 6, d = m + rng() % (64 - m);
        ColMatrix mat(d, m);
        for (double& x : mat.data()) x = gaussian(rng);
        const PinvOnes p = pseudoinverse_rows_times_ones(mat, {});
        if (p.rank < m) continue;
        for (std::size_t j = 0; j < m; ++j) {
            const double proj = kernels::dot(mat.col(j), p.value.data(), d);
            CHECK(proj == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("gradient set caches norms and stabilized units") {
    GradientSet g(two_columns({3, 4}, {0, 0}), 1e-12);
    CHECK(g.norm(0) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(g.norm(1) == 0.0);
    CHECK(g.is_zero(1));
    CHECK(g.nonzero_count() == 1);
    const double unit_norm = kernels::nrm2(g.unit(0).data(), 2);
    CHECK(unit_norm <= 1.0);
    CHECK(unit_norm >= 1.0 - 2e-12 / 5.0);
    const Vec exact = g.unit_exact(0);
    CHECK(kernels::nrm2(exact.data(), 2) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("gradient set json round trip and schema rejection") {
    const std::string ok = R"({"dim":2,"tasks":2,"gradients":[[1.0,0.0],[0.25,-3.5]],"names":["a","b"]})";
    const GradientSet g = GradientSet::from_json(ok);
    CHECK(g.dim() == 2);
    CHECK(g.tasks() == 2);
    CHECK(g.column(1)[1] == -3.5);
    const GradientSet g2 = GradientSet::from_json(g.to_json());
    CHECK(g2.column(1)[1] == -3.5);
    CHECK(g2.names()[1] == "b");

    CHECK_THROWS_AS(GradientSet::from_json(R"({"dim":2,"tasks":2,"gradients":[[1,0],[1]]})"),
                    InvalidInputError);
    CHECK_THROWS_AS(GradientSet::from_json(R"({"dim":2,"tasks":1,"gradients":[[1,0],[0,1]]})"),
                    InvalidInputError);
    CHECK_THROWS_AS(GradientSet::from_json(R"({"tasks":1,"gradients":[[1,0]]})"),
                    InvalidInputError);
    CHECK_THROWS_AS(GradientSet::from_json(R"({"dim":2,"tasks":1,"gradients":[[1,0]],"x":1})"),
                    InvalidInputError);
    CHECK_THROWS_AS(GradientSet::from_json("not json"), InvalidInputError);
}

TEST_CASE("svd reproduces random matrices and their rank") {
    auto rng = make_stream(19, 0);
    for (int it = 0; it < 100; ++it) {
        const std::size_t m = 1 + rng() % 6, d = m + rng() % 32;
        ColMatrix mat(d, m);
        for (double& x : mat.data()) x = gaussian(rng);
        const Svd s = svd(mat);
        // Reconstruction U S V^T.
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t i = 0; i < d; ++i) {
                double acc = 0.0;
                for (std::size_t k = 0; k < m; ++k)
                    acc += s.u(i, k) * s.sigma[k] * s.v(j, k);
                CHECK(acc == doctest::Approx(mat(i, j)).epsilon(1e-10));
            }
        for (std::size_t k = 0; k + 1 < m; ++k) CHECK(s.sigma[k] >= s.sigma[k + 1]);
    }
}

TEST_CASE("numeric tolerances validate positivity") {
    NumericTolerances t;
    CHECK_NOTHROW(t.validate());
    t.delta = 0.0;
    CHECK_THROWS_AS(t.validate(), InvalidInputError);
}
