#include <algorithm>
#include <cmath>
#include <numbers>

#include <doctest.h>

#include "edgegap/bulk.hpp"
#include "oracle1d.hpp"

using namespace edgegap;

namespace {

PeriodicPotential cosine2d(double v) {
    PotentialSpec s;
    s.family = "cosine2d";
    s.amplitude = v;
    return make_potential(s);
}

constexpr double kDeepAmp = 10.0;  // separable deep-well: first 2D gap open, N = 1

}  // namespace

TEST_SUITE_BEGIN("bulk");

TEST_CASE("free fiber at cutoff 1 is the plane-wave diagonal") {
    const auto V = make_potential({.family = "zero"});
    const auto H = assemble_bulk_fiber(V, RationalAngle(0, 1), {0.0, 0.0}, 1);
    REQUIRE(H.rows() == 9);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
    const double w = 4.0 * std::numbers::pi * std::numbers::pi;  // (2 pi)^2
    std::vector<double> expected = {0, w, w, w, w, 2 * w, 2 * w, 2 * w, 2 * w};
    for (int i = 0; i < 9; ++i) CHECK(es.eigenvalues()[i] == doctest::Approx(expected[i]));
}

TEST_CASE("assembled fibers are exactly Hermitian") {
    const auto V = [&] {
        PotentialSpec s;
        s.family = "gaussian_bumps";
        s.depth = -6.0;
        s.width = 0.2;
        return make_potential(s);
    }();
    for (const auto& ang : {RationalAngle(0, 1), RationalAngle(1, 2)}) {
        const auto H = assemble_bulk_fiber(V, ang, {0.31, -0.77}, 5);
        CHECK((H - H.adjoint()).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("off-diagonal entries carry the potential coefficients") {
    const auto V = cosine2d(4.0);
    const int c = 3, m = 2 * c + 1;
    const auto H = assemble_bulk_fiber(V, RationalAngle(0, 1), {0.1, 0.2}, c);
    // basis index of G = (a1,a2) is (a1+c) m + (a2+c); coupling G -> G - e1 is vhat_{e1} = 2
    const int i = (1 + c) * m + (0 + c), j = (0 + c) * m + (0 + c);
    CHECK(H(i, j) == std::complex<double>(2.0, 0.0));
    CHECK(H(j, i) == std::complex<double>(2.0, 0.0));
}

TEST_CASE("free bands are |k|^2 with minimum 0 at k = 0") {
    const auto V = make_potential({.family = "zero"});
    const auto bs = compute_bands(V, RationalAngle(0, 1), 9, 3, 4);
    for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j) {
            const Eigen::Vector2d k(bs.k_at(i), bs.k_at(j));
            CHECK(bs.energy(i, j, 0) == doctest::Approx(k.squaredNorm()).epsilon(1e-12));
        }
    CHECK(bs.band_min(0) == doctest::Approx(0.0));
    SUBCASE("no gaps in the free spectrum") {
        const auto gaps = find_gaps(bs, -0.5, bs.band_max(1));
        CHECK(gaps.empty());
    }
}

TEST_CASE("cutoff self-convergence at 1e-8") {
    const auto V = cosine2d(4.0);
    const Eigen::Vector2d k(0.3, 0.7);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> e8(
        assemble_bulk_fiber(V, RationalAngle(0, 1), k, 8), Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> e12(
        assemble_bulk_fiber(V, RationalAngle(0, 1), k, 12), Eigen::EigenvaluesOnly);
    for (int n = 0; n < 5; ++n)
        CHECK(e8.eigenvalues()[n] == doctest::Approx(e12.eigenvalues()[n]).epsilon(1e-8));
}

TEST_CASE("variational monotonicity in the cutoff") {
    const auto V = cosine2d(kDeepAmp);
    const Eigen::Vector2d k(-0.4, 1.1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> e6(
        assemble_bulk_fiber(V, RationalAngle(0, 1), k, 6), Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> e8(
        assemble_bulk_fiber(V, RationalAngle(0, 1), k, 8), Eigen::EigenvaluesOnly);
    for (int n = 0; n < 20; ++n)
        CHECK(e8.eigenvalues()[n] <=
              e6.eigenvalues()[n] + 1e-11 * (1.0 + std::abs(e6.eigenvalues()[n])));
}

TEST_CASE("separable bands enumerate sums of 1D Hill eigenvalues") {
    const auto V = cosine2d(2.0);
    const auto bs = compute_bands(V, RationalAngle(0, 1), 5, 8, 10);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            const auto mu1 = oracle::hill_eigenvalues({{1, 2.0}}, bs.k_at(i), 6, 24);
            const auto mu2 = oracle::hill_eigenvalues({{1, 2.0}}, bs.k_at(j), 6, 24);
            std::vector<double> sums;
            for (double a : mu1)
                for (double b : mu2) sums.push_back(a + b);
            std::sort(sums.begin(), sums.end());
            for (int n = 0; n < 8; ++n)
                CHECK(bs.energy(i, j, n) == doctest::Approx(sums[n]).epsilon(1e-6));
        }
}

TEST_CASE("bands are symmetric under k -> -k for real potentials") {
    PotentialSpec s;
    s.family = "gaussian_bumps";
    s.depth = -6.0;
    s.width = 0.2;
    const auto V = make_potential(s);
    const auto bs = compute_bands(V, RationalAngle(1, 2), 7, 6, 5);
    const int g = bs.grid_size();
    for (int i = 0; i < g; ++i)
        for (int j = 0; j < g; ++j)
            for (int n = 0; n < bs.n_bands(); ++n)
                CHECK(bs.energy(i, j, n) ==
                      doctest::Approx(bs.energy(g - 1 - i, g - 1 - j, n)).epsilon(1e-9));
}

TEST_CASE("deep-well separable gap matches the 1D oracle") {
    const auto V = cosine2d(kDeepAmp);
    const auto bs = compute_bands(V, RationalAngle(0, 1), 17, 6, 8);
    const auto gaps = find_gaps(bs, bs.band_min(0) - 0.5, bs.band_max(4));
    REQUIRE(!gaps.empty());
    const auto bands1d = oracle::hill_bands({{1, kDeepAmp}}, 2, 28, 257);
    const double a_expect = 2.0 * bands1d[0].hi;
    const double b_expect = bands1d[0].lo + bands1d[1].lo;
    CHECK(gaps[0].a == doctest::Approx(a_expect).epsilon(1e-5));
    CHECK(gaps[0].b == doctest::Approx(b_expect).epsilon(1e-5));
    CHECK(gaps[0].n_below == 1);

    SUBCASE("grid refinement moves gap endpoints by less than 1e-4") {
        const auto bs2 = compute_bands(V, RationalAngle(0, 1), 16, 6, 8);
        const auto bs3 = compute_bands(V, RationalAngle(0, 1), 32, 6, 8);
        const auto g2 = find_gaps(bs2, bs2.band_min(0) - 0.5, bs2.band_max(4));
        const auto g3 = find_gaps(bs3, bs3.band_min(0) - 0.5, bs3.band_max(4));
        REQUIRE(!g2.empty());
        REQUIRE(!g3.empty());
        CHECK(std::abs(g2[0].a - g3[0].a) < 1e-4);
        CHECK(std::abs(g2[0].b - g3[0].b) < 1e-4);
    }
}

TEST_CASE("band continuity: no jumps beyond 5x the local median increment") {
    const auto V = cosine2d(kDeepAmp);
    const auto bs = compute_bands(V, RationalAngle(0, 1), 17, 4, 8);
    const int g = bs.grid_size();
    for (int n = 0; n < bs.n_bands(); ++n) {
        std::vector<double> incs;
        for (int i = 0; i + 1 < g; ++i)
            for (int j = 0; j < g; ++j)
                incs.push_back(std::abs(bs.energy(i + 1, j, n) - bs.energy(i, j, n)));
        std::vector<double> sorted = incs;
        std::sort(sorted.begin(), sorted.end());
        const double median = sorted[sorted.size() / 2];
        const double cap = 5.0 * std::max(median, 1e-6);
        for (double d : incs) CHECK(d <= cap);
    }
}

TEST_CASE("bands_below: gap count, below-spectrum zero, and rotated scaling") {
    const auto V = cosine2d(kDeepAmp);
    const auto bs = compute_bands(V, RationalAngle(0, 1), 17, 6, 8);
    const auto gaps = find_gaps(bs, bs.band_min(0) - 0.5, bs.band_max(4));
    REQUIRE(!gaps.empty());
    const double E = gaps[0].mid();
    CHECK(bands_below(bs, E) == 1);
    CHECK(bands_below(bs, -V.sup_norm() - 1.0) == 0);
    CHECK_THROWS_AS(bands_below(bs, gaps[0].a - 0.01), Error);  // inside band 1

    SUBCASE("same E on the (1,1) lattice counts L^2 N bands") {
        const auto bs2 = compute_bands(V, RationalAngle(1, 1), 5, 8, 10);
        CHECK(bands_below(bs2, E) == 2);
    }
}

TEST_CASE("rotation invariance of gap endpoints, N scaled by L^2") {
    const auto V = cosine2d(kDeepAmp);
    const auto bs0 = compute_bands(V, RationalAngle(0, 1), 5, 4, 7);
    const auto bs1 = compute_bands(V, RationalAngle(1, 1), 5, 7, 10);
    const auto g0 = find_gaps(bs0, bs0.band_min(0) - 0.5, bs0.band_max(2));
    const auto g1 = find_gaps(bs1, bs1.band_min(0) - 0.5, bs1.band_max(4));
    REQUIRE(!g0.empty());
    REQUIRE(!g1.empty());
    CHECK(std::abs(g0[0].a - g1[0].a) < 1e-4);
    CHECK(std::abs(g0[0].b - g1[0].b) < 1e-4);
    CHECK(g1[0].n_below == 2 * g0[0].n_below);
}

TEST_CASE("window and cutoff diagnostics") {
    const auto V = cosine2d(4.0);
    SUBCASE("insufficient bands for the window is an explicit error") {
        const auto bs = compute_bands(V, RationalAngle(0, 1), 5, 2, 6);
        CHECK_THROWS_AS(find_gaps(bs, 0.0, 1e4), Error);
    }
    SUBCASE("a cutoff too small to couple the potential warns") {
        std::string warning;
        PotentialSpec s;
        s.family = "fourier";
        s.coeffs = {{{3, 0}, 1.0}, {{-3, 0}, 1.0}};
        const auto W = make_potential(s);
        assemble_bulk_fiber(W, RationalAngle(0, 1), {0, 0}, 1, &warning);
        CHECK(!warning.empty());
    }
}

TEST_SUITE_END();
