#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "edgegap/fiber.hpp"
#include "oracle1d.hpp"

using namespace edgegap;

namespace {

constexpr double kDeepAmp = 10.0;
// first 2D gap of the deep-well separable potential (plane-wave values)
constexpr double kGapA = 9.1450, kGapB = 13.2997;

PeriodicPotential deep_well() {
    PotentialSpec s;
    s.family = "cosine2d";
    s.amplitude = kDeepAmp;
    return make_potential(s);
}

FiberSpec base_spec(Boundary b, double t = 0.0, double k = 0.0) {
    FiberSpec sp;
    sp.potential = deep_well();
    sp.angle = RationalAngle(0, 1);
    sp.t = t;
    sp.k = k;
    sp.boundary = b;
    sp.apply_defaults();
    return sp;
}

BlockTridiag random_hermitian_block_tridiag(int nx, int ny, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    BlockTridiag A;
    A.nx = nx;
    A.ny = ny;
    A.coupling = 1.7;
    for (int i = 0; i < nx; ++i) {
        Eigen::MatrixXcd B(ny, ny);
        for (int r = 0; r < ny; ++r)
            for (int c = 0; c < ny; ++c) B(r, c) = std::complex<double>(u(rng), u(rng));
        A.diag.push_back((B + B.adjoint()).eval());
    }
    return A;
}

}  // namespace

TEST_SUITE_BEGIN("fiber");

TEST_CASE("block solver agrees with dense eigendecomposition") {
    const auto A = random_hermitian_block_tridiag(12, 6, 42);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> dense(A.to_dense());
    const auto& ev = dense.eigenvalues();

    SUBCASE("inertia counts are exact") {
        for (double s : {-3.0, -1.0, 0.0, 0.7, 2.5}) {
            int expected = 0;
            for (int i = 0; i < ev.size(); ++i) expected += ev[i] < s ? 1 : 0;
            CHECK(inertia_below(A, s) == expected);
        }
    }
    SUBCASE("window eigensolve returns every eigenpair in the window") {
        const double lo = ev[20] - 1e-6, hi = ev[40] + 1e-6;
        const auto we = eigs_in_window(A, lo, hi, {});
        CHECK(we.count_verified);
        REQUIRE(static_cast<int>(we.values.size()) == 21);
        for (int i = 0; i < 21; ++i) {
            CHECK(we.values[i] == doctest::Approx(ev[20 + i]).epsilon(1e-9));
            // residual check against the operator itself
            const Eigen::VectorXcd r =
                A.apply(we.vectors.col(i)) - we.values[i] * we.vectors.col(i);
            CHECK(r.norm() < 1e-7);
        }
    }
    SUBCASE("factorized solves invert the shifted operator") {
        BlockFactor F(A, 0.321);
        Eigen::VectorXcd rhs = Eigen::VectorXcd::Random(A.dim());
        const Eigen::VectorXcd x = F.solve(rhs);
        const Eigen::VectorXcd back =
            A.apply(x) - 0.321 * x;
        CHECK((back - rhs).norm() < 1e-9 * rhs.norm());
    }
}

TEST_CASE("window solve resolves clustered and degenerate eigenvalues") {
    // two identical decoupled copies: every eigenvalue is doubly degenerate
    auto A = random_hermitian_block_tridiag(6, 4, 7);
    BlockTridiag B;
    B.nx = A.nx;
    B.ny = 2 * A.ny;
    B.coupling = A.coupling;
    for (int i = 0; i < A.nx; ++i) {
        Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(B.ny, B.ny);
        D.topLeftCorner(A.ny, A.ny) = A.diag[i];
        D.bottomRightCorner(A.ny, A.ny) = A.diag[i];
        B.diag.push_back(D);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> dense(B.to_dense());
    const auto& ev = dense.eigenvalues();
    const double lo = ev[10] - 1e-7, hi = ev[25] + 1e-7;
    const auto we = eigs_in_window(B, lo, hi, {});
    CHECK(we.count_verified);
    CHECK(static_cast<int>(we.values.size()) == 16);
}

TEST_CASE("fiber matrices are Hermitian and validated") {
    auto sp = base_spec(Boundary::Dislocated, 0.4, 1.1);
    const auto A = assemble_fiber(sp);
    const auto D = A.to_dense();
    CHECK((D - D.adjoint()).cwiseAbs().maxCoeff() == 0.0);

    SUBCASE("grid-divisibility violations are rejected") {
        sp.h = 0.0501;  // L/h not integral
        CHECK_THROWS_AS(assemble_fiber(sp), Error);
        sp.h = 0.0;
        sp.apply_defaults();
        sp.X = 3.0;  // X < 5L
        CHECK_THROWS_AS(assemble_fiber(sp), Error);
    }
}

TEST_CASE("free Dirichlet fiber: spectrum floor at the transverse mode") {
    FiberSpec sp;
    sp.potential = make_potential({.family = "zero"});
    sp.angle = RationalAngle(0, 1);
    sp.boundary = Boundary::Dirichlet;
    sp.apply_defaults();

    SUBCASE("k = 0: all eigenvalues >= 0, ground level vanishing with X") {
        const double e0 = fiber_ground_energy(sp);
        CHECK(e0 >= 0.0);
        CHECK(e0 < 0.40);  // box ground level (pi/X)^2 at X = 5
        sp.X = 10.0;
        const double e1 = fiber_ground_energy(sp);
        CHECK(e1 >= 0.0);
        CHECK(e1 < 0.5 * e0);
    }
    SUBCASE("k = pi/L: no eigenvalues below k^2") {
        sp.k = std::numbers::pi;
        const double k2 = sp.k * sp.k;
        const auto fs = solve_fiber(sp, -1.0, k2 - 0.01, {});
        CHECK(fs.states.empty());
    }
}

TEST_CASE("dislocated fiber at t = 0 carries the unbroken bulk samples") {
    auto sp = base_spec(Boundary::Dislocated, 0.0, 0.3);
    const auto A = assemble_fiber(sp);
    const double c = 1.0 / (sp.h * sp.h);
    for (int i = 0; i < sp.nx(); i += 7) {
        const double x1 = sp.x1_of_slice(i);
        for (int j = 0; j < sp.ny(); j += 3) {
            const double expected = evaluate_rotated(sp.potential, sp.angle, {x1, j * sp.h});
            CHECK(A.diag[i](j, j).real() - 4.0 * c == doctest::Approx(expected).epsilon(1e-12));
        }
    }
}

TEST_CASE("separable dislocated fiber equals 1D sums on the same grid") {
    const double t = 0.4, k = 0.6;
    auto sp = base_spec(Boundary::Dislocated, t, k);
    SolveOptions so;
    so.gap = SpectralGap{kGapA, kGapB, 1};
    const auto fs = solve_fiber(sp, kGapA, kGapB, so);

    auto v1 = [](double s) { return kDeepAmp * std::cos(2.0 * std::numbers::pi * s); };
    const auto line = oracle::fd_dislocated_line(v1, t, sp.X, sp.h);
    const auto mu = oracle::fd_bloch_eigenvalues(v1, 1.0, sp.ny(), k);
    std::vector<double> sums;
    for (int i = 0; i < line.values.size(); ++i)
        for (double m : mu) {
            const double e = line.values[i] + m;
            if (e > kGapA && e < kGapB) sums.push_back(e);
        }
    std::sort(sums.begin(), sums.end());

    const auto got = fs.energies();
    REQUIRE(got.size() == sums.size());
    for (size_t i = 0; i < got.size(); ++i)
        CHECK(got[i] == doctest::Approx(sums[i]).epsilon(1e-7));

    SUBCASE("in-gap states are cut-localized, wall states are flagged spurious") {
        bool found_gap_state = false;
        for (const auto& st : fs.states) {
            if (st.in_gap) {
                found_gap_state = true;
                CHECK(st.weight_near_cut > 0.5);
            }
        }
        CHECK(found_gap_state);
    }
}

TEST_CASE("doubling X leaves non-spurious in-gap eigenvalues unchanged to 1e-6") {
    auto sp = base_spec(Boundary::Dislocated, 0.4, 0.0);
    sp.X = 16.0;
    SolveOptions so;
    so.gap = SpectralGap{kGapA, kGapB, 1};
    const auto fs1 = solve_fiber(sp, kGapA + 0.3, kGapB - 0.3, so);
    sp.X = 32.0;
    const auto fs2 = solve_fiber(sp, kGapA + 0.3, kGapB - 0.3, so);
    const auto e1 = fs1.in_gap_energies();
    const auto e2 = fs2.in_gap_energies();
    REQUIRE(!e1.empty());
    REQUIRE(e1.size() == e2.size());
    for (size_t i = 0; i < e1.size(); ++i) CHECK(e1[i] == doctest::Approx(e2[i]).epsilon(1e-6));
}

TEST_CASE("essential band edges from bulk match the separable oracle") {
    const auto V = deep_well();
    const auto bs = compute_bands(V, RationalAngle(0, 1), 17, 6, 8);
    const double k = bs.k_at(11);  // on-grid transverse k
    const auto edges = essential_band_edges(bs, k);
    const auto mu = oracle::hill_eigenvalues({{1, kDeepAmp}}, k, 2, 28);
    const auto bands1d = oracle::hill_bands({{1, kDeepAmp}}, 2, 28, 257);
    // lowest essential interval: 1D band1 + mu_1(k)
    REQUIRE(!edges.empty());
    CHECK(edges[0].first == doctest::Approx(bands1d[0].lo + mu[0]).epsilon(1e-5));
    CHECK(edges[0].second == doctest::Approx(bands1d[0].hi + mu[0]).epsilon(1e-5));

    SUBCASE("every fixed-k essential gap contains the bulk gap") {
        for (size_t i = 0; i + 1 < edges.size(); ++i) {
            if (edges[i].second < kGapA && edges[i + 1].first > kGapB) {
                CHECK(edges[i].second <= kGapA + 1e-6);
                CHECK(edges[i + 1].first >= kGapB - 1e-6);
            }
        }
    }
}

TEST_CASE("essential spectrum is t-independent and boundary-independent") {
    // band-2 bottom at k = 0.6, estimated from truncated fibers via ladder
    // extrapolation; X large enough to resolve the box ladder
    const double k = 0.6;
    std::vector<double> edges;
    for (Boundary bnd : {Boundary::Dislocated, Boundary::Dirichlet}) {
        for (double t : {0.0, 1.0 / 3.0, 0.5}) {
            FiberSpec sp = base_spec(bnd, t, k);
            sp.X = 60.0;
            SolveOptions so;
            so.keep_vectors = true;
            const auto fs = solve_fiber(sp, 13.45, 14.1, so);
            edges.push_back(
                extrapolate_band_edge(fs, true, bnd == Boundary::Dislocated ? 2 : 1));
        }
    }
    const double ref = edges.front();
    for (double e : edges) CHECK(std::abs(e - ref) < 1e-3);
}

TEST_CASE("Dirichlet fiber dominates the dislocated tube variationally") {
    // the semi-tube matrix is a principal submatrix of the tube matrix
    auto spD = base_spec(Boundary::Dirichlet, 0.3, 0.4);
    auto spT = base_spec(Boundary::Dislocated, 0.3, 0.4);
    CHECK(fiber_ground_energy(spD) >= fiber_ground_energy(spT) - 1e-9);
}

TEST_CASE("domain wall: free side fills positive-energy bulk gaps") {
    auto sp = base_spec(Boundary::DomainWall, 0.0, 0.0);
    sp.X = 15.0;
    SolveOptions so;
    so.gap = SpectralGap{kGapA, kGapB, 1};
    so.keep_vectors = true;
    const auto fs = solve_fiber(sp, kGapA, kGapB, so);
    // the bulk gap sits above 0, so the free left half-space supplies
    // extended states throughout it
    int free_side_states = 0;
    for (const auto& st : fs.states)
        if (!st.spurious && st.weight_near_cut < 0.5) ++free_side_states;
    CHECK(free_side_states >= 3);

    SUBCASE("left-half mass dominates for those states") {
        const int nx = sp.nx(), ny = sp.ny();
        for (size_t s = 0; s < fs.states.size(); ++s) {
            if (fs.states[s].spurious || fs.states[s].weight_near_cut >= 0.5) continue;
            double left = 0.0, total = 0.0;
            for (int i = 0; i < nx; ++i) {
                const double m = fs.vectors.col(s).segment(i * ny, ny).squaredNorm();
                total += m;
                if (sp.x1_of_slice(i) < 0.0) left += m;
            }
            CHECK(left / total > 0.6);
        }
    }
}

TEST_SUITE_END();
