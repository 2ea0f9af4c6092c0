#include "edgegap/fiber.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <sstream>

namespace edgegap {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// quintic smoothstep on [0,1]
double smoothstep5(double s) {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    return s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

uint64_t fnv64(const void* data, size_t len, uint64_t h = 1469598103934665603ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

uint64_t hash_double(double x, uint64_t h) { return fnv64(&x, sizeof x, h); }

}  // namespace

std::string to_string(Boundary b) {
    switch (b) {
        case Boundary::Dislocated: return "dislocated";
        case Boundary::Dirichlet: return "dirichlet";
        case Boundary::DomainWall: return "domain_wall";
    }
    return "?";
}

void FiberSpec::apply_defaults() {
    const double L = angle.L();
    if (h <= 0.0) h = L / (16.0 * std::ceil(L));
    if (X <= 0.0) X = 5.0 * L;
    if (boundary == Boundary::DomainWall && wall_switch_width <= 0.0) wall_switch_width = L;
}

void FiberSpec::validate() const {
    const double L = angle.L();
    const double eps = 1e-9 * L;
    if (X < 5.0 * L - eps) throw Error("bad_fiber", "truncation X must be >= 5 L", "X");
    if (h > L / 16.0 + eps) throw Error("bad_fiber", "grid spacing h must be <= L/16", "h");
    const double rx = X / h, ry = L / h;
    if (std::abs(rx - std::round(rx)) > 1e-6)
        throw Error("bad_fiber", "X/h must be an integer", "h");
    if (std::abs(ry - std::round(ry)) > 1e-6)
        throw Error("bad_fiber", "L/h must be an integer", "h");
    if (std::abs(k) > std::numbers::pi / L + 1e-12)
        throw Error("bad_fiber", "transverse k outside [-pi/L, pi/L]", "k");
}

int FiberSpec::ny() const { return static_cast<int>(std::round(angle.L() / h)); }

int FiberSpec::nx() const {
    const int xh = static_cast<int>(std::round(X / h));
    return boundary == Boundary::Dirichlet ? xh - 1 : 2 * xh - 1;
}

double FiberSpec::x1_of_slice(int i) const {
    return (boundary == Boundary::Dirichlet ? 0.0 : -X) + (i + 1) * h;
}

std::string FiberSpec::hash() const {
    uint64_t h64 = 1469598103934665603ull;
    for (const auto& e : potential.fourier_coeffs()) {
        h64 = fnv64(&e.G[0], sizeof(int), h64);
        h64 = fnv64(&e.G[1], sizeof(int), h64);
        h64 = hash_double(e.v.real(), h64);
        h64 = hash_double(e.v.imag(), h64);
    }
    h64 = fnv64(&angle.p, sizeof angle.p, h64);
    h64 = fnv64(&angle.q, sizeof angle.q, h64);
    h64 = hash_double(t, h64);
    h64 = hash_double(k, h64);
    const int b = static_cast<int>(boundary);
    h64 = fnv64(&b, sizeof b, h64);
    h64 = hash_double(X, h64);
    h64 = hash_double(h, h64);
    h64 = hash_double(wall_switch_width, h64);
    std::ostringstream os;
    os << std::hex << h64;
    return os.str();
}

namespace {

// Potential samples on the fiber grid, by separable phase tables:
//   V_theta(x - s(i) e1) = Re sum_g vhat_g e^{2 pi i f_g . x} e^{-2 pi i f1 s(i)},
// where f_g = R_theta g are the rotated frequencies.
Eigen::MatrixXd potential_grid(const FiberSpec& spec) {
    const int nx = spec.nx(), ny = spec.ny();
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(nx, ny);
    const auto& cs = spec.potential.fourier_coeffs();
    if (cs.empty() && spec.boundary != Boundary::DomainWall) return W;

    const double L = spec.angle.L();
    const int ng = static_cast<int>(cs.size());
    Eigen::VectorXd f1(ng), f2(ng);
    Eigen::VectorXcd amp(ng);
    for (int g = 0; g < ng; ++g) {
        f1[g] = (spec.angle.q * cs[g].G[0] - spec.angle.p * cs[g].G[1]) / L;
        f2[g] = (spec.angle.p * cs[g].G[0] + spec.angle.q * cs[g].G[1]) / L;
        amp[g] = cs[g].v;
    }

    Eigen::MatrixXcd E2(ng, ny);
    for (int g = 0; g < ng; ++g)
        for (int j = 0; j < ny; ++j) E2(g, j) = std::polar(1.0, kTwoPi * f2[g] * (j * spec.h));

    Eigen::MatrixXcd E1(nx, ng);
    for (int i = 0; i < nx; ++i) {
        const double x1 = spec.x1_of_slice(i);
        // left of the cut the potential is untranslated; right of it (and on
        // the whole Dirichlet semi-tube) it is shifted by t
        const double s = (spec.boundary != Boundary::Dirichlet && x1 <= 0.0) ? 0.0 : spec.t;
        for (int g = 0; g < ng; ++g) E1(i, g) = std::polar(1.0, kTwoPi * f1[g] * (x1 - s));
    }

    if (ng > 0) W = (E1 * amp.asDiagonal() * E2).real();

    if (spec.boundary == Boundary::DomainWall) {
        const double wsw = spec.wall_switch_width;
        for (int i = 0; i < nx; ++i) {
            const double chi = smoothstep5(spec.x1_of_slice(i) / wsw);
            W.row(i) *= chi;
        }
    }
    return W;
}

}  // namespace

BlockTridiag assemble_fiber(const FiberSpec& spec) {
    spec.validate();
    const int nx = spec.nx(), ny = spec.ny();
    const double h2 = spec.h * spec.h;
    const double c = 1.0 / h2;
    const Eigen::MatrixXd W = potential_grid(spec);
    const std::complex<double> wrap_up = std::polar(1.0, spec.k * spec.angle.L());

    BlockTridiag A;
    A.nx = nx;
    A.ny = ny;
    A.coupling = c;
    A.diag.reserve(nx);
    for (int i = 0; i < nx; ++i) {
        Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(ny, ny);
        for (int j = 0; j < ny; ++j) {
            B(j, j) = 4.0 * c + W(i, j);
            const int jp = (j + 1) % ny, jm = (j - 1 + ny) % ny;
            B(j, jp) += -c * (j + 1 == ny ? wrap_up : 1.0);
            B(j, jm) += -c * (j == 0 ? std::conj(wrap_up) : 1.0);
        }
        A.diag.push_back(std::move(B));
    }
    return A;
}

EigenState classify_state(const FiberSpec& spec, double energy, const Eigen::VectorXcd& psi,
                          const std::optional<SpectralGap>& gap) {
    const int nx = spec.nx(), ny = spec.ny();
    const double L = spec.angle.L();
    const double lo = spec.x1_min(), hi = spec.x1_max();
    const double far_frac = 0.10;  // 10% at each artificial end = outer 20% of the range
    double near = 0.0, far = 0.0, total = 0.0;
    for (int i = 0; i < nx; ++i) {
        const double m = psi.segment(static_cast<long long>(i) * ny, ny).squaredNorm();
        const double x1 = spec.x1_of_slice(i);
        total += m;
        if (std::abs(x1) <= 2.0 * L) near += m;
        const double range = hi - lo;
        const bool in_far = (spec.boundary == Boundary::Dirichlet)
                                ? (x1 >= hi - 0.2 * range)
                                : (x1 >= hi - far_frac * range || x1 <= lo + far_frac * range);
        if (in_far) far += m;
    }
    EigenState s;
    s.energy = energy;
    s.weight_near_cut = near / total;
    s.weight_far_boundary = far / total;
    s.spurious = s.weight_far_boundary > 0.5;
    s.in_gap = gap && !s.spurious && energy > gap->a && energy < gap->b;
    return s;
}

FiberSpectrum solve_fiber(const FiberSpec& spec, double window_lo, double window_hi,
                          const SolveOptions& opts) {
    FiberSpec sp = spec;
    sp.apply_defaults();
    const BlockTridiag A = assemble_fiber(sp);

    LanczosOptions lopts;
    lopts.tolerance = opts.tolerance;
    lopts.n_max = opts.n_max;
    lopts.seed = static_cast<unsigned>(std::stoull(sp.hash().substr(0, 8), nullptr, 16));

    WindowEigen we;
    try {
        we = eigs_in_window(A, window_lo, window_hi, lopts);
    } catch (const Error& e) {
        throw Error(e.code(), std::string(e.what()) + " [fiber " + sp.hash() + "]", e.field());
    }

    FiberSpectrum fs;
    fs.spec = sp;
    fs.diagnostic = we.diagnostic;
    if (!we.diagnostic.empty()) fs.diagnostic += " [fiber " + sp.hash() + "]";
    const double floor_bound = -sp.potential.sup_norm() - 1e-8;
    for (size_t i = 0; i < we.values.size(); ++i) {
        if (we.values[i] < floor_bound)
            throw Error("spectrum_floor_violation",
                        "eigenvalue below -||V||_inf in fiber " + sp.hash());
        fs.states.push_back(classify_state(sp, we.values[i], we.vectors.col(i), opts.gap));
    }
    if (opts.keep_vectors) fs.vectors = std::move(we.vectors);
    return fs;
}

double fiber_ground_energy(const FiberSpec& spec) {
    FiberSpec sp = spec;
    sp.apply_defaults();
    const BlockTridiag A = assemble_fiber(sp);
    LanczosOptions lopts;
    lopts.seed = static_cast<unsigned>(std::stoull(sp.hash().substr(0, 8), nullptr, 16));
    const auto r = eigs_smallest(A, 1, -sp.potential.sup_norm() - 1.0, lopts);
    return r.values.at(0);
}

std::vector<double> FiberSpectrum::energies(bool non_spurious_only) const {
    std::vector<double> out;
    for (const auto& s : states)
        if (!non_spurious_only || !s.spurious) out.push_back(s.energy);
    return out;
}

std::vector<double> FiberSpectrum::in_gap_energies() const {
    std::vector<double> out;
    for (const auto& s : states)
        if (s.in_gap) out.push_back(s.energy);
    return out;
}

double extrapolate_band_edge(const FiberSpectrum& fs, bool toward_gap_above, int interleave) {
    std::vector<double> cluster;
    for (const auto& st : fs.states)
        if (!st.spurious && st.weight_near_cut < 0.4) cluster.push_back(st.energy);
    std::sort(cluster.begin(), cluster.end());
    if (!toward_gap_above) std::reverse(cluster.begin(), cluster.end());
    if (cluster.empty())
        throw Error("no_band_states", "no band-like states in the window for edge extrapolation");
    const int M = static_cast<int>(cluster.size());
    if (M < 4) return cluster[0];

    const double sgn = toward_gap_above ? 1.0 : -1.0;
    double bestB = cluster[0], bestres = std::numeric_limits<double>::infinity();
    auto try_fit = [&](const std::vector<double>& xs) {
        Eigen::MatrixXd A(M, 3);
        Eigen::VectorXd y(M);
        for (int m = 0; m < M; ++m) {
            const double x2 = xs[m] * xs[m];
            A(m, 0) = 1;
            A(m, 1) = sgn * x2;
            A(m, 2) = sgn * x2 * x2;
            y[m] = cluster[m];
        }
        const Eigen::Vector3d p = (A.transpose() * A).ldlt().solve(A.transpose() * y);
        if (p[1] <= 0) return;  // ladder must walk away from the edge
        const double res = (A * p - y).squaredNorm();
        if (res < bestres) {
            bestres = res;
            bestB = p[0];
        }
    };
    std::vector<double> xs(M);
    for (double d1 = 0.0; d1 <= 1.401; d1 += 0.02) {
        if (interleave <= 1) {
            for (int m = 0; m < M; ++m) xs[m] = m + d1;
            try_fit(xs);
        } else {
            for (double d2 = d1; d2 <= d1 + 1.001; d2 += 0.02) {
                for (int m = 0; m < M; ++m) xs[m] = m / 2 + (m % 2 == 0 ? d1 : d2);
                try_fit(xs);
            }
        }
    }
    return bestB;
}

std::vector<std::pair<double, double>> essential_band_edges(const BandStructure& bs, double k) {
    // snap to the nearest transverse grid line
    int best = 0;
    double bestd = std::numeric_limits<double>::infinity();
    for (int i = 0; i < bs.grid_size(); ++i) {
        const double d = std::abs(bs.k_at(i) - k);
        if (d < bestd) { bestd = d; best = i; }
    }
    std::vector<std::pair<double, double>> bands;
    for (int n = 0; n < bs.n_bands(); ++n)
        bands.emplace_back(bs.line_min(n, best), bs.line_max(n, best));
    std::sort(bands.begin(), bands.end());
    std::vector<std::pair<double, double>> merged;
    for (const auto& b : bands) {
        if (!merged.empty() && b.first <= merged.back().second)
            merged.back().second = std::max(merged.back().second, b.second);
        else
            merged.push_back(b);
    }
    return merged;
}

}  // namespace edgegap
