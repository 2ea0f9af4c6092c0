#include "edgegap/bulk.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "edgegap/parallel.hpp"

namespace edgegap {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Quadratic refinement of a sampled extremum: parabola through (v-,v0,v+)
// evaluated at its own vertex. Applies to maxima and minima alike.
double parabola_correction(double vm, double v0, double vp) {
    const double curv = vp - 2.0 * v0 + vm;
    if (std::abs(curv) < 1e-14 * (std::abs(v0) + 1.0)) return 0.0;
    const double num = vp - vm;
    const double corr = -num * num / (8.0 * curv);
    // A sane correction never exceeds the neighbor spread.
    const double spread = std::max(std::abs(vp - v0), std::abs(vm - v0));
    return std::clamp(corr, -spread, spread);
}

}  // namespace

BandStructure::BandStructure(PeriodicPotential V, RationalAngle angle, int grid_size,
                             int n_bands, int cutoff)
    : potential_(std::move(V)), angle_(angle), grid_size_(grid_size), n_bands_(n_bands),
      cutoff_(cutoff) {
    bands_.resize(grid_size * grid_size, n_bands);
}

double BandStructure::k_at(int i) const {
    const double kmax = std::numbers::pi / L();
    return -kmax + 2.0 * kmax * i / (grid_size_ - 1);
}

namespace {

// Periodic neighbor on a grid that includes both zone edges (0 and g-1 are
// the same physical point).
inline int wrap_prev(int i, int g) { return i > 0 ? i - 1 : g - 2; }
inline int wrap_next(int i, int g) { return i < g - 1 ? i + 1 : 1; }

}  // namespace

namespace {

// vertex offset of the parabola through (-d,vm),(0,v0),(d,vp), clamped to one cell
double parabola_offset(double vm, double v0, double vp, double d) {
    const double curv = vp - 2.0 * v0 + vm;
    if (std::abs(curv) < 1e-14 * (std::abs(v0) + 1.0)) return 0.0;
    return std::clamp(0.5 * d * (vm - vp) / curv, -d, d);
}

}  // namespace

double BandStructure::refined_extremum(int band, bool want_max) const {
    const int key = band * 2 + (want_max ? 1 : 0);
    {
        std::lock_guard<std::mutex> lock(memo_->mutex);
        if (auto it = memo_->vals.find(key); it != memo_->vals.end()) return it->second;
    }
    const int g = grid_size_;
    const double sgn = want_max ? 1.0 : -1.0;
    int bi = 0, bj = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < g; ++i)
        for (int j = 0; j < g; ++j)
            if (sgn * energy(i, j, band) > best) { best = sgn * energy(i, j, band); bi = i; bj = j; }
    best *= sgn;

    const double dk = 2.0 * std::numbers::pi / (angle_.L() * (g - 1));
    const double o1 = parabola_offset(energy(wrap_prev(bi, g), bj, band), best,
                                      energy(wrap_next(bi, g), bj, band), dk);
    const double o2 = parabola_offset(energy(bi, wrap_prev(bj, g), band), best,
                                      energy(bi, wrap_next(bj, g), band), dk);
    double value = best;
    if (o1 != 0.0 || o2 != 0.0) {
        // one re-diagonalization at the fitted vertex; any sampled value is a
        // valid one-sided bound for the extremum
        const Eigen::Vector2d kstar(k_at(bi) + o1, k_at(bj) + o2);
        const Eigen::MatrixXcd H = assemble_bulk_fiber(potential_, angle_, kstar, cutoff_);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
        if (es.info() == Eigen::Success) {
            const double v = es.eigenvalues()[band];
            value = want_max ? std::max(value, v) : std::min(value, v);
        }
    }
    std::lock_guard<std::mutex> lock(memo_->mutex);
    memo_->vals[key] = value;
    return value;
}

double BandStructure::band_max(int band) const { return refined_extremum(band, true); }

double BandStructure::band_min(int band) const { return refined_extremum(band, false); }

double BandStructure::line_max(int band, int i2) const {
    const int g = grid_size_;
    int bi = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < g; ++i)
        if (energy(i, i2, band) > best) { best = energy(i, i2, band); bi = i; }
    return best + parabola_correction(energy(wrap_prev(bi, g), i2, band), best,
                                      energy(wrap_next(bi, g), i2, band));
}

double BandStructure::line_min(int band, int i2) const {
    const int g = grid_size_;
    int bi = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < g; ++i)
        if (energy(i, i2, band) < best) { best = energy(i, i2, band); bi = i; }
    return best + parabola_correction(energy(wrap_prev(bi, g), i2, band), best,
                                      energy(wrap_next(bi, g), i2, band));
}

Eigen::MatrixXcd assemble_bulk_fiber(const PeriodicPotential& V, const RationalAngle& angle,
                                     const Eigen::Vector2d& k, int cutoff, std::string* warning) {
    if (cutoff < 1) throw Error("bad_cutoff", "cutoff must be >= 1", "cutoff");
    const int m = 2 * cutoff + 1;
    const int dim = m * m;
    const double L = angle.L();

    // Rotated potential on the L-lattice: frequency of vhat_g sits at
    // G' = (q g1 - p g2, p g1 + q g2), an exact integer remap.
    std::map<std::pair<int, int>, std::complex<double>> vrot;
    bool missing = false;
    for (const auto& e : V.fourier_coeffs()) {
        const int G1 = angle.q * e.G[0] - angle.p * e.G[1];
        const int G2 = angle.p * e.G[0] + angle.q * e.G[1];
        vrot[{G1, G2}] += e.v;
        if (std::max(std::abs(G1), std::abs(G2)) > 2 * cutoff && std::abs(e.v) > 0.0)
            missing = true;
    }
    if (missing && warning)
        *warning += "cutoff " + std::to_string(cutoff) +
                    " cannot couple some nonzero potential coefficients; ";

    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(dim, dim);
    for (int a1 = -cutoff; a1 <= cutoff; ++a1)
        for (int a2 = -cutoff; a2 <= cutoff; ++a2) {
            const int i = (a1 + cutoff) * m + (a2 + cutoff);
            const double kx = k[0] + kTwoPi * a1 / L;
            const double ky = k[1] + kTwoPi * a2 / L;
            H(i, i) = kx * kx + ky * ky;
        }
    for (const auto& [Gp, v] : vrot) {
        const auto [d1, d2] = Gp;
        for (int a1 = -cutoff; a1 <= cutoff; ++a1) {
            const int b1 = a1 - d1;
            if (b1 < -cutoff || b1 > cutoff) continue;
            for (int a2 = -cutoff; a2 <= cutoff; ++a2) {
                const int b2 = a2 - d2;
                if (b2 < -cutoff || b2 > cutoff) continue;
                const int i = (a1 + cutoff) * m + (a2 + cutoff);
                const int j = (b1 + cutoff) * m + (b2 + cutoff);
                H(i, j) += v;  // <G_a|V|G_b> = vrot_{G_a - G_b}
            }
        }
    }
    return H;
}

BandStructure compute_bands(const PeriodicPotential& V, const RationalAngle& angle, int grid_size,
                            int n_bands, int cutoff) {
    if (grid_size < 2) throw Error("bad_grid", "grid_size must be >= 2", "grid_size");
    if (n_bands < 1) throw Error("bad_bands", "n_bands must be >= 1", "n_bands");
    const int dim = (2 * cutoff + 1) * (2 * cutoff + 1);
    if (n_bands > dim)
        throw Error("bad_bands", "n_bands exceeds basis size (2 cutoff+1)^2", "n_bands");

    BandStructure bs(V, angle, grid_size, n_bands, cutoff);
    std::vector<std::string> errors(grid_size * grid_size);
    parallel_for(grid_size * grid_size, [&](int idx) {
        const int i1 = idx / grid_size, i2 = idx % grid_size;
        const Eigen::Vector2d k(bs.k_at(i1), bs.k_at(i2));
        const Eigen::MatrixXcd H = assemble_bulk_fiber(V, angle, k, cutoff);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) {
            std::ostringstream os;
            os << "eigensolver failed at k = (" << k[0] << ", " << k[1] << ")";
            errors[idx] = os.str();
            return;
        }
        bs.raw_bands().row(idx) = es.eigenvalues().head(bs.n_bands()).transpose();
    });
    for (const auto& e : errors)
        if (!e.empty()) throw Error("eigensolver_failure", e);
    return bs;
}

std::vector<SpectralGap> find_gaps(const BandStructure& bs, double window_lo, double window_hi,
                                   double gap_tolerance) {
    if (window_hi <= window_lo) throw Error("bad_window", "empty energy window", "window");
    const int nb = bs.n_bands();
    if (bs.band_max(nb - 1) < window_hi)
        throw Error("insufficient_n_bands",
                    "computed bands do not cover the search window; raise n_bands");

    std::vector<SpectralGap> gaps;
    for (int n = 0; n + 1 < nb; ++n) {
        const double a = bs.band_max(n);
        const double b = bs.band_min(n + 1);
        if (b - a <= gap_tolerance) continue;
        const double lo = std::max(a, window_lo), hi = std::min(b, window_hi);
        if (hi - lo <= gap_tolerance) continue;
        gaps.push_back({a, b, n + 1});
    }
    return gaps;
}

int bands_below(const BandStructure& bs, double E) {
    if (E < bs.band_min(0)) return 0;  // resolvent set below the spectrum
    const int nb = bs.n_bands();
    for (int n = 0; n + 1 < nb; ++n) {
        const double a = bs.band_max(n);
        const double b = bs.band_min(n + 1);
        if (E > a && E < b) return n + 1;
    }
    throw Error("not_in_gap", "E is not inside a detected spectral gap");
}

}  // namespace edgegap
