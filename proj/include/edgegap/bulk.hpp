#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "edgegap/potential.hpp"

namespace edgegap {

// Quasi-momentum in the Brillouin zone [-pi/L, pi/L]^2 of the L Z^2 lattice.
struct BlochWavevector {
    Eigen::Vector2d k;
    double L = 1.0;
};

struct SpectralGap {
    double a = 0.0;       // top of band n_below, max over k
    double b = 0.0;       // bottom of band n_below+1, min over k
    int n_below = 0;      // N(g): number of Bloch bands entirely below the gap
    double width() const { return b - a; }
    double mid() const { return 0.5 * (a + b); }
};

// Bloch bands eps_{n,k} on a uniform k-grid that includes both zone edges.
class BandStructure {
 public:
    BandStructure() = default;
    BandStructure(PeriodicPotential V, RationalAngle angle, int grid_size, int n_bands,
                  int cutoff);

    int grid_size() const { return grid_size_; }
    int n_bands() const { return n_bands_; }
    int cutoff() const { return cutoff_; }
    const RationalAngle& angle() const { return angle_; }
    const PeriodicPotential& potential() const { return potential_; }
    double L() const { return angle_.L(); }

    double k_at(int i) const;                           // i-th grid coordinate
    double energy(int i1, int i2, int band) const { return bands_(i1 * grid_size_ + i2, band); }
    Eigen::MatrixXd& raw_bands() { return bands_; }
    const Eigen::MatrixXd& raw_bands() const { return bands_; }

    // Band extrema over the zone: grid optimum, quadratic-fit vertex, then one
    // re-diagonalization at the fitted k (grid-only extrema bias gaps wide).
    double band_min(int band) const;
    double band_max(int band) const;
    // Same along a single k1 line at fixed k2 index (grid + fit only).
    double line_min(int band, int i2) const;
    double line_max(int band, int i2) const;

    double spectrum_min() const { return band_min(0); }

 private:
    double refined_extremum(int band, bool want_max) const;

    PeriodicPotential potential_;
    RationalAngle angle_;
    int grid_size_ = 0;
    int n_bands_ = 0;
    int cutoff_ = 0;
    Eigen::MatrixXd bands_;  // (grid_size^2) x n_bands, ascending per row

    struct ExtremaMemo {
        std::mutex mutex;
        std::map<int, double> vals;  // key: band*2 + want_max
    };
    std::shared_ptr<ExtremaMemo> memo_ = std::make_shared<ExtremaMemo>();
};

// Plane-wave Galerkin matrix of -Delta + V_theta on the cell [0,L]^2 at
// quasi-momentum k; basis exp(i (k + 2 pi G/L).x), |G|_inf <= cutoff.
// If the basis cannot represent some nonzero coefficient of the rotated
// potential, a warning is appended to *warning (not an error).
Eigen::MatrixXcd assemble_bulk_fiber(const PeriodicPotential& V, const RationalAngle& angle,
                                     const Eigen::Vector2d& k, int cutoff,
                                     std::string* warning = nullptr);

BandStructure compute_bands(const PeriodicPotential& V, const RationalAngle& angle,
                            int grid_size, int n_bands, int cutoff);

// Maximal open subintervals of `window` free of bands, each wider than
// gap_tolerance, with N(g) attached.
std::vector<SpectralGap> find_gaps(const BandStructure& bs, double window_lo, double window_hi,
                                   double gap_tolerance = 1e-3);

// N(E) for E in a gap (0 below the spectrum); throws "not_in_gap" otherwise.
int bands_below(const BandStructure& bs, double E);

}  // namespace edgegap
