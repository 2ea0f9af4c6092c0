#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "edgegap/block_tridiag.hpp"
#include "edgegap/bulk.hpp"
#include "edgegap/lanczos.hpp"
#include "edgegap/potential.hpp"

namespace edgegap {

enum class Boundary { Dislocated, Dirichlet, DomainWall };

std::string to_string(Boundary b);

// One truncated fiber problem: the tube [-X,X] x [0,L) (Dislocated,
// DomainWall) or the semi-tube [0,X] x [0,L) (Dirichlet), 5-point finite
// differences with spacing h, Bloch phase exp(ikL) across the transverse
// wrap, Dirichlet rows at the cut and the far walls.
struct FiberSpec {
    PeriodicPotential potential;
    RationalAngle angle;
    double t = 0.0;                  // dislocation parameter
    double k = 0.0;                  // transverse Bloch number in [-pi/L, pi/L]
    Boundary boundary = Boundary::Dislocated;
    double X = 0.0;                  // truncation half-length; 0 = default 5L
    double h = 0.0;                  // grid spacing; 0 = default L/(16 ceil(L))
    double wall_switch_width = 0.0;  // DomainWall ramp width; 0 = default L

    void apply_defaults();
    void validate() const;           // X >= 5L, h <= L/16, X/h and L/h integral

    int ny() const;                  // transverse nodes, = L/h
    int nx() const;                  // interior slices along x1
    double x1_of_slice(int i) const;
    double x1_min() const { return boundary == Boundary::Dirichlet ? 0.0 : -X; }
    double x1_max() const { return X; }

    // stable content hash of the discretized problem (for caching/diagnostics)
    std::string hash() const;
};

struct EigenState {
    double energy = 0.0;
    double weight_near_cut = 0.0;       // mass within |x1| <= 2L of the cut
    double weight_far_boundary = 0.0;   // mass in the outer 20% of the x1 range
    bool spurious = false;              // far-boundary weight > 0.5
    bool in_gap = false;                // non-spurious and inside the supplied gap
};

struct FiberSpectrum {
    FiberSpec spec;
    std::vector<EigenState> states;     // ascending energy
    Eigen::MatrixXcd vectors;           // column per state (empty if not kept)
    std::string diagnostic;

    std::vector<double> energies(bool non_spurious_only = false) const;
    std::vector<double> in_gap_energies() const;
};

struct SolveOptions {
    int n_max = 0;                      // cap on returned states (0 = all)
    bool keep_vectors = true;
    std::optional<SpectralGap> gap;     // for in_gap flags
    double tolerance = 1e-10;
};

BlockTridiag assemble_fiber(const FiberSpec& spec);

// All eigenpairs in the window with localization diagnostics.
FiberSpectrum solve_fiber(const FiberSpec& spec, double window_lo, double window_hi,
                          const SolveOptions& opts = {});

// Smallest eigenvalue of the fiber (Dirichlet lower-bound checks).
double fiber_ground_energy(const FiberSpec& spec);

// The t-independent essential bands of the fiber at transverse Bloch number
// k: the union over k1 of the bulk bands at (k1, k), as merged intervals.
// k is snapped to the nearest k-grid line of bs.
std::vector<std::pair<double, double>> essential_band_edges(const BandStructure& bs, double k);

// Essential band-edge estimate from one truncated fiber: collects the
// band-like cluster (non-spurious, not cut-localized) inside the window and
// extrapolates the box-quantization ladder E_m = B + s (c x^2 + d x^4),
// x = m/K + delta, to its edge B. `toward_gap_above` selects the lower edge
// of a band above the window start (s = +1) versus the upper edge of a band
// below (s = -1). K = 2 on the tube (left/right sub-ladders interleave),
// K = 1 on the semi-tube.
double extrapolate_band_edge(const FiberSpectrum& fs, bool toward_gap_above, int interleave);

// Localization weights of one grid vector (exposed for branch bookkeeping).
EigenState classify_state(const FiberSpec& spec, double energy, const Eigen::VectorXcd& psi,
                          const std::optional<SpectralGap>& gap);

}  // namespace edgegap
