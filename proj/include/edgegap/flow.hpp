#pragma once

#include <optional>
#include <string>
#include <vector>

#include "edgegap/fiber.hpp"

namespace edgegap {

struct TrackOptions {
    double overlap_threshold = 0.7;  // minimum accepted eigenvector overlap per step
    int initial_steps = 0;           // 0 = auto from the Lipschitz bound
    int max_grid = 4096;             // dt_min = T / max_grid
    double window_shrink = 0.10;     // tracked window = gap shrunk by this per side
    int n_max_states = 96;
    double tolerance = 1e-9;
};

struct BranchSample {
    double t = 0.0;
    double energy = 0.0;
    bool spurious = false;           // wall artifact at this sample
    double overlap = 1.0;            // matching overlap with the previous sample
};

struct Branch {
    int id = 0;
    std::vector<BranchSample> samples;
    bool entered_from_band = false;  // first seen near a window edge
    bool exited_to_band = false;     // last seen near a window edge
};

// Continuously tracked in-gap eigenvalue branches of a t-parametrized fiber
// family at fixed transverse k.
struct BranchFamily {
    std::vector<double> t_grid;      // accepted sample times, ascending
    std::vector<Branch> branches;
    SpectralGap gap;
    double k = 0.0;
    double window_lo = 0.0, window_hi = 0.0;
    double period = 0.0;
    double nu = 0.0;                 // Lipschitz constant of the potential
    double max_step_rate = 0.0;      // max |d lambda| / dt over accepted steps
    double max_step_move = 0.0;      // max |d lambda| over accepted steps
};

struct Crossing {
    double t = 0.0;
    int branch_id = 0;
    bool down = false;               // eigenvalue decreased through E
};

struct FlowResult {
    int flow = 0;                    // # down - # up
    double reference_energy = 0.0;
    std::vector<Crossing> crossings;
    double period = 0.0;
};

struct FlowVerification {
    RationalAngle angle;
    Boundary boundary = Boundary::Dislocated;
    double k = 0.0;
    double period = 0.0;
    int expected_flow = 0;
    int measured_flow = 0;
    bool pass = false;
    FlowResult detail;
    int branch_count = 0;
    int t_samples = 0;
};

// Sweeps t over [base.t, base.t + T], solving fibers on an adaptive grid and
// matching eigenpairs between adjacent t by maximal-overlap assignment.
// Steps whose worst matched overlap falls below the threshold are bisected
// down to dt_min; beyond that a "branch_ambiguity" error is raised.
BranchFamily track_branches(const FiberSpec& base, double T, const SpectralGap& gap,
                            const TrackOptions& opts = {});

// Net number of signed crossings of E by interpolated branch segments.
// E must sit farther than 2 max-step-moves from both gap edges.
FlowResult compute_flow(const BranchFamily& bf, double E);

// Theorem check: Dislocated over [0, L] must carry flow L^2 N(E); Dirichlet
// over [0, 1/L] must carry flow N(E). n_unrotated is N(E) of the potential
// seen as a Z^2-periodic operator.
FlowVerification verify_flow_theorem(const PeriodicPotential& V, const RationalAngle& angle,
                                     const SpectralGap& gap, double k, Boundary boundary,
                                     int n_unrotated, const TrackOptions& opts = {});

}  // namespace edgegap
