#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "edgegap/block_tridiag.hpp"

namespace edgegap {

struct LanczosOptions {
    int max_iterations = 350;       // Krylov dimension cap per pass
    int restarts = 2;               // deflated passes to pick up clustered copies
    double tolerance = 1e-10;       // residual tolerance on A-eigenvalues (absolute)
    unsigned seed = 12345;          // start-vector seed (results are deterministic)
    int n_max = 0;                  // 0 = unlimited
};

struct WindowEigen {
    std::vector<double> values;     // ascending, inside [lo, hi]
    Eigen::MatrixXcd vectors;       // column j belongs to values[j], unit norm
    bool count_verified = false;    // resolved states match the inertia census
    int expected_count = -1;        // exact census of the window (inertia)
    std::string diagnostic;         // set when the census could not be resolved
};

// All eigenpairs of A in the open window (lo, hi): the window census is
// fixed exactly by Sylvester inertia, then shift-invert Lanczos passes with
// full reorthogonalization, deflated restarts and a shift schedule run until
// every counted eigenvalue is resolved.
WindowEigen eigs_in_window(const BlockTridiag& A, double lo, double hi,
                           const LanczosOptions& opts = {});

// The m smallest eigenpairs, by shift-invert below the spectrum bottom.
// `floor_bound` must be a strict lower bound on the spectrum.
WindowEigen eigs_smallest(const BlockTridiag& A, int m, double floor_bound,
                          const LanczosOptions& opts = {});

}  // namespace edgegap
