#pragma once

#include <string>
#include <vector>

#include "edgegap/fiber.hpp"

namespace edgegap {

struct FillRecord {
    RationalAngle angle;
    double L = 0.0;
    std::vector<double> energies;            // aggregated non-spurious in-gap set
    std::vector<double> t_values;            // per energy: the t it was found at
    std::vector<double> k_values;            // per energy: the k it was found at
    double max_free_subinterval = 0.0;       // longest spectrum-free piece of (a,b)
    int eigenvalue_count = 0;                // per-fiber in-gap count, max over (k,t)
    int lower_bound = 0;                     // floor((b-a) L / nu) N(E)
    bool truncated = false;                  // budget stopped this convergent
};

struct FillReport {
    std::string alpha;
    SpectralGap gap;
    int n_unrotated = 0;                     // N(E) on the Z^2 lattice
    double nu = 0.0;
    std::vector<FillRecord> records;
    std::string note;                        // truncation / diagnostics
};

struct FillOptions {
    int k_samples = 8;
    int t_samples = 16;
    long long nonzero_budget = 200000;       // per-matrix cap; sweep stops beyond it
    double h = 0.0;                          // 0 = per-convergent default L/(16 ceil L)
    double tolerance = 1e-9;
    int n_max_states = 512;
};

// Dirichlet fibers on a (k, t) grid with t in [0, 1/L) for each convergent of
// alpha; aggregates non-spurious in-gap eigenvalues and the filling metrics.
FillReport approximant_sweep(const PeriodicPotential& V, const std::string& alpha,
                             int n_convergents, const SpectralGap& gap, int n_unrotated,
                             const FillOptions& opts = {});

// Same machinery for one explicit angle (used by tests and the CLI).
FillRecord fill_record_for_angle(const PeriodicPotential& V, const RationalAngle& angle,
                                 const SpectralGap& gap, int n_unrotated,
                                 const FillOptions& opts = {});

// Counting-lemma check: measured in-gap count must reach floor((b-a)L/nu) N(E).
bool count_check(const FillRecord& record);

}  // namespace edgegap
