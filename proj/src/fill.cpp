#include "edgegap/fill.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "edgegap/parallel.hpp"

namespace edgegap {

namespace {

double longest_free_subinterval(const SpectralGap& gap, std::vector<double> energies) {
    std::sort(energies.begin(), energies.end());
    double best = 0.0, prev = gap.a;
    for (double e : energies) {
        best = std::max(best, e - prev);
        prev = e;
    }
    best = std::max(best, gap.b - prev);
    return best;
}

}  // namespace

FillRecord fill_record_for_angle(const PeriodicPotential& V, const RationalAngle& angle,
                                 const SpectralGap& gap, int n_unrotated,
                                 const FillOptions& opts) {
    const double L = angle.L();
    FillRecord rec;
    rec.angle = angle;
    rec.L = L;

    FiberSpec probe;
    probe.potential = V;
    probe.angle = angle;
    probe.boundary = Boundary::Dirichlet;
    if (opts.h > 0.0) probe.h = opts.h;
    probe.apply_defaults();
    probe.validate();

    const BlockTridiag probe_mat = assemble_fiber(probe);
    if (probe_mat.nonzeros() > opts.nonzero_budget) {
        rec.truncated = true;
        return rec;
    }

    const double nu = V.lipschitz_nu();
    rec.lower_bound =
        (nu > 0.0) ? static_cast<int>(std::floor(gap.width() * L / nu)) * n_unrotated : 0;

    struct Cell {
        std::vector<double> energies;
        int count = 0;
    };
    const int nk = opts.k_samples, nt = opts.t_samples;
    std::vector<Cell> cells(nk * nt);
    const double kmax = std::numbers::pi / L;

    parallel_for(nk * nt, [&](int idx) {
        const int ik = idx / nt, it = idx % nt;
        FiberSpec sp = probe;
        sp.k = (nk == 1) ? 0.0 : -kmax + 2.0 * kmax * ik / (nk - 1);
        sp.t = (1.0 / L) * it / nt;  // [0, 1/L): the endpoint is isospectral to 0
        SolveOptions so;
        so.keep_vectors = false;
        so.gap = gap;
        so.n_max = opts.n_max_states;
        so.tolerance = opts.tolerance;
        const FiberSpectrum fs = solve_fiber(sp, gap.a, gap.b, so);
        Cell& c = cells[idx];
        c.energies = fs.in_gap_energies();
        c.count = static_cast<int>(c.energies.size());
    });

    for (int idx = 0; idx < nk * nt; ++idx) {
        const int ik = idx / nt, it = idx % nt;
        const double kv = (nk == 1) ? 0.0 : -kmax + 2.0 * kmax * ik / (nk - 1);
        const double tv = (1.0 / L) * it / nt;
        for (double e : cells[idx].energies) {
            rec.energies.push_back(e);
            rec.k_values.push_back(kv);
            rec.t_values.push_back(tv);
        }
        rec.eigenvalue_count = std::max(rec.eigenvalue_count, cells[idx].count);
    }
    rec.max_free_subinterval = longest_free_subinterval(gap, rec.energies);
    return rec;
}

FillReport approximant_sweep(const PeriodicPotential& V, const std::string& alpha,
                             int n_convergents, const SpectralGap& gap, int n_unrotated,
                             const FillOptions& opts) {
    const ConvergentSequence seq = continued_fraction_convergents(alpha, n_convergents);
    FillReport report;
    report.alpha = alpha;
    report.gap = gap;
    report.n_unrotated = n_unrotated;
    report.nu = V.lipschitz_nu();
    for (const auto& angle : seq.convergents) {
        FillRecord rec = fill_record_for_angle(V, angle, gap, n_unrotated, opts);
        if (rec.truncated) {
            report.note += "convergent (" + std::to_string(angle.p) + "," +
                           std::to_string(angle.q) +
                           ") exceeds the nonzero budget; sweep truncated. ";
            report.records.push_back(std::move(rec));
            break;
        }
        report.records.push_back(std::move(rec));
    }
    return report;
}

bool count_check(const FillRecord& record) {
    return record.eigenvalue_count >= record.lower_bound;
}

}  // namespace edgegap
