#include "edgegap/decay.hpp"

#include <cmath>
#include <vector>

namespace edgegap {

DecayFit fit_decay_rate(const FiberSpec& spec, const Eigen::VectorXcd& psi,
                        double cut_position) {
    const int nx = spec.nx(), ny = spec.ny();
    const double L = spec.angle.L();
    const double lo = cut_position + 2.0 * L;
    const double hi = spec.x1_max() - 2.0 * L;

    std::vector<double> xs, logs;
    for (int i = 0; i < nx; ++i) {
        const double x1 = spec.x1_of_slice(i);
        if (x1 < lo || x1 > hi) continue;
        double m = 0.0;
        for (int j = 0; j < ny; ++j)
            m = std::max(m, std::abs(psi[static_cast<long long>(i) * ny + j]));
        if (m < 1e-14) continue;  // underflow: auto-shorten the range
        xs.push_back(x1);
        logs.push_back(std::log(m));
    }
    if (xs.size() < 4)
        throw Error("insufficient_range",
                    "fewer than 4 usable profile points in the decay fit window");

    const int n = static_cast<int>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (int i = 0; i < n; ++i) {
        sx += xs[i];
        sy += logs[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * logs[i];
        syy += logs[i] * logs[i];
    }
    const double denom = n * sxx - sx * sx;
    const double slope = (n * sxy - sx * sy) / denom;
    const double ss_tot = syy - sy * sy / n;
    double r2 = 1.0;
    if (ss_tot > 0) {
        const double intercept = (sy - slope * sx) / n;
        double ss_res = 0.0;
        for (int i = 0; i < n; ++i) {
            const double r = logs[i] - (slope * xs[i] + intercept);
            ss_res += r * r;
        }
        r2 = 1.0 - ss_res / ss_tot;
    }

    DecayFit fit;
    fit.alpha_fit = -slope;
    fit.r_squared = r2;
    fit.fit_lo = xs.front();
    fit.fit_hi = xs.back();
    fit.points = n;
    return fit;
}

}  // namespace edgegap
