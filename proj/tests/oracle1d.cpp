#include "oracle1d.hpp"

#include <cmath>
#include <numbers>

namespace oracle {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

std::vector<double> hill_eigenvalues(const std::vector<std::pair<int, double>>& cos_coeffs,
                                     double k, int n, int cutoff) {
    const int m = 2 * cutoff + 1;
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(m, m);
    for (int g = -cutoff; g <= cutoff; ++g) {
        const double kg = k + kTwoPi * g;
        H(g + cutoff, g + cutoff) = kg * kg;
    }
    for (const auto& [mode, c] : cos_coeffs) {
        for (int g = -cutoff; g <= cutoff; ++g) {
            if (g + mode >= -cutoff && g + mode <= cutoff)
                H(g + mode + cutoff, g + cutoff) += 0.5 * c;
            if (g - mode >= -cutoff && g - mode <= cutoff)
                H(g - mode + cutoff, g + cutoff) += 0.5 * c;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = es.eigenvalues()[i];
    return out;
}

std::vector<Band1D> hill_bands(const std::vector<std::pair<int, double>>& cos_coeffs, int n,
                               int cutoff, int k_grid) {
    std::vector<std::vector<double>> eps(k_grid);
    for (int i = 0; i < k_grid; ++i) {
        const double k = -std::numbers::pi + kTwoPi * i / (k_grid - 1);
        eps[i] = hill_eigenvalues(cos_coeffs, k, n, cutoff);
    }
    auto refine = [&](int band, bool want_max) {
        int bi = 0;
        for (int i = 0; i < k_grid; ++i)
            if (want_max ? eps[i][band] > eps[bi][band] : eps[i][band] < eps[bi][band]) bi = i;
        const int prev = bi > 0 ? bi - 1 : k_grid - 2;
        const int next = bi < k_grid - 1 ? bi + 1 : 1;
        const double vm = eps[prev][band], v0 = eps[bi][band], vp = eps[next][band];
        const double curv = vp - 2 * v0 + vm;
        if (std::abs(curv) < 1e-14 * (std::abs(v0) + 1)) return v0;
        const double corr = -(vp - vm) * (vp - vm) / (8 * curv);
        return v0 + corr;
    };
    std::vector<Band1D> bands(n);
    for (int b = 0; b < n; ++b) bands[b] = {refine(b, false), refine(b, true)};
    return bands;
}

std::vector<double> fd_bloch_eigenvalues(const Potential1D& v, double L, int ny, double k) {
    const double h = L / ny;
    const double c = 1.0 / (h * h);
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(ny, ny);
    const std::complex<double> wrap = std::polar(1.0, k * L);
    for (int j = 0; j < ny; ++j) {
        H(j, j) = 2.0 * c + v(j * h);
        const int jp = (j + 1) % ny, jm = (j - 1 + ny) % ny;
        H(j, jp) += -c * (j + 1 == ny ? wrap : 1.0);
        H(j, jm) += -c * (j == 0 ? std::conj(wrap) : 1.0);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
    return {es.eigenvalues().data(), es.eigenvalues().data() + ny};
}

namespace {

Eig1D fd_line(const Potential1D& w, double x0, double x1, double h) {
    const int n = static_cast<int>(std::round((x1 - x0) / h)) - 1;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
    const double c = 1.0 / (h * h);
    std::vector<double> xs(n);
    for (int i = 0; i < n; ++i) {
        xs[i] = x0 + (i + 1) * h;
        H(i, i) = 2.0 * c + w(xs[i]);
        if (i + 1 < n) H(i, i + 1) = H(i + 1, i) = -c;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    return {es.eigenvalues(), es.eigenvectors(), xs};
}

}  // namespace

Eig1D fd_dislocated_line(const Potential1D& v, double t, double X, double h) {
    auto w = [&v, t](double s) { return s <= 0.0 ? v(s) : v(s - t); };
    return fd_line(w, -X, X, h);
}

Eig1D fd_dirichlet_line(const Potential1D& v, double t, double X, double h) {
    auto w = [&v, t](double s) { return v(s - t); };
    return fd_line(w, 0.0, X, h);
}

double floquet_exponent(const Potential1D& v, double E, int rk_steps) {
    // monodromy of u'' = (v - E) u over one period, RK4
    auto deriv = [&](double s, const Eigen::Vector2d& y) {
        return Eigen::Vector2d(y[1], (v(s) - E) * y[0]);
    };
    Eigen::Matrix2d M;
    const double hstep = 1.0 / rk_steps;
    for (int col = 0; col < 2; ++col) {
        Eigen::Vector2d y = col == 0 ? Eigen::Vector2d(1, 0) : Eigen::Vector2d(0, 1);
        double s = 0.0;
        for (int i = 0; i < rk_steps; ++i) {
            const Eigen::Vector2d k1 = deriv(s, y);
            const Eigen::Vector2d k2 = deriv(s + 0.5 * hstep, y + 0.5 * hstep * k1);
            const Eigen::Vector2d k3 = deriv(s + 0.5 * hstep, y + 0.5 * hstep * k2);
            const Eigen::Vector2d k4 = deriv(s + hstep, y + hstep * k3);
            y += hstep / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
            s += hstep;
        }
        M.col(col) = y;
    }
    const double half_tr = 0.5 * M.trace();
    if (std::abs(half_tr) <= 1.0) return 0.0;
    const double rho = std::abs(half_tr) + std::sqrt(half_tr * half_tr - 1.0);
    return std::log(rho);
}

}  // namespace oracle
