#include "edgegap/lanczos.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "edgegap/potential.hpp"

namespace edgegap {

namespace {

Eigen::VectorXcd random_start(long long n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::VectorXcd v(n);
    for (long long i = 0; i < n; ++i) v[i] = std::complex<double>(u(rng), u(rng));
    v.normalize();
    return v;
}

// One shift-invert Lanczos pass with full reorthogonalization, deflated
// against previously accepted eigenvectors. Appends newly converged pairs
// with eigenvalues inside (lo, hi). Stops once `wanted` new in-window pairs
// have converged (or the Krylov space is exhausted).
void lanczos_pass(const BlockFactor& F, long long n, double lo, double hi, int wanted,
                  int maxit, double tol, unsigned seed,
                  const std::vector<Eigen::VectorXcd>& deflate, std::vector<double>& out_vals,
                  std::vector<Eigen::VectorXcd>& out_vecs) {
    const double sigma = F.sigma();
    std::vector<Eigen::VectorXcd> V;
    V.reserve(maxit + 1);
    std::vector<double> alpha, beta;

    auto orthogonalize = [&](Eigen::VectorXcd& w) {
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& v : V) w -= v.dot(w) * v;
            for (const auto& d : deflate) w -= d.dot(w) * d;
        }
    };

    {
        Eigen::VectorXcd v0 = random_start(n, seed);
        orthogonalize(v0);
        if (v0.norm() < 1e-8) return;  // nothing outside the deflation space
        V.push_back(v0.normalized());
    }

    for (int j = 0; j < maxit; ++j) {
        Eigen::VectorXcd w = F.solve(V.back());
        const double a = std::real(V.back().dot(w));
        alpha.push_back(a);
        orthogonalize(w);
        const double b = w.norm();
        const bool breakdown = b < 1e-12;
        if (!breakdown) {
            beta.push_back(b);
            V.push_back((w / b).eval());
        }

        const int m = static_cast<int>(alpha.size());
        const bool last = breakdown || j == maxit - 1;
        if (m >= 2 && (m % 10 == 0 || last)) {
            Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
            for (int i = 0; i < m; ++i) {
                T(i, i) = alpha[i];
                if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
            const double bm = breakdown ? 0.0 : beta.back();
            std::vector<int> ready;
            for (int i = 0; i < m; ++i) {
                const double theta = es.eigenvalues()[i];
                if (std::abs(theta) < 1e-14) continue;
                const double lambda = sigma + 1.0 / theta;
                if (lambda <= lo || lambda >= hi) continue;
                const double res = bm * std::abs(es.eigenvectors()(m - 1, i)) / (theta * theta);
                if (res <= std::max(tol, 1e-12 * std::abs(lambda)))
                    ready.push_back(i);
            }
            if (static_cast<int>(ready.size()) >= wanted || last) {
                for (int i : ready) {
                    const double theta = es.eigenvalues()[i];
                    Eigen::VectorXcd x = Eigen::VectorXcd::Zero(n);
                    for (int r = 0; r < m; ++r) x += es.eigenvectors()(r, i) * V[r];
                    const double nrm = x.norm();
                    if (nrm < 1e-8) continue;
                    out_vals.push_back(sigma + 1.0 / theta);
                    out_vecs.push_back(x / nrm);
                }
                return;
            }
        }
        if (breakdown) return;
    }
}

void sort_result(WindowEigen& r) {
    const int m = static_cast<int>(r.values.size());
    std::vector<int> idx(m);
    for (int i = 0; i < m; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return r.values[a] < r.values[b]; });
    std::vector<double> vals(m);
    Eigen::MatrixXcd vecs(r.vectors.rows(), m);
    for (int i = 0; i < m; ++i) {
        vals[i] = r.values[idx[i]];
        vecs.col(i) = r.vectors.col(idx[i]);
    }
    r.values = std::move(vals);
    r.vectors = std::move(vecs);
}

}  // namespace

WindowEigen eigs_in_window(const BlockTridiag& A, double lo, double hi,
                           const LanczosOptions& opts) {
    if (hi <= lo) throw Error("bad_window", "empty eigenvalue window", "window");
    const long long n = A.dim();
    WindowEigen result;

    // The window census is exact (Sylvester inertia); the iteration below runs
    // until every counted eigenvalue is resolved.
    const int expected = count_in_window(A, lo, hi);
    result.expected_count = expected;
    if (expected == 0) {
        result.count_verified = true;
        result.vectors.resize(n, 0);
        return result;
    }

    std::vector<double> vals;
    std::vector<Eigen::VectorXcd> vecs;

    const double w = hi - lo;
    const double shift_offsets[] = {0.5, 0.25, 0.75, 0.125, 0.875, 0.375, 0.625};
    const int maxit = std::clamp<long long>(8LL * expected + 100, 150, std::min<long long>(n, 600));

    int fruitless = 0;
    int pass_id = 0;
    for (const double off : shift_offsets) {
        if (static_cast<int>(vals.size()) >= expected) break;
        BlockFactor F(A, lo + off * w);
        const int restarts = std::max(1, opts.restarts);
        for (int r = 0; r < restarts + 1; ++r) {
            const int before = static_cast<int>(vals.size());
            std::vector<double> pv;
            std::vector<Eigen::VectorXcd> pw;
            lanczos_pass(F, n, lo, hi, expected - before, maxit, opts.tolerance,
                         opts.seed + 7919u * (++pass_id), vecs, pv, pw);
            for (size_t i = 0; i < pv.size(); ++i) {
                bool dup = false;
                for (size_t j = 0; j < vals.size() && !dup; ++j)
                    if (std::abs(pv[i] - vals[j]) < 1e-8 * (1.0 + std::abs(pv[i])) &&
                        std::abs(vecs[j].dot(pw[i])) > 0.9)
                        dup = true;
                if (!dup) {
                    vals.push_back(pv[i]);
                    vecs.push_back(std::move(pw[i]));
                }
            }
            if (static_cast<int>(vals.size()) >= expected) break;
            fruitless = (static_cast<int>(vals.size()) == before) ? fruitless + 1 : 0;
            if (fruitless >= 2) break;  // move to the next shift
        }
    }

    result.values = vals;
    result.vectors.resize(n, static_cast<int>(vecs.size()));
    for (size_t c = 0; c < vecs.size(); ++c) result.vectors.col(c) = vecs[c];
    result.count_verified = static_cast<int>(vals.size()) == expected;
    if (!result.count_verified)
        result.diagnostic = "window census mismatch: resolved " + std::to_string(vals.size()) +
                            " of " + std::to_string(expected);

    if (opts.n_max > 0 && static_cast<int>(result.values.size()) > opts.n_max) {
        const double mid = 0.5 * (lo + hi);
        std::vector<int> idx(result.values.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
        std::sort(idx.begin(), idx.end(), [&](int a, int b) {
            return std::abs(result.values[a] - mid) < std::abs(result.values[b] - mid);
        });
        idx.resize(opts.n_max);
        std::sort(idx.begin(), idx.end());
        WindowEigen trimmed;
        trimmed.expected_count = result.expected_count;
        trimmed.count_verified = result.count_verified;
        trimmed.diagnostic = result.diagnostic;
        trimmed.vectors.resize(n, opts.n_max);
        for (size_t i = 0; i < idx.size(); ++i) {
            trimmed.values.push_back(result.values[idx[i]]);
            trimmed.vectors.col(static_cast<int>(i)) = result.vectors.col(idx[i]);
        }
        result = std::move(trimmed);
    }
    sort_result(result);
    return result;
}

WindowEigen eigs_smallest(const BlockTridiag& A, int m, double floor_bound,
                          const LanczosOptions& opts) {
    const long long n = A.dim();
    BlockFactor F(A, floor_bound);
    // (A - floor)^{-1} is positive definite; its largest Ritz values are the
    // smallest eigenvalues of A and converge first.
    std::vector<Eigen::VectorXcd> V;
    std::vector<double> alpha, beta;
    V.push_back(random_start(n, opts.seed));
    const int maxit = std::min<long long>(opts.max_iterations, n);
    WindowEigen result;
    for (int j = 0; j < maxit; ++j) {
        Eigen::VectorXcd w = F.solve(V.back());
        const double a = std::real(V.back().dot(w));
        alpha.push_back(a);
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& u : V) w -= u.dot(w) * u;
        const double b = w.norm();
        const int mm = static_cast<int>(alpha.size());
        const bool last = b < 1e-12 || j == maxit - 1;
        if (mm >= m + 2 && (mm % 5 == 0 || last)) {
            Eigen::MatrixXd T = Eigen::MatrixXd::Zero(mm, mm);
            for (int i = 0; i < mm; ++i) {
                T(i, i) = alpha[i];
                if (i + 1 < mm) T(i, i + 1) = T(i + 1, i) = beta[i];
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
            bool ok = true;
            for (int i = mm - 1; i >= mm - m; --i) {
                const double theta = es.eigenvalues()[i];
                const double res = (last ? 0.0 : b) * std::abs(es.eigenvectors()(mm - 1, i)) /
                                   (theta * theta);
                if (res > opts.tolerance) ok = false;
            }
            if (ok || last) {
                result.vectors.resize(n, m);
                for (int i = 0; i < m; ++i) {
                    const int col = mm - 1 - i;
                    const double theta = es.eigenvalues()[col];
                    result.values.push_back(floor_bound + 1.0 / theta);
                    Eigen::VectorXcd x = Eigen::VectorXcd::Zero(n);
                    for (int r = 0; r < mm; ++r) x += es.eigenvectors()(r, col) * V[r];
                    result.vectors.col(i) = x.normalized();
                }
                sort_result(result);
                return result;
            }
        }
        if (b < 1e-12) break;
        beta.push_back(b);
        V.push_back((w / b).eval());
    }
    throw Error("eigs_no_convergence", "smallest-eigenvalue Lanczos did not converge");
}

}  // namespace edgegap
