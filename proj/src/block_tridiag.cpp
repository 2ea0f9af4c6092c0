#include "edgegap/block_tridiag.hpp"

#include "edgegap/potential.hpp"

namespace edgegap {

Eigen::VectorXcd BlockTridiag::apply(const Eigen::VectorXcd& v) const {
    Eigen::VectorXcd out(dim());
    const double c = coupling;
    for (int i = 0; i < nx; ++i) {
        auto seg = v.segment(static_cast<long long>(i) * ny, ny);
        Eigen::VectorXcd r = diag[i] * seg;
        if (i > 0) r -= c * v.segment(static_cast<long long>(i - 1) * ny, ny);
        if (i + 1 < nx) r -= c * v.segment(static_cast<long long>(i + 1) * ny, ny);
        out.segment(static_cast<long long>(i) * ny, ny) = r;
    }
    return out;
}

Eigen::MatrixXcd BlockTridiag::to_dense() const {
    const long long n = dim();
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(n, n);
    for (int i = 0; i < nx; ++i) {
        A.block(i * ny, i * ny, ny, ny) = diag[i];
        if (i + 1 < nx) {
            A.block((i + 1) * ny, i * ny, ny, ny) = -coupling * Eigen::MatrixXcd::Identity(ny, ny);
            A.block(i * ny, (i + 1) * ny, ny, ny) = -coupling * Eigen::MatrixXcd::Identity(ny, ny);
        }
    }
    return A;
}

BlockFactor::BlockFactor(const BlockTridiag& A, double sigma)
    : nx_(A.nx), ny_(A.ny), coupling_(A.coupling), sigma_(sigma) {
    inv_.reserve(nx_);
    const double c2 = coupling_ * coupling_;
    const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(ny_, ny_);
    Eigen::MatrixXcd D;
    for (int i = 0; i < nx_; ++i) {
        D = A.diag[i] - sigma * I;
        if (i > 0) D -= c2 * inv_.back();
        Eigen::PartialPivLU<Eigen::MatrixXcd> lu(D);
        Eigen::MatrixXcd Dinv = lu.solve(I);
        const double nrm = Dinv.cwiseAbs().rowwise().sum().maxCoeff();
        inv_norm_ = std::max(inv_norm_, nrm);
        if (!std::isfinite(nrm) || nrm > 1e16)
            throw Error("factorization_breakdown",
                        "near-singular pivot block in block LDL at slice " + std::to_string(i) +
                            "; shift sigma = " + std::to_string(sigma));
        inv_.push_back(std::move(Dinv));
    }
}

Eigen::VectorXcd BlockFactor::solve(const Eigen::VectorXcd& r) const {
    const double c = coupling_;
    // forward: L z = r with L_{i,i-1} = -c D_{i-1}^{-1}
    Eigen::VectorXcd z = r;
    for (int i = 1; i < nx_; ++i)
        z.segment(static_cast<long long>(i) * ny_, ny_) +=
            c * (inv_[i - 1] * z.segment(static_cast<long long>(i - 1) * ny_, ny_));
    // diagonal + backward: L^H x = D^{-1} z with L^H_{i,i+1} = -c D_i^{-1}
    Eigen::VectorXcd x(z.size());
    x.segment(static_cast<long long>(nx_ - 1) * ny_, ny_) =
        inv_[nx_ - 1] * z.segment(static_cast<long long>(nx_ - 1) * ny_, ny_);
    for (int i = nx_ - 2; i >= 0; --i)
        x.segment(static_cast<long long>(i) * ny_, ny_) =
            inv_[i] * z.segment(static_cast<long long>(i) * ny_, ny_) +
            c * (inv_[i] * x.segment(static_cast<long long>(i + 1) * ny_, ny_));
    return x;
}

namespace {

// Negative-eigenvalue count of a Hermitian block: Householder tridiagonalization
// followed by the Sturm (LDL) sign chain. Throws when a pivot sits on zero, so
// the caller can nudge the shift.
int negatives_of_block(const Eigen::MatrixXcd& D, double scale) {
    Eigen::Tridiagonalization<Eigen::MatrixXcd> tri(D);
    const Eigen::VectorXd a = tri.diagonal();
    const Eigen::VectorXd b = tri.subDiagonal();
    const int n = static_cast<int>(a.size());
    int count = 0;
    double d = a[0];
    for (int i = 0;; ++i) {
        if (std::abs(d) < 1e-13 * scale)
            throw Error("inertia_singular", "zero pivot in the Sturm chain");
        if (d < 0) ++count;
        if (i + 1 >= n) break;
        d = a[i + 1] - b[i] * b[i] / d;
    }
    return count;
}

}  // namespace

int inertia_below(const BlockTridiag& A, double sigma) {
    const double c2 = A.coupling * A.coupling;
    const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(A.ny, A.ny);
    const double scale = 4.0 * A.coupling + std::abs(sigma) + 1.0;
    Eigen::MatrixXcd D, prev_inv;
    int count = 0;
    for (int i = 0; i < A.nx; ++i) {
        D = A.diag[i] - sigma * I;
        if (i > 0) D -= c2 * prev_inv;
        count += negatives_of_block(D, scale);
        if (i + 1 < A.nx) {
            Eigen::PartialPivLU<Eigen::MatrixXcd> lu(D);
            prev_inv = lu.solve(I);
        }
    }
    return count;
}

int count_in_window(const BlockTridiag& A, double lo, double hi) {
    auto robust_inertia = [&](double s) {
        const double scale = 1.0 + std::abs(s);
        for (int attempt = 0; attempt < 4; ++attempt) {
            try {
                return inertia_below(A, s + attempt * 3e-9 * scale);
            } catch (const Error& e) {
                if (std::string(e.code()) != "inertia_singular" || attempt == 3) throw;
            }
        }
        return 0;  // unreachable
    };
    return robust_inertia(hi) - robust_inertia(lo);
}

}  // namespace edgegap
