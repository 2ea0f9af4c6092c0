#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace edgegap {

// Hermitian block-tridiagonal matrix with identity off-diagonal coupling:
//   A = tridiag(-c I, B_i, -c I),  B_i Hermitian ny x ny, c > 0.
// This is the natural form of a 5-point Laplacian on a tensor grid sliced
// along x1, with Bloch wrap-around folded into the diagonal blocks.
struct BlockTridiag {
    int nx = 0;
    int ny = 0;
    double coupling = 0.0;                 // c
    std::vector<Eigen::MatrixXcd> diag;    // nx blocks, each ny x ny

    long long dim() const { return static_cast<long long>(nx) * ny; }
    long long nonzeros() const { return dim() * 5; }  // 5-point stencil estimate

    Eigen::VectorXcd apply(const Eigen::VectorXcd& v) const;
    Eigen::MatrixXcd to_dense() const;     // small problems / tests only
};

// LDL^H-style factorization of (A - sigma I) via the block Schur recursion
//   D_1 = B_1 - sigma, D_i = B_i - sigma - c^2 D_{i-1}^{-1}.
// Stores the explicit block inverses, which also drive the triangular solves.
class BlockFactor {
 public:
    BlockFactor(const BlockTridiag& A, double sigma);

    // x = (A - sigma)^{-1} r
    Eigen::VectorXcd solve(const Eigen::VectorXcd& r) const;

    double sigma() const { return sigma_; }
    // max over blocks of ||D_i^{-1}||_inf, a cheap conditioning indicator
    double inverse_norm() const { return inv_norm_; }

 private:
    int nx_, ny_;
    double coupling_, sigma_;
    double inv_norm_ = 0.0;
    std::vector<Eigen::MatrixXcd> inv_;    // D_i^{-1}
};

// Number of eigenvalues of A strictly below sigma (Haynsworth: the block
// pivots D_i carry the inertia). O(ny^2) memory, no factor storage.
int inertia_below(const BlockTridiag& A, double sigma);

// Exact count of eigenvalues in the open window via two inertia evaluations.
int count_in_window(const BlockTridiag& A, double lo, double hi);

}  // namespace edgegap
