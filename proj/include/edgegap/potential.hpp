#pragma once

#include <array>
#include <complex>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace edgegap {

// Error with a stable machine-readable code and optional offending field,
// surfaced as {code, message, field} JSON by the CLI.
class Error : public std::runtime_error {
 public:
    Error(std::string code, const std::string& message, std::string field = "")
        : std::runtime_error(message), code_(std::move(code)), field_(std::move(field)) {}
    const std::string& code() const { return code_; }
    const std::string& field() const { return field_; }

 private:
    std::string code_;
    std::string field_;
};

struct FourierEntry {
    Eigen::Vector2i G;
    std::complex<double> v;
};

// Z^2-periodic real potential stored spectrally:
//   V(x) = sum_G vhat_G exp(2 pi i G.x),  vhat_{-G} = conj(vhat_G).
// Evaluation is by direct trigonometric summation, so periodicity survives
// rotation by rational angles exactly (up to round-off).
class PeriodicPotential {
 public:
    PeriodicPotential() = default;
    PeriodicPotential(std::vector<FourierEntry> coeffs, double sup_norm, double lipschitz_nu);

    const std::vector<FourierEntry>& fourier_coeffs() const { return coeffs_; }
    double sup_norm() const { return sup_norm_; }
    double lipschitz_nu() const { return lipschitz_nu_; }

    // V at x, Z^2-periodic.
    double value(const Eigen::Vector2d& x) const;
    // grad V at x (used for scan-based Lipschitz bounds and diagnostics).
    Eigen::Vector2d gradient(const Eigen::Vector2d& x) const;

    // Largest |G|_inf among stored coefficients.
    int max_frequency() const;

    bool is_zero() const { return coeffs_.empty(); }

 private:
    std::vector<FourierEntry> coeffs_;   // sorted by (G1,G2), Hermitian-closed
    double sup_norm_ = 0.0;
    double lipschitz_nu_ = 0.0;
};

// Coprime pair (p,q) with tan(theta) = p/q; the rotated lattice has period
// L = sqrt(p^2+q^2) and rotation matrix (q/L, -p/L; p/L, q/L).
struct RationalAngle {
    int p = 0;
    int q = 1;

    RationalAngle() = default;
    RationalAngle(int p_, int q_);

    double L() const;
    Eigen::Matrix2d rotation() const;
    Eigen::Matrix2d rotation_inverse() const;
    long long L2() const { return static_cast<long long>(p) * p + static_cast<long long>(q) * q; }
};

struct ConvergentSequence {
    std::string target_slope;             // decimal string of alpha
    double target_approx = 0.0;           // double rendering, for reports
    std::vector<RationalAngle> convergents;
};

// Descriptor for the built-in potential families.
struct PotentialSpec {
    std::string family;                   // "zero" | "cosine2d" | "gaussian_bumps" | "fourier"
    double amplitude = 4.0;               // cosine2d: V = amplitude (cos 2pi x1 + cos 2pi x2)
    double depth = -10.0;                 // gaussian_bumps: bump amplitude (usually negative)
    double width = 0.15;                  // gaussian_bumps: gaussian sigma, in cell units
    std::vector<FourierEntry> coeffs;     // fourier: explicit coefficient list
};

PeriodicPotential make_potential(const PotentialSpec& spec);

// V_theta(x) = V(R_theta^{-1} x); L Z^2-periodic in x.
double evaluate_rotated(const PeriodicPotential& V, const RationalAngle& angle,
                        const Eigen::Vector2d& x);

// Dislocated potential W_t: V_theta left of the cut, its t-translate right of it.
// On the cut x1 = 0 the left value is used.
double evaluate_dislocated(const PeriodicPotential& V, const RationalAngle& angle, double t,
                           const Eigen::Vector2d& x);

// First `count` continued-fraction convergents p_n/q_n of alpha > 0, in lowest
// terms; terminates early when alpha is rational at the supplied precision.
// alpha is a decimal string (>= 30 significant digits recommended); all
// arithmetic is 128-bit exact.
ConvergentSequence continued_fraction_convergents(const std::string& alpha, int count);

// Exact best-approximation check |alpha q - p| < 1/q in integer arithmetic.
bool convergent_is_best_approx(const std::string& alpha, const RationalAngle& c);

// Fourier coefficient CSV (columns G1,G2,re,im), one entry per line.
std::vector<FourierEntry> read_fourier_csv(const std::string& path);

}  // namespace edgegap
