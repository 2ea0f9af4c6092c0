#include "edgegap/potential.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

namespace edgegap {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool lex_less(const Eigen::Vector2i& a, const Eigen::Vector2i& b) {
    return a[0] != b[0] ? a[0] < b[0] : a[1] < b[1];
}

void sort_and_merge(std::vector<FourierEntry>& cs) {
    std::sort(cs.begin(), cs.end(),
              [](const FourierEntry& a, const FourierEntry& b) { return lex_less(a.G, b.G); });
    std::vector<FourierEntry> out;
    for (const auto& e : cs) {
        if (!out.empty() && out.back().G == e.G)
            out.back().v += e.v;
        else
            out.push_back(e);
    }
    cs = std::move(out);
}

void check_hermitian(const std::vector<FourierEntry>& cs) {
    double scale = 0.0;
    for (const auto& e : cs) scale = std::max(scale, std::abs(e.v));
    if (scale == 0.0) return;
    for (const auto& e : cs) {
        Eigen::Vector2i mG = -e.G;
        auto it = std::find_if(cs.begin(), cs.end(),
                               [&](const FourierEntry& o) { return o.G == mG; });
        std::complex<double> partner = (it == cs.end()) ? 0.0 : it->v;
        if (std::abs(partner - std::conj(e.v)) > 1e-12 * scale)
            throw Error("non_hermitian_coeffs",
                        "Fourier coefficients violate vhat(-G) = conj(vhat(G)) at G = (" +
                            std::to_string(e.G[0]) + "," + std::to_string(e.G[1]) + ")",
                        "coeffs");
    }
}

// Dense unit-cell scan for sup|V| and sup|grad V|, done with separable phase
// tables so the cost is two small matrix products per field.
struct ScanResult {
    double sup = 0.0;
    double grad = 0.0;
};

ScanResult scan_unit_cell(const std::vector<FourierEntry>& cs, int n) {
    if (cs.empty()) return {};
    int gmax = 0;
    for (const auto& e : cs) gmax = std::max({gmax, std::abs(e.G[0]), std::abs(e.G[1])});
    const int m = 2 * gmax + 1;

    Eigen::MatrixXcd C0 = Eigen::MatrixXcd::Zero(m, m);
    Eigen::MatrixXcd C1 = C0, C2 = C0;  // coefficient, d/dx1, d/dx2
    for (const auto& e : cs) {
        const int i = e.G[0] + gmax, j = e.G[1] + gmax;
        C0(i, j) += e.v;
        C1(i, j) += std::complex<double>(0.0, kTwoPi * e.G[0]) * e.v;
        C2(i, j) += std::complex<double>(0.0, kTwoPi * e.G[1]) * e.v;
    }

    Eigen::MatrixXcd E(m, n);  // E(g, t) = exp(2 pi i (g-gmax) t/n)
    for (int g = 0; g < m; ++g)
        for (int t = 0; t < n; ++t) {
            const double phase = kTwoPi * (g - gmax) * (static_cast<double>(t) / n);
            E(g, t) = std::polar(1.0, phase);
        }

    const Eigen::MatrixXcd V = E.transpose() * (C0 * E);
    const Eigen::MatrixXcd D1 = E.transpose() * (C1 * E);
    const Eigen::MatrixXcd D2 = E.transpose() * (C2 * E);

    ScanResult r;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            r.sup = std::max(r.sup, std::abs(V(a, b).real()));
            r.grad = std::max(r.grad, std::hypot(D1(a, b).real(), D2(a, b).real()));
        }
    return r;
}

// Parses a nonnegative decimal string into num/den with den = 10^(#frac digits),
// reduced. 128-bit; throws on overflow or malformed input.
void parse_decimal(const std::string& s, __int128& num, __int128& den) {
    std::string t;
    for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c))) t += c;
    if (!t.empty() && t[0] == '+') t = t.substr(1);
    if (t.empty() || t[0] == '-') throw Error("bad_alpha", "alpha must be a positive decimal: " + s, "alpha");

    // Fraction form "a/b" is accepted too.
    if (auto slash = t.find('/'); slash != std::string::npos) {
        __int128 a = 0, b = 0, one = 1;
        parse_decimal(t.substr(0, slash), a, den);
        parse_decimal(t.substr(slash + 1), b, one);
        // a/den over b/one
        num = a * one;
        den = den * b;
        if (den <= 0) throw Error("bad_alpha", "alpha denominator must be positive: " + s, "alpha");
        return;
    }

    num = 0;
    den = 1;
    bool seen_dot = false, seen_digit = false;
    constexpr __int128 kMax = (((__int128)1) << 126);
    for (char c : t) {
        if (c == '.') {
            if (seen_dot) throw Error("bad_alpha", "malformed decimal: " + s, "alpha");
            seen_dot = true;
            continue;
        }
        if (!std::isdigit(static_cast<unsigned char>(c)))
            throw Error("bad_alpha", "malformed decimal: " + s, "alpha");
        seen_digit = true;
        if (num > kMax / 10 || (seen_dot && den > kMax / 10)) break;  // enough digits
        num = num * 10 + (c - '0');
        if (seen_dot) den *= 10;
    }
    if (!seen_digit) throw Error("bad_alpha", "malformed decimal: " + s, "alpha");
    // reduce by powers of 2 and 5 only (den is 10^k)
    while (den % 2 == 0 && num % 2 == 0) { den /= 2; num /= 2; }
    while (den % 5 == 0 && num % 5 == 0) { den /= 5; num /= 5; }
}

}  // namespace

PeriodicPotential::PeriodicPotential(std::vector<FourierEntry> coeffs, double sup_norm,
                                     double lipschitz_nu)
    : coeffs_(std::move(coeffs)), sup_norm_(sup_norm), lipschitz_nu_(lipschitz_nu) {
    sort_and_merge(coeffs_);
    check_hermitian(coeffs_);
}

double PeriodicPotential::value(const Eigen::Vector2d& x) const {
    std::complex<double> s = 0.0;
    for (const auto& e : coeffs_)
        s += e.v * std::polar(1.0, kTwoPi * (e.G[0] * x[0] + e.G[1] * x[1]));
    return s.real();
}

Eigen::Vector2d PeriodicPotential::gradient(const Eigen::Vector2d& x) const {
    std::complex<double> g1 = 0.0, g2 = 0.0;
    for (const auto& e : coeffs_) {
        const std::complex<double> ph =
            e.v * std::polar(1.0, kTwoPi * (e.G[0] * x[0] + e.G[1] * x[1]));
        g1 += std::complex<double>(0.0, kTwoPi * e.G[0]) * ph;
        g2 += std::complex<double>(0.0, kTwoPi * e.G[1]) * ph;
    }
    return {g1.real(), g2.real()};
}

int PeriodicPotential::max_frequency() const {
    int m = 0;
    for (const auto& e : coeffs_) m = std::max({m, std::abs(e.G[0]), std::abs(e.G[1])});
    return m;
}

RationalAngle::RationalAngle(int p_, int q_) : p(p_), q(q_) {
    if (p < 0 || q < 1) throw Error("bad_angle", "angle requires p >= 0, q >= 1", "angle");
    if (std::gcd(p, q) != 1) throw Error("bad_angle", "angle requires gcd(p,q) = 1", "angle");
}

double RationalAngle::L() const { return std::sqrt(static_cast<double>(L2())); }

Eigen::Matrix2d RationalAngle::rotation() const {
    const double l = L();
    Eigen::Matrix2d R;
    R << q / l, -p / l, p / l, q / l;
    return R;
}

Eigen::Matrix2d RationalAngle::rotation_inverse() const {
    const double l = L();
    Eigen::Matrix2d R;
    R << q / l, p / l, -p / l, q / l;
    return R;
}

PeriodicPotential make_potential(const PotentialSpec& spec) {
    if (spec.family == "zero") return PeriodicPotential({}, 0.0, 0.0);

    if (spec.family == "cosine2d") {
        const double v = spec.amplitude;
        std::vector<FourierEntry> cs = {
            {{1, 0}, v / 2}, {{-1, 0}, v / 2}, {{0, 1}, v / 2}, {{0, -1}, v / 2}};
        // V = v (cos 2pi x1 + cos 2pi x2): sup 2|v|, |grad| maxed on the diagonal.
        return PeriodicPotential(std::move(cs), 2.0 * std::abs(v),
                                 kTwoPi * std::abs(v) * std::numbers::sqrt2);
    }

    if (spec.family == "gaussian_bumps") {
        if (spec.width <= 0.0) throw Error("bad_potential", "gaussian width must be > 0", "width");
        const double d = spec.depth, w = spec.width;
        // Periodized gaussian centered at (1/2,1/2); Poisson summation gives
        // vhat_G = d 2 pi w^2 exp(-2 pi^2 w^2 |G|^2) (-1)^(G1+G2).
        const double pref = d * kTwoPi * w * w;
        const double decay = 2.0 * std::numbers::pi * std::numbers::pi * w * w;
        int gmax = 1;
        while (std::exp(-decay * gmax * gmax) > 1e-16 && gmax < 64) ++gmax;
        std::vector<FourierEntry> cs;
        for (int g1 = -gmax; g1 <= gmax; ++g1)
            for (int g2 = -gmax; g2 <= gmax; ++g2) {
                const double c = pref * std::exp(-decay * (g1 * g1 + g2 * g2)) *
                                 (((g1 + g2) % 2 == 0) ? 1.0 : -1.0);
                if (std::abs(c) > 1e-16 * std::abs(pref)) cs.push_back({{g1, g2}, c});
            }
        const ScanResult r = scan_unit_cell(cs, 512);
        return PeriodicPotential(std::move(cs), 1.05 * r.sup, 1.05 * r.grad);
    }

    if (spec.family == "fourier") {
        auto cs = spec.coeffs;
        sort_and_merge(cs);
        check_hermitian(cs);
        const ScanResult r = scan_unit_cell(cs, 512);
        return PeriodicPotential(std::move(cs), 1.05 * r.sup, 1.05 * r.grad);
    }

    throw Error("unknown_family", "unknown potential family: " + spec.family, "family");
}

double evaluate_rotated(const PeriodicPotential& V, const RationalAngle& angle,
                        const Eigen::Vector2d& x) {
    return V.value(angle.rotation_inverse() * x);
}

double evaluate_dislocated(const PeriodicPotential& V, const RationalAngle& angle, double t,
                           const Eigen::Vector2d& x) {
    if (x[0] <= 0.0) return evaluate_rotated(V, angle, x);
    return evaluate_rotated(V, angle, {x[0] - t, x[1]});
}

ConvergentSequence continued_fraction_convergents(const std::string& alpha, int count) {
    if (count < 1) throw Error("bad_count", "count must be >= 1", "count");
    __int128 num = 0, den = 1;
    parse_decimal(alpha, num, den);
    if (num <= 0) throw Error("bad_alpha", "alpha must be > 0", "alpha");

    ConvergentSequence seq;
    seq.target_slope = alpha;
    seq.target_approx = static_cast<double>(num) / static_cast<double>(den);

    // Euclidean continued fraction of num/den with convergent recurrence.
    __int128 a = num, b = den;
    // h_{-1} = 1, h_{-2} = 0 (numerators); k_{-1} = 0, k_{-2} = 1 (denominators)
    __int128 p_prev = 0, p_cur = 1, q_prev = 1, q_cur = 0;
    for (int n = 0; n < count && b != 0; ++n) {
        const __int128 term = a / b;
        const __int128 p_next = term * p_cur + p_prev;
        const __int128 q_next = term * q_cur + q_prev;
        p_prev = p_cur; p_cur = p_next;
        q_prev = q_cur; q_cur = q_next;
        const __int128 rem = a % b;
        a = b;
        b = rem;
        if (p_cur > (__int128)1e15 || q_cur > (__int128)1e15)
            throw Error("cf_overflow", "convergent exceeds integer range", "count");
        seq.convergents.emplace_back(static_cast<int>(p_cur), static_cast<int>(q_cur));
    }
    return seq;
}

bool convergent_is_best_approx(const std::string& alpha, const RationalAngle& c) {
    __int128 num = 0, den = 1;
    parse_decimal(alpha, num, den);
    // |alpha q - p| < 1/q  <=>  |num q - p den| q < den
    __int128 lhs = num * c.q - (__int128)c.p * den;
    if (lhs < 0) lhs = -lhs;
    return lhs * c.q < den;
}

std::vector<FourierEntry> read_fourier_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("io_error", "cannot open Fourier CSV: " + path, "coeffs_csv");
    std::vector<FourierEntry> cs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        // header line
        if (line.find("G1") != std::string::npos) continue;
        std::stringstream ss(line);
        std::string tok;
        double f[4] = {0, 0, 0, 0};
        int i = 0;
        while (std::getline(ss, tok, ',') && i < 4) f[i++] = std::stod(tok);
        if (i != 4) throw Error("bad_csv", "Fourier CSV rows need G1,G2,re,im: " + line, "coeffs_csv");
        cs.push_back({{static_cast<int>(std::lround(f[0])), static_cast<int>(std::lround(f[1]))},
                      {f[2], f[3]}});
    }
    return cs;
}

}  // namespace edgegap
