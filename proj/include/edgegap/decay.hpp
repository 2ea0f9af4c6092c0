#pragma once

#include <Eigen/Dense>

#include "edgegap/fiber.hpp"

namespace edgegap {

struct DecayFit {
    double alpha_fit = 0.0;   // decay rate (inverse length), > 0 for gap states
    double r_squared = 0.0;   // goodness of the log-linear fit
    double fit_lo = 0.0;      // x1 interval actually used
    double fit_hi = 0.0;
    int points = 0;
};

// Least-squares log-linear fit of the transverse-maximum profile
// m(x1) = max_{x2} |psi| on [cut + 2L, X - 2L]. Underflowing samples
// (m < 1e-14) shrink the range; fewer than 4 surviving points is an error.
DecayFit fit_decay_rate(const FiberSpec& spec, const Eigen::VectorXcd& psi,
                        double cut_position = 0.0);

}  // namespace edgegap
