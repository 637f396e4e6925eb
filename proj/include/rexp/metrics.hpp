#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "rexp/linalg.hpp"

namespace rexp {

/// Area under a loss curve L(0..T), normalized by T, integrated with unit-step
/// trapezoids. Requires at least two finite, non-negative points.
double aulc(std::span<const double> loss_curve);

/// (1/n) * sum (yhat - y)^2 over equal-shaped n x 1 matrices.
double mse(const Matrix& predictions, const Matrix& targets);

struct GlitchConfig {
    double factor = 2.0;
    std::size_t window = 3;

    void validate() const;
};

struct GlitchReport {
    bool flagged = false;
    std::optional<std::size_t> first_flag_index;
    std::vector<double> running_min;
    // flags[i]: every value in the window ending at i exceeds factor * running_min.
    std::vector<bool> flags;
};

/// Representation-glitch detector over a per-round error series. Index i is
/// flagged when series[j] > factor * min(series[0..j]) for all j in the window
/// of `window` indices ending at i.
GlitchReport detect_glitch(std::span<const double> series, const GlitchConfig& config);

}  // namespace rexp
