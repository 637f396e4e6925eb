#include "rexp/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "rexp/error.hpp"

namespace rexp {

double aulc(std::span<const double> loss_curve) {
    if (loss_curve.size() < 2) {
        throw ContractError("aulc: loss curve needs at least 2 points, got " +
                            std::to_string(loss_curve.size()));
    }
    for (double v : loss_curve) {
        if (!std::isfinite(v) || v < 0.0) {
            throw ContractError("aulc: loss curve entries must be finite and >= 0");
        }
    }
    // Integrate deviations from the first point so a flat curve returns its value exactly.
    const std::size_t steps = loss_curve.size() - 1;
    const double base = loss_curve[0];
    double area = 0.0;
    for (std::size_t t = 0; t < steps; ++t)
        area += 0.5 * ((loss_curve[t] - base) + (loss_curve[t + 1] - base));
    return base + area / static_cast<double>(steps);
}

double mse(const Matrix& predictions, const Matrix& targets) {
    if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols()) {
        throw ShapeError("mse: predictions " + predictions.shape() + " vs targets " +
                         targets.shape());
    }
    if (predictions.rows() == 0) throw ShapeError("mse: empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions.data()[i] - targets.data()[i];
        s += d * d;
    }
    return s / static_cast<double>(predictions.rows());
}

void GlitchConfig::validate() const {
    if (!(factor > 1.0)) throw ContractError("glitch config: factor must be > 1");
    if (window < 1) throw ContractError("glitch config: window must be >= 1");
}

GlitchReport detect_glitch(std::span<const double> series, const GlitchConfig& config) {
    config.validate();
    if (series.empty()) throw ContractError("detect_glitch: empty series");
    GlitchReport report;
    report.running_min.resize(series.size());
    report.flags.assign(series.size(), false);

    std::size_t streak = 0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        report.running_min[i] = i == 0 ? series[0] : std::min(report.running_min[i - 1], series[i]);
        streak = series[i] > config.factor * report.running_min[i] ? streak + 1 : 0;
        if (streak >= config.window) {
            report.flags[i] = true;
            if (!report.flagged) {
                report.flagged = true;
                report.first_flag_index = i;
            }
        }
    }
    return report;
}

}  // namespace rexp
