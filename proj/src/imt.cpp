#include "rexp/imt.hpp"

#include <algorithm>
#include <cmath>

#include "rexp/error.hpp"

namespace rexp {

IMTBundle extract_imt(const TrainedModel& trained, const Matrix& x, std::string model_id) {
    auto out = forward(trained.spec, trained.params, x);
    return {std::move(model_id), std::move(out.features), std::move(out.predictions),
            trained.aulc};
}

PcaModel fit_pca(const Matrix& features, double threshold, std::optional<std::size_t> cap) {
    if (features.rows() < 2) throw ContractError("fit_pca: need at least 2 rows");
    if (features.cols() < 1) throw ContractError("fit_pca: need at least 1 column");
    if (!(threshold > 0.0 && threshold <= 1.0)) {
        throw ContractError("fit_pca: variance threshold must lie in (0, 1]");
    }
    if (cap && *cap < 1) throw ContractError("fit_pca: component cap must be >= 1");
    require_finite(features, "fit_pca input");

    const std::size_t n = features.rows();
    const std::size_t d = features.cols();
    PcaModel pca;
    pca.mean.assign(d, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) pca.mean[c] += features(r, c);
    for (double& m : pca.mean) m /= static_cast<double>(n);

    Matrix centered = features;
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) centered(r, c) -= pca.mean[c];
    Matrix cov = matmul_tn(centered, centered);
    for (double& v : cov.data()) v /= static_cast<double>(n - 1);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j) cov(j, i) = cov(i, j);

    SymmetricEigen eig = eig_sym(cov);
    for (double& v : eig.values) v = std::max(v, 0.0);

    for (std::size_t k = 0; k < d; ++k) {
        std::size_t arg = 0;
        for (std::size_t r = 1; r < d; ++r)
            if (std::abs(eig.vectors(r, k)) > std::abs(eig.vectors(arg, k))) arg = r;
        if (eig.vectors(arg, k) < 0.0)
            for (std::size_t r = 0; r < d; ++r) eig.vectors(r, k) = -eig.vectors(r, k);
    }
    pca.components = std::move(eig.vectors);

    double total = 0.0;
    for (double v : eig.values) total += v;
    pca.explained_ratios.assign(d, 0.0);
    const std::size_t limit = std::min(d, cap.value_or(d));
    if (total <= 0.0) {
        pca.degenerate = true;
        pca.retained = 1;
        return pca;
    }
    for (std::size_t k = 0; k < d; ++k) pca.explained_ratios[k] = eig.values[k] / total;

    std::size_t m = d;
    double cumulative = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        cumulative += pca.explained_ratios[k];
        if (cumulative >= threshold) {
            m = k + 1;
            break;
        }
    }
    pca.retained = std::clamp<std::size_t>(m, 1, limit);
    return pca;
}

Matrix project(const PcaModel& pca, const Matrix& features, std::size_t count) {
    const std::size_t d = pca.mean.size();
    if (features.cols() != d) {
        throw ShapeError("apply_pca: features " + features.shape() + " do not have " +
                         std::to_string(d) + " columns");
    }
    if (count > pca.components.cols()) throw ShapeError("apply_pca: too many components");
    Matrix out(features.rows(), count);
    std::vector<double> centered(d);
    for (std::size_t r = 0; r < features.rows(); ++r) {
        for (std::size_t c = 0; c < d; ++c) centered[c] = features(r, c) - pca.mean[c];
        for (std::size_t k = 0; k < count; ++k) {
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) s += centered[c] * pca.components(c, k);
            out(r, k) = s;
        }
    }
    require_finite(out, "apply_pca");
    return out;
}

Matrix apply_pca(const PcaModel& pca, const Matrix& features) {
    return project(pca, features, pca.retained);
}

Matrix reconstruct(const PcaModel& pca, const Matrix& scores) {
    const std::size_t d = pca.mean.size();
    if (scores.cols() > pca.components.cols()) throw ShapeError("reconstruct: too many scores");
    Matrix out(scores.rows(), d);
    for (std::size_t r = 0; r < scores.rows(); ++r)
        for (std::size_t c = 0; c < d; ++c) {
            double s = pca.mean[c];
            for (std::size_t k = 0; k < scores.cols(); ++k) s += scores(r, k) * pca.components(c, k);
            out(r, c) = s;
        }
    return out;
}

std::string_view to_string(Weighting w) noexcept {
    return w == Weighting::uniform ? "uniform" : "softmax-neg-aulc";
}

Weighting parse_weighting(std::string_view name) {
    if (name == "uniform") return Weighting::uniform;
    if (name == "softmax-neg-aulc") return Weighting::softmax_neg_aulc;
    throw ContractError("unknown weighting '" + std::string(name) + "'");
}

void AggregatorConfig::validate() const {
    if (!(variance_threshold > 0.0 && variance_threshold <= 1.0)) {
        throw ContractError("aggregator: variance threshold must lie in (0, 1]");
    }
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw ContractError("aggregator: temperature must be > 0");
    }
    if (max_components && *max_components < 1) {
        throw ContractError("aggregator: max_components must be >= 1");
    }
}

std::vector<std::size_t> RhoModel::retained_dims() const {
    std::vector<std::size_t> out;
    out.reserve(pcas.size());
    for (const auto& p : pcas) out.push_back(p.retained);
    return out;
}

std::size_t RhoModel::width() const {
    std::size_t w = 0;
    for (const auto& p : pcas) w += p.retained + (include_predictions ? 1 : 0);
    return w;
}

std::vector<double> aggregation_weights(std::span<const double> aulcs,
                                        const AggregatorConfig& config) {
    const std::size_t k = aulcs.size();
    if (k == 0) throw ContractError("aggregation weights: no sources");
    if (config.weighting == Weighting::uniform) {
        return std::vector<double>(k, 1.0 / static_cast<double>(k));
    }
    // Shift by the minimum AULC so the largest exponent is exactly zero.
    const double lowest = *std::min_element(aulcs.begin(), aulcs.end());
    std::vector<double> w(k);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        w[j] = std::exp(-(aulcs[j] - lowest) / config.temperature);
        total += w[j];
    }
    for (double& v : w) v /= total;
    return w;
}

RhoModel build_rho(std::span<const IMTBundle> bundles, const AggregatorConfig& config) {
    config.validate();
    if (bundles.empty()) throw ContractError("build_rho: at least one IMT bundle is required");
    const std::size_t n = bundles.front().features.rows();
    RhoModel rho;
    rho.include_predictions = config.include_predictions;
    std::vector<double> aulcs;
    for (const auto& b : bundles) {
        if (b.features.rows() != n || b.predictions.rows() != n) {
            throw ShapeError("build_rho: bundle '" + b.model_id + "' does not have " +
                             std::to_string(n) + " rows");
        }
        rho.pcas.push_back(fit_pca(b.features, config.variance_threshold, config.max_components));
        rho.source_ids.push_back(b.model_id);
        aulcs.push_back(b.aulc);
    }
    rho.weights = aggregation_weights(aulcs, config);
    return rho;
}

Matrix apply_rho(const RhoModel& rho, std::span<const IMTBundle> bundles, const Matrix& base_x) {
    if (bundles.size() != rho.source_ids.size()) {
        throw LineageError("apply_rho: expected " + std::to_string(rho.source_ids.size()) +
                           " bundles, got " + std::to_string(bundles.size()));
    }
    std::vector<Matrix> blocks;
    blocks.push_back(base_x);
    for (std::size_t j = 0; j < bundles.size(); ++j) {
        if (bundles[j].model_id != rho.source_ids[j]) {
            throw LineageError("apply_rho: bundle " + std::to_string(j) + " is '" +
                               bundles[j].model_id + "', expected '" + rho.source_ids[j] + "'");
        }
        const double w = rho.weights[j];
        Matrix scores = apply_pca(rho.pcas[j], bundles[j].features);
        for (double& v : scores.data()) v *= w;
        blocks.push_back(std::move(scores));
        if (rho.include_predictions) {
            Matrix pred = bundles[j].predictions;
            for (double& v : pred.data()) v *= w;
            blocks.push_back(std::move(pred));
        }
    }
    return hconcat(blocks);
}

ExpandedDataset expand(const RhoModel& rho, std::span<const IMTBundle> bundles,
                       const Matrix& base_x, const Matrix& y, std::size_t round) {
    if (y.rows() != base_x.rows()) {
        throw ShapeError("expand: targets " + y.shape() + " vs inputs " + base_x.shape());
    }
    return {apply_rho(rho, bundles, base_x), y, round, rho.source_ids};
}

}  // namespace rexp
