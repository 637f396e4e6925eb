#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rexp/linalg.hpp"
#include "rexp/nn.hpp"

namespace rexp {

/// One model's behavioral trace over a dataset: feature surface, predictions,
/// and the AULC of the training run that produced it.
struct IMTBundle {
    std::string model_id;
    Matrix features;     // n x d
    Matrix predictions;  // n x 1
    double aulc = 0.0;
};

IMTBundle extract_imt(const TrainedModel& trained, const Matrix& x, std::string model_id);

struct PcaModel {
    std::vector<double> mean;              // length d
    Matrix components;                     // d x d, orthonormal columns, descending variance
    std::vector<double> explained_ratios;  // length d, descending
    std::size_t retained = 1;
    // Set when the fitted features had zero total variance.
    bool degenerate = false;
};

/// PCA on column-centered features via the sample covariance (divisor n-1).
/// `retained` is the smallest m whose cumulative explained ratio reaches
/// `threshold`, clamped to [1, min(d, cap)]. The largest-magnitude entry of
/// every component is positive.
PcaModel fit_pca(const Matrix& features, double threshold,
                 std::optional<std::size_t> cap = std::nullopt);

/// Scores on the first `pca.retained` components.
Matrix apply_pca(const PcaModel& pca, const Matrix& features);
/// Scores on the first `count` components.
Matrix project(const PcaModel& pca, const Matrix& features, std::size_t count);
/// Maps scores on the leading scores.cols() components back to feature space.
Matrix reconstruct(const PcaModel& pca, const Matrix& scores);

enum class Weighting { uniform, softmax_neg_aulc };
std::string_view to_string(Weighting w) noexcept;
Weighting parse_weighting(std::string_view name);

struct AggregatorConfig {
    double variance_threshold = 0.20;
    Weighting weighting = Weighting::uniform;
    double temperature = 1.0;
    bool include_predictions = true;
    std::optional<std::size_t> max_components;

    void validate() const;
};

/// Fitted aggregation transform: one PCA per source plus source weights.
struct RhoModel {
    std::vector<PcaModel> pcas;
    std::vector<double> weights;  // sums to 1
    std::vector<std::string> source_ids;
    bool include_predictions = true;

    std::vector<std::size_t> retained_dims() const;
    // Auxiliary columns produced by apply_rho (excluding the base inputs).
    std::size_t width() const;
};

/// Input of one expanded round: [x | aggregated traces] with its targets.
struct ExpandedDataset {
    Matrix x;
    Matrix y;
    std::size_t round = 0;
    std::vector<std::string> source_ids;
};

std::vector<double> aggregation_weights(std::span<const double> aulcs,
                                        const AggregatorConfig& config);

RhoModel build_rho(std::span<const IMTBundle> bundles, const AggregatorConfig& config);

/// [base_x | w_1*P_1 | w_1*yhat_1 | w_2*P_2 | ...] in source order. Throws
/// LineageError when the bundles are not the sources rho was fitted on.
Matrix apply_rho(const RhoModel& rho, std::span<const IMTBundle> bundles, const Matrix& base_x);

ExpandedDataset expand(const RhoModel& rho, std::span<const IMTBundle> bundles,
                       const Matrix& base_x, const Matrix& y, std::size_t round);

}  // namespace rexp
