#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rexp/dataset.hpp"
#include "rexp/linalg.hpp"
#include "rexp/rng.hpp"

namespace rexp {

enum class Family { mlp_tanh, mlp_relu, rbf, rff_linear };
enum class Scale { small, medium, large };

std::string_view to_string(Family f) noexcept;
std::string_view to_string(Scale s) noexcept;
Family parse_family(std::string_view name);
Scale parse_scale(std::string_view name);

// small -> 8, medium -> 32, large -> 128.
std::size_t scale_width(Scale s) noexcept;

struct ModelSpec {
    Family family = Family::mlp_tanh;
    Scale scale = Scale::medium;
    // When non-empty, replaces the single hidden layer implied by `scale`.
    // rbf and rff-linear use only the last entry (center / feature count).
    std::vector<std::size_t> hidden_layers;
    std::size_t input_dim = 1;
    std::size_t output_dim = 1;
    std::uint64_t init_seed = 0;
    // Multiplier on the initial weight scale; 0 yields an all-zero network.
    double init_scale = 1.0;

    std::vector<std::size_t> widths() const;
    // Width of the feature surface phi(x) returned by forward().
    std::size_t feature_dim() const;
    void validate() const;
};

// Axis-aligned box covering the training inputs; used to place rbf centers.
struct InputDomain {
    std::vector<double> lo;
    std::vector<double> hi;

    static InputDomain of(const Matrix& x);
};

/// Flat parameter list with a family-specific layout:
///   mlp-*:      W1, b1, ..., WL, bL, W_out, b_out
///   rbf:        centers (w x d_in), bandwidth (1x1, frozen), W_out, b_out
///   rff-linear: projection (d_in x w, frozen), phases (1 x w, frozen), W_out, b_out
/// Biases are 1 x width rows.
struct ModelParams {
    std::vector<Matrix> tensors;
    std::vector<bool> trainable;

    bool operator==(const ModelParams&) const = default;
};

enum class Optimizer { gd, adam };
std::string_view to_string(Optimizer o) noexcept;
Optimizer parse_optimizer(std::string_view name);

struct TrainConfig {
    std::size_t epochs = 500;
    double learning_rate = 0.1;
    Optimizer optimizer = Optimizer::gd;

    void validate() const;
};

inline constexpr double kDivergenceGuard = 1e12;

struct TrainedModel {
    ModelSpec spec;
    ModelParams params;
    std::vector<double> loss_curve;  // epochs + 1 entries, pre-training loss first
    double aulc = 0.0;
};

struct ForwardResult {
    Matrix predictions;  // n x output_dim
    Matrix features;     // n x feature_dim
};

ModelParams init_model(const ModelSpec& spec, SeededRng& rng,
                       const std::optional<InputDomain>& domain = std::nullopt);

ForwardResult forward(const ModelSpec& spec, const ModelParams& params, const Matrix& x);
Matrix predict(const ModelSpec& spec, const ModelParams& params, const Matrix& x);

/// Mean-squared-error loss (1/n) * sum ||yhat - y||^2.
double loss(const ModelSpec& spec, const ModelParams& params, const Matrix& x, const Matrix& y);

/// Exact gradients of loss() with respect to every tensor in params.
/// Frozen tensors receive zero gradients.
std::vector<Matrix> gradient(const ModelSpec& spec, const ModelParams& params, const Matrix& x,
                             const Matrix& y);

/// Full-batch training from a fresh initialization drawn from rng.
/// Throws TrainingDiverged when a recorded loss exceeds kDivergenceGuard or is NaN.
TrainedModel train(const ModelSpec& spec, const Matrix& x, const Matrix& y,
                   const TrainConfig& config, SeededRng& rng);
TrainedModel train(const ModelSpec& spec, const Dataset& data, const TrainConfig& config,
                   SeededRng& rng);

}  // namespace rexp
