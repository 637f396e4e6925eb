#include "rexp/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rexp/error.hpp"
#include "rexp/metrics.hpp"

namespace rexp {

std::string_view to_string(Family f) noexcept {
    switch (f) {
        case Family::mlp_tanh: return "mlp-tanh";
        case Family::mlp_relu: return "mlp-relu";
        case Family::rbf: return "rbf";
        case Family::rff_linear: return "rff-linear";
    }
    return "?";
}

std::string_view to_string(Scale s) noexcept {
    switch (s) {
        case Scale::small: return "small";
        case Scale::medium: return "medium";
        case Scale::large: return "large";
    }
    return "?";
}

std::string_view to_string(Optimizer o) noexcept {
    return o == Optimizer::gd ? "gd" : "adam";
}

Family parse_family(std::string_view name) {
    for (Family f : {Family::mlp_tanh, Family::mlp_relu, Family::rbf, Family::rff_linear})
        if (to_string(f) == name) return f;
    throw ContractError("unknown model family '" + std::string(name) + "'");
}

Scale parse_scale(std::string_view name) {
    for (Scale s : {Scale::small, Scale::medium, Scale::large})
        if (to_string(s) == name) return s;
    throw ContractError("unknown model scale '" + std::string(name) + "'");
}

Optimizer parse_optimizer(std::string_view name) {
    if (name == "gd") return Optimizer::gd;
    if (name == "adam") return Optimizer::adam;
    throw ContractError("unknown optimizer '" + std::string(name) + "'");
}

std::size_t scale_width(Scale s) noexcept {
    switch (s) {
        case Scale::small: return 8;
        case Scale::medium: return 32;
        case Scale::large: return 128;
    }
    return 0;
}

std::vector<std::size_t> ModelSpec::widths() const {
    if (!hidden_layers.empty()) return hidden_layers;
    return {scale_width(scale)};
}

std::size_t ModelSpec::feature_dim() const {
    return widths().back();
}

void ModelSpec::validate() const {
    if (input_dim < 1) throw ContractError("model spec: input_dim must be >= 1");
    if (output_dim < 1) throw ContractError("model spec: output_dim must be >= 1");
    const auto w = widths();
    if (std::any_of(w.begin(), w.end(), [](std::size_t v) { return v < 1; })) {
        throw ContractError("model spec: hidden widths must be >= 1");
    }
    if (!(init_scale >= 0.0) || !std::isfinite(init_scale)) {
        throw ContractError("model spec: init_scale must be finite and >= 0");
    }
}

InputDomain InputDomain::of(const Matrix& x) {
    InputDomain d{std::vector<double>(x.cols(), 0.0), std::vector<double>(x.cols(), 1.0)};
    if (x.rows() == 0) return d;
    for (std::size_t c = 0; c < x.cols(); ++c) {
        d.lo[c] = d.hi[c] = x(0, c);
        for (std::size_t r = 1; r < x.rows(); ++r) {
            d.lo[c] = std::min(d.lo[c], x(r, c));
            d.hi[c] = std::max(d.hi[c], x(r, c));
        }
    }
    return d;
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ContractError("train config: epochs must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw ContractError("train config: learning_rate must be > 0");
    }
}

namespace {

bool is_mlp(Family f) noexcept {
    return f == Family::mlp_tanh || f == Family::mlp_relu;
}

Matrix normal_matrix(SeededRng& rng, std::size_t rows, std::size_t cols, double std) {
    Matrix m(rows, cols);
    if (std == 0.0) return m;
    for (double& v : m.data()) v = std * rng.normal();
    return m;
}

void check_input(const ModelSpec& spec, const Matrix& x) {
    if (x.cols() != spec.input_dim) {
        throw ShapeError("model expects " + std::to_string(spec.input_dim) +
                         " input columns, got " + x.shape());
    }
}

void check_params(const ModelSpec& spec, const ModelParams& params) {
    const std::size_t expected =
        is_mlp(spec.family) ? 2 * spec.widths().size() + 2 : std::size_t{4};
    if (params.tensors.size() != expected || params.trainable.size() != expected) {
        throw ShapeError("parameter list does not match a " + std::string(to_string(spec.family)) +
                         " model");
    }
}

void add_row_bias(Matrix& z, const Matrix& bias) {
    for (std::size_t r = 0; r < z.rows(); ++r) {
        auto row = z.row(r);
        for (std::size_t c = 0; c < z.cols(); ++c) row[c] += bias(0, c);
    }
}

Matrix column_sums(const Matrix& m) {
    Matrix out(1, m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) out(0, c) += m(r, c);
    return out;
}

// Intermediate values of one forward pass, kept for backpropagation.
struct Trace {
    std::vector<Matrix> activations;  // mlp: input, then each hidden activation
    std::vector<Matrix> pre;          // mlp: pre-activations per hidden layer
    Matrix features;
    Matrix predictions;
};

Trace run_forward(const ModelSpec& spec, const ModelParams& p, const Matrix& x) {
    check_input(spec, x);
    check_params(spec, p);
    Trace t;
    const std::size_t n = x.rows();
    if (is_mlp(spec.family)) {
        const std::size_t layers = spec.widths().size();
        t.activations.push_back(x);
        for (std::size_t l = 0; l < layers; ++l) {
            Matrix z = matmul(t.activations.back(), p.tensors[2 * l]);
            add_row_bias(z, p.tensors[2 * l + 1]);
            Matrix a = z;
            if (spec.family == Family::mlp_tanh) {
                for (double& v : a.data()) v = std::tanh(v);
            } else {
                for (double& v : a.data()) v = std::max(v, 0.0);
            }
            t.pre.push_back(std::move(z));
            t.activations.push_back(std::move(a));
        }
        t.features = t.activations.back();
    } else if (spec.family == Family::rbf) {
        const Matrix& centers = p.tensors[0];
        const double bw = p.tensors[1](0, 0);
        const double inv = 1.0 / (2.0 * bw * bw);
        t.features = Matrix(n, centers.rows());
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t k = 0; k < centers.rows(); ++k) {
                double d2 = 0.0;
                for (std::size_t c = 0; c < x.cols(); ++c) {
                    const double d = x(r, c) - centers(k, c);
                    d2 += d * d;
                }
                t.features(r, k) = std::exp(-d2 * inv);
            }
        }
    } else {
        Matrix z = matmul(x, p.tensors[0]);
        add_row_bias(z, p.tensors[1]);
        const double amp = std::sqrt(2.0 / static_cast<double>(z.cols()));
        for (double& v : z.data()) v = amp * std::cos(v);
        t.features = std::move(z);
    }
    const std::size_t head = p.tensors.size() - 2;
    t.predictions = matmul(t.features, p.tensors[head]);
    add_row_bias(t.predictions, p.tensors[head + 1]);
    require_finite(t.predictions, "forward");
    return t;
}

void check_targets(const ModelSpec& spec, const Matrix& x, const Matrix& y) {
    if (y.rows() != x.rows() || y.cols() != spec.output_dim) {
        throw ShapeError("targets " + y.shape() + " do not match inputs " + x.shape() +
                         " with output_dim " + std::to_string(spec.output_dim));
    }
    if (x.rows() == 0) throw ShapeError("no samples");
}

double mse_of(const Matrix& pred, const Matrix& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.data()[i] - y.data()[i];
        s += d * d;
    }
    return s / static_cast<double>(pred.rows());
}

struct LossAndGrad {
    double loss;
    std::vector<Matrix> grads;
};

LossAndGrad value_and_gradient(const ModelSpec& spec, const ModelParams& p, const Matrix& x,
                               const Matrix& y) {
    check_targets(spec, x, y);
    Trace t = run_forward(spec, p, x);
    const double n = static_cast<double>(x.rows());

    LossAndGrad out{mse_of(t.predictions, y), {}};
    out.grads.reserve(p.tensors.size());
    for (const auto& m : p.tensors) out.grads.emplace_back(m.rows(), m.cols());

    // dL/dyhat
    Matrix delta(t.predictions.rows(), t.predictions.cols());
    for (std::size_t i = 0; i < delta.size(); ++i)
        delta.data()[i] = 2.0 / n * (t.predictions.data()[i] - y.data()[i]);

    const std::size_t head = p.tensors.size() - 2;
    out.grads[head] = matmul_tn(t.features, delta);
    out.grads[head + 1] = column_sums(delta);
    Matrix dfeat = matmul_nt(delta, p.tensors[head]);

    if (is_mlp(spec.family)) {
        for (std::size_t l = spec.widths().size(); l-- > 0;) {
            Matrix& a = t.activations[l + 1];
            const Matrix& z = t.pre[l];
            Matrix dz = std::move(dfeat);
            if (spec.family == Family::mlp_tanh) {
                for (std::size_t i = 0; i < dz.size(); ++i)
                    dz.data()[i] *= 1.0 - a.data()[i] * a.data()[i];
            } else {
                for (std::size_t i = 0; i < dz.size(); ++i)
                    if (z.data()[i] <= 0.0) dz.data()[i] = 0.0;
            }
            out.grads[2 * l] = matmul_tn(t.activations[l], dz);
            out.grads[2 * l + 1] = column_sums(dz);
            if (l > 0) dfeat = matmul_nt(dz, p.tensors[2 * l]);
        }
    } else if (spec.family == Family::rbf) {
        const Matrix& centers = p.tensors[0];
        const double bw = p.tensors[1](0, 0);
        const double inv_bw2 = 1.0 / (bw * bw);
        Matrix& gc = out.grads[0];
        for (std::size_t r = 0; r < x.rows(); ++r) {
            for (std::size_t k = 0; k < centers.rows(); ++k) {
                const double s = dfeat(r, k) * t.features(r, k) * inv_bw2;
                if (s == 0.0) continue;
                for (std::size_t c = 0; c < x.cols(); ++c)
                    gc(k, c) += s * (x(r, c) - centers(k, c));
            }
        }
    }
    // rff-linear: projection and phases are frozen; their gradients stay zero.
    for (std::size_t i = 0; i < out.grads.size(); ++i)
        if (!p.trainable[i]) out.grads[i] = Matrix(p.tensors[i].rows(), p.tensors[i].cols());
    return out;
}

bool diverged(double loss) noexcept {
    return !std::isfinite(loss) || loss > kDivergenceGuard;
}

}  // namespace

ModelParams init_model(const ModelSpec& spec, SeededRng& rng,
                       const std::optional<InputDomain>& domain) {
    spec.validate();
    ModelParams p;
    const auto widths = spec.widths();
    const double g = spec.init_scale;
    auto push = [&](Matrix m, bool trainable) {
        p.tensors.push_back(std::move(m));
        p.trainable.push_back(trainable);
    };

    if (is_mlp(spec.family)) {
        std::size_t fan_in = spec.input_dim;
        for (std::size_t w : widths) {
            push(normal_matrix(rng, fan_in, w, g / std::sqrt(static_cast<double>(fan_in))), true);
            push(Matrix(1, w), true);
            fan_in = w;
        }
    } else {
        InputDomain box = domain.value_or(InputDomain{std::vector<double>(spec.input_dim, 0.0),
                                                      std::vector<double>(spec.input_dim, 1.0)});
        if (box.lo.size() != spec.input_dim || box.hi.size() != spec.input_dim) {
            throw ShapeError("input domain does not match input_dim " +
                             std::to_string(spec.input_dim));
        }
        double mean_range = 0.0;
        for (std::size_t c = 0; c < spec.input_dim; ++c) mean_range += box.hi[c] - box.lo[c];
        mean_range /= static_cast<double>(spec.input_dim);
        if (!(mean_range > 0.0)) mean_range = 1.0;

        const std::size_t w = widths.back();
        if (spec.family == Family::rbf) {
            // 1-D inputs get an evenly spaced grid over the domain; higher dimensions
            // draw centers uniformly inside the bounding box.
            Matrix centers(w, spec.input_dim);
            if (spec.input_dim == 1) {
                for (std::size_t k = 0; k < w; ++k) {
                    const double frac = w == 1 ? 0.5 : static_cast<double>(k) / (w - 1);
                    centers(k, 0) = box.lo[0] + frac * (box.hi[0] - box.lo[0]);
                }
            } else {
                for (std::size_t k = 0; k < w; ++k)
                    for (std::size_t c = 0; c < spec.input_dim; ++c)
                        centers(k, c) = rng.uniform(box.lo[c], box.hi[c]);
            }
            const double spacing =
                mean_range / std::pow(static_cast<double>(w), 1.0 / spec.input_dim);
            push(std::move(centers), true);
            push(Matrix(1, 1, std::max(spacing, 1e-3)), false);
        } else {
            const double freq = 2.0 * std::numbers::pi / mean_range;
            push(normal_matrix(rng, spec.input_dim, w, freq), false);
            Matrix phases(1, w);
            for (double& v : phases.data()) v = rng.uniform(0.0, 2.0 * std::numbers::pi);
            push(std::move(phases), false);
        }
    }
    const std::size_t d = widths.back();
    push(normal_matrix(rng, d, spec.output_dim, g / std::sqrt(static_cast<double>(d))), true);
    push(Matrix(1, spec.output_dim), true);
    return p;
}

ForwardResult forward(const ModelSpec& spec, const ModelParams& params, const Matrix& x) {
    Trace t = run_forward(spec, params, x);
    return {std::move(t.predictions), std::move(t.features)};
}

Matrix predict(const ModelSpec& spec, const ModelParams& params, const Matrix& x) {
    return forward(spec, params, x).predictions;
}

double loss(const ModelSpec& spec, const ModelParams& params, const Matrix& x, const Matrix& y) {
    check_targets(spec, x, y);
    return mse_of(predict(spec, params, x), y);
}

std::vector<Matrix> gradient(const ModelSpec& spec, const ModelParams& params, const Matrix& x,
                             const Matrix& y) {
    return value_and_gradient(spec, params, x, y).grads;
}

TrainedModel train(const ModelSpec& spec, const Matrix& x, const Matrix& y,
                   const TrainConfig& config, SeededRng& rng) {
    spec.validate();
    config.validate();
    check_input(spec, x);
    check_targets(spec, x, y);

    TrainedModel model{spec, init_model(spec, rng, InputDomain::of(x)), {}, 0.0};
    model.loss_curve.reserve(config.epochs + 1);
    auto& params = model.params;

    std::vector<Matrix> m1, m2;
    if (config.optimizer == Optimizer::adam) {
        for (const auto& t : params.tensors) {
            m1.emplace_back(t.rows(), t.cols());
            m2.emplace_back(t.rows(), t.cols());
        }
    }
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double b1t = 1.0, b2t = 1.0;
    const double lr = config.learning_rate;

    auto record = [&](double value, std::size_t epoch) {
        if (diverged(value)) throw TrainingDiverged(epoch, model.loss_curve);
        model.loss_curve.push_back(value);
    };

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        LossAndGrad lg;
        try {
            lg = value_and_gradient(spec, params, x, y);
        } catch (const NumericError&) {
            throw TrainingDiverged(epoch, model.loss_curve);
        }
        record(lg.loss, epoch);
        if (config.optimizer == Optimizer::adam) {
            b1t *= beta1;
            b2t *= beta2;
        }
        for (std::size_t i = 0; i < params.tensors.size(); ++i) {
            if (!params.trainable[i]) continue;
            auto w = params.tensors[i].data();
            const auto gr = lg.grads[i].data();
            if (config.optimizer == Optimizer::gd) {
                for (std::size_t j = 0; j < w.size(); ++j) w[j] -= lr * gr[j];
            } else {
                auto m = m1[i].data();
                auto v = m2[i].data();
                for (std::size_t j = 0; j < w.size(); ++j) {
                    m[j] = beta1 * m[j] + (1.0 - beta1) * gr[j];
                    v[j] = beta2 * v[j] + (1.0 - beta2) * gr[j] * gr[j];
                    const double mh = m[j] / (1.0 - b1t);
                    const double vh = v[j] / (1.0 - b2t);
                    w[j] -= lr * mh / (std::sqrt(vh) + eps);
                }
            }
        }
    }
    double final_loss;
    try {
        final_loss = loss(spec, params, x, y);
    } catch (const NumericError&) {
        throw TrainingDiverged(config.epochs, model.loss_curve);
    }
    record(final_loss, config.epochs);
    model.aulc = aulc(model.loss_curve);
    return model;
}

TrainedModel train(const ModelSpec& spec, const Dataset& data, const TrainConfig& config,
                   SeededRng& rng) {
    data.validate();
    return train(spec, data.x, data.y, config, rng);
}

}  // namespace rexp
