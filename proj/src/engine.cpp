#include "rexp/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <functional>
#include <numeric>
#include <set>
#include <string>
#include <thread>

#include "rexp/error.hpp"

namespace rexp {

std::string_view to_string(Mode m) noexcept {
    switch (m) {
        case Mode::re: return "re";
        case Mode::mvre: return "mvre";
        case Mode::hmvre: return "hmvre";
        case Mode::sc_hmvre: return "sc-hmvre";
    }
    return "?";
}

Mode parse_mode(std::string_view name) {
    for (Mode m : {Mode::re, Mode::mvre, Mode::hmvre, Mode::sc_hmvre})
        if (to_string(m) == name) return m;
    throw ContractError("unknown mode '" + std::string(name) + "'");
}

std::string_view to_string(MemberSource s) noexcept {
    return s == MemberSource::raw ? "raw" : "expanded";
}

MemberSource parse_member_source(std::string_view name) {
    if (name == "raw") return MemberSource::raw;
    if (name == "expanded") return MemberSource::expanded;
    throw ContractError("unknown member source '" + std::string(name) + "'");
}

std::string_view to_string(Criterion c) noexcept {
    switch (c) {
        case Criterion::lowest_aulc: return "lowest-aulc";
        case Criterion::all: return "all";
        case Criterion::round_robin: return "round-robin";
    }
    return "?";
}

Criterion parse_criterion(std::string_view name) {
    for (Criterion c : {Criterion::lowest_aulc, Criterion::all, Criterion::round_robin})
        if (to_string(c) == name) return c;
    throw ContractError("unknown selection criterion '" + std::string(name) + "'");
}

void REConfig::validate() const {
    if (rounds < 1) throw ContractError("rounds must be >= 1");
    model.validate();
    train.validate();
    aggregator.validate();
    glitch.validate();
}

void MultiverseConfig::validate(Mode mode) const {
    if (mode == Mode::re) return;
    if (members.empty()) throw ContractError("multiverse needs at least one member");
    for (const auto& m : members)
        if (m.learning_rate && !(*m.learning_rate > 0.0)) {
            throw ContractError("member learning rate must be > 0");
        }
    std::set<Family> families;
    for (const auto& m : members) families.insert(m.family);
    if (mode == Mode::mvre && families.size() != 1) {
        throw ContractError("mode mvre requires all members to share one family");
    }
    if ((mode == Mode::hmvre || mode == Mode::sc_hmvre) && families.size() < 2) {
        throw ContractError("mode " + std::string(to_string(mode)) +
                            " requires at least two distinct member families");
    }
}

void SelectionPolicy::validate(std::size_t k) const {
    if (budget < 1 || budget > k) {
        throw ContractError("selection budget must lie in [1, " + std::to_string(k) + "]");
    }
}

std::vector<std::size_t> select_subset(const MultiverseSnapshot& snapshot,
                                       const SelectionPolicy& policy, std::size_t round) {
    const std::size_t k = snapshot.bundles.size();
    policy.validate(k);
    std::vector<std::size_t> ids;
    switch (policy.criterion) {
        case Criterion::all:
            ids.resize(k);
            std::iota(ids.begin(), ids.end(), 0);
            break;
        case Criterion::lowest_aulc: {
            std::vector<std::size_t> order(k);
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return snapshot.aulcs[a] < snapshot.aulcs[b];
            });
            ids.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(policy.budget));
            break;
        }
        case Criterion::round_robin: {
            const std::size_t start = (round == 0 ? 0 : (round - 1) * policy.budget) % k;
            for (std::size_t t = 0; t < policy.budget; ++t) ids.push_back((start + t) % k);
            break;
        }
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

namespace {

using Clock = std::chrono::steady_clock;

// Runs fn(0..count-1) on up to `threads` workers. Exceptions are rethrown in
// index order after all workers finish.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, count);
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    {
        std::vector<std::jthread> workers;
        for (std::size_t t = 0; t < threads; ++t) {
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::string source_id(std::size_t round, std::size_t slot) {
    return "r" + std::to_string(round) + "m" + std::to_string(slot);
}

// Rows used for fitting and rows used for reporting MSE.
struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> eval;
    bool all = true;
};

Split make_split(std::size_t n, bool holdout) {
    Split s;
    s.all = !holdout;
    for (std::size_t i = 0; i < n; ++i) {
        if (holdout && i % 5 == 4) {
            s.eval.push_back(i);
        } else {
            s.train.push_back(i);
        }
        if (!holdout) s.eval.push_back(i);
    }
    if (holdout && (s.eval.empty() || s.train.empty())) {
        throw ContractError("holdout split needs at least 5 samples");
    }
    return s;
}

Matrix rows_of(const Matrix& m, const Split& split, bool eval) {
    if (split.all) return m;
    return select_rows(m, eval ? split.eval : split.train);
}

struct Fitted {
    TrainedModel model;
    bool diverged = false;
};

// Trains a model; a diverged run falls back to the untrained initialization,
// with an AULC computed over the recorded losses capped by the divergence guard.
Fitted fit_model(ModelSpec spec, const Matrix& x, const Matrix& y, const TrainConfig& cfg,
                 std::uint64_t seed, const Split& split) {
    spec.input_dim = x.cols();
    spec.init_seed = seed;
    const Matrix xt = rows_of(x, split, false);
    const Matrix yt = rows_of(y, split, false);
    SeededRng rng(seed);
    try {
        return {train(spec, xt, yt, cfg, rng), false};
    } catch (const TrainingDiverged& e) {
        SeededRng fresh(seed);
        TrainedModel m{spec, init_model(spec, fresh, InputDomain::of(xt)), e.partial_curve(), 0.0};
        while (m.loss_curve.size() < 2) m.loss_curve.push_back(kDivergenceGuard);
        m.loss_curve.back() = kDivergenceGuard;
        m.aulc = aulc(m.loss_curve);
        return {std::move(m), true};
    }
}

double eval_mse(const TrainedModel& m, const Matrix& x, const Matrix& y, const Split& split) {
    return mse(predict(m.spec, m.params, rows_of(x, split, true)), rows_of(y, split, true));
}

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Sets record.glitch from the MSE series so far; returns true when the run should halt.
bool close_round(std::vector<RunRecord>& records, const REConfig& config,
                 const RoundObserver& observer) {
    std::vector<double> series;
    series.reserve(records.size());
    for (const auto& r : records) series.push_back(r.mse);
    const GlitchReport report = detect_glitch(series, config.glitch);
    RunRecord& last = records.back();
    last.glitch = report.flags.back();
    if (observer) observer(last);
    return config.stop_on_glitch && (last.glitch || last.diverged);
}

TrainConfig member_train_config(const REConfig& config, const MemberSpec& member) {
    TrainConfig cfg = config.train;
    if (member.learning_rate) cfg.learning_rate = *member.learning_rate;
    return cfg;
}

ModelSpec member_spec(const MemberSpec& member) {
    ModelSpec spec;
    spec.family = member.family;
    spec.scale = member.scale;
    return spec;
}

struct Member {
    Fitted fitted;
    IMTBundle bundle;
};

std::vector<Member> train_multiverse(const Matrix& x, const Matrix& y, const REConfig& config,
                                     const MultiverseConfig& mv, std::size_t round,
                                     const Split& split) {
    std::vector<Member> out(mv.k());
    parallel_for(mv.k(), config.threads, [&](std::size_t j) {
        const MemberSpec& member = mv.members[j];
        Fitted f = fit_model(member_spec(member), x, y, member_train_config(config, member),
                             split_seed(config.master_seed, round, j), split);
        IMTBundle b = extract_imt(f.model, x, source_id(round, j));
        out[j] = {std::move(f), std::move(b)};
    });
    return out;
}

MultiverseSnapshot snapshot_of(const std::vector<Member>& members, std::size_t round) {
    MultiverseSnapshot s;
    s.round = round;
    for (const auto& m : members) {
        s.bundles.push_back(m.bundle);
        s.aulcs.push_back(m.bundle.aulc);
    }
    return s;
}

RunResult run_multiverse(const Dataset& data, const REConfig& config, const MultiverseConfig& mv,
                         const SelectionPolicy& policy, const RoundObserver& observer) {
    data.validate();
    config.validate();
    mv.validate(config.mode);
    policy.validate(mv.k());
    const Split split = make_split(data.size(), config.holdout);
    const Matrix& x = data.x;
    const Matrix& y = data.y;

    RunResult result;
    std::vector<Member> members = train_multiverse(x, y, config, mv, 0, split);
    for (const auto& m : members) {
        result.baseline.mse.push_back(eval_mse(m.fitted.model, x, y, split));
        result.baseline.aulc.push_back(m.fitted.model.aulc);
        result.baseline.diverged.push_back(m.fitted.diverged);
    }
    MultiverseSnapshot snapshot = snapshot_of(members, 0);

    for (std::size_t round = 1; round <= config.rounds; ++round) {
        const auto start = Clock::now();
        RunRecord rec;
        rec.round = round;
        rec.member_aulcs = snapshot.aulcs;
        rec.selected = select_subset(snapshot, policy, round);

        std::vector<IMTBundle> chosen;
        for (std::size_t j : rec.selected) chosen.push_back(snapshot.bundles[j]);
        const RhoModel rho = build_rho(chosen, config.aggregator);
        ExpandedDataset expanded = expand(rho, chosen, x, y, round);
        rec.retained_dims = rho.retained_dims();
        rec.weights = rho.weights;
        rec.expanded_width = rho.width();

        Fitted main = fit_model(config.model, expanded.x, y, config.train,
                                split_seed(config.master_seed, round, 0), split);
        rec.mse = eval_mse(main.model, expanded.x, y, split);
        rec.aulc_main = main.model.aulc;
        rec.diverged = main.diverged;
        rec.loss_curve = main.model.loss_curve;

        const Matrix& member_input = mv.source == MemberSource::raw ? x : expanded.x;
        members = train_multiverse(member_input, y, config, mv, round, split);
        snapshot = snapshot_of(members, round);

        result.final_model = std::move(main.model);
        rec.wall_ms = elapsed_ms(start);
        result.records.push_back(std::move(rec));
        if (close_round(result.records, config, observer)) {
            result.halted = round < config.rounds;
            break;
        }
    }
    return result;
}

void require_mode(const REConfig& config, Mode expected) {
    if (config.mode != expected) {
        throw ContractError("engine for mode " + std::string(to_string(expected)) +
                            " called with mode " + std::string(to_string(config.mode)));
    }
}

}  // namespace

RunResult run_re(const Dataset& data, const REConfig& config, const RoundObserver& observer) {
    require_mode(config, Mode::re);
    data.validate();
    config.validate();
    const Split split = make_split(data.size(), config.holdout);
    const Matrix& x = data.x;
    const Matrix& y = data.y;

    RunResult result;
    Fitted prev = fit_model(config.model, x, y, config.train,
                            split_seed(config.master_seed, 0, 0), split);
    Matrix prev_input = x;
    result.baseline.mse.push_back(eval_mse(prev.model, x, y, split));
    result.baseline.aulc.push_back(prev.model.aulc);
    result.baseline.diverged.push_back(prev.diverged);

    for (std::size_t round = 1; round <= config.rounds; ++round) {
        const auto start = Clock::now();
        const std::vector<IMTBundle> bundle{
            extract_imt(prev.model, prev_input, source_id(round - 1, 0))};
        const RhoModel rho = build_rho(bundle, config.aggregator);
        ExpandedDataset expanded = expand(rho, bundle, x, y, round);

        Fitted current = fit_model(config.model, expanded.x, y, config.train,
                                   split_seed(config.master_seed, round, 0), split);

        RunRecord rec;
        rec.round = round;
        rec.member_aulcs = {bundle.front().aulc};
        rec.selected = {0};
        rec.retained_dims = rho.retained_dims();
        rec.weights = rho.weights;
        rec.expanded_width = rho.width();
        rec.mse = eval_mse(current.model, expanded.x, y, split);
        rec.aulc_main = current.model.aulc;
        rec.diverged = current.diverged;
        rec.loss_curve = current.model.loss_curve;

        prev = std::move(current);
        prev_input = std::move(expanded.x);
        result.final_model = prev.model;
        rec.wall_ms = elapsed_ms(start);
        result.records.push_back(std::move(rec));
        if (close_round(result.records, config, observer)) {
            result.halted = round < config.rounds;
            break;
        }
    }
    return result;
}

RunResult run_mvre(const Dataset& data, const REConfig& config, const MultiverseConfig& mv,
                   const RoundObserver& observer) {
    require_mode(config, Mode::mvre);
    return run_multiverse(data, config, mv, {std::max<std::size_t>(mv.k(), 1), Criterion::all},
                          observer);
}

RunResult run_hmvre(const Dataset& data, const REConfig& config, const MultiverseConfig& mv,
                    const RoundObserver& observer) {
    require_mode(config, Mode::hmvre);
    return run_multiverse(data, config, mv, {std::max<std::size_t>(mv.k(), 1), Criterion::all},
                          observer);
}

RunResult run_schmvre(const Dataset& data, const REConfig& config, const MultiverseConfig& mv,
                      const SelectionPolicy& policy, const RoundObserver& observer) {
    require_mode(config, Mode::sc_hmvre);
    return run_multiverse(data, config, mv, policy, observer);
}

RunResult run(const Dataset& data, const REConfig& config, const MultiverseConfig& mv,
              const SelectionPolicy& policy, const RoundObserver& observer) {
    switch (config.mode) {
        case Mode::re: return run_re(data, config, observer);
        case Mode::mvre: return run_mvre(data, config, mv, observer);
        case Mode::hmvre: return run_hmvre(data, config, mv, observer);
        case Mode::sc_hmvre: return run_schmvre(data, config, mv, policy, observer);
    }
    throw ContractError("unknown mode");
}

}  // namespace rexp
