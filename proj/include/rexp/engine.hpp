#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "rexp/dataset.hpp"
#include "rexp/imt.hpp"
#include "rexp/metrics.hpp"
#include "rexp/nn.hpp"

namespace rexp {

enum class Mode { re, mvre, hmvre, sc_hmvre };
std::string_view to_string(Mode m) noexcept;
Mode parse_mode(std::string_view name);

struct REConfig {
    std::size_t rounds = 100;
    Mode mode = Mode::re;
    // Template for the main model f_i; input_dim and init_seed are set per round.
    ModelSpec model{Family::mlp_tanh, Scale::medium, {32, 32}};
    TrainConfig train;
    AggregatorConfig aggregator;
    GlitchConfig glitch;
    std::uint64_t master_seed = 7;
    bool stop_on_glitch = false;
    // Train on 4 of every 5 rows and report MSE on the rest.
    bool holdout = false;
    // Worker threads for member retraining; 0 picks the hardware concurrency.
    std::size_t threads = 1;

    void validate() const;
};

// Which inputs the multiverse members train on each round.
//   raw:      the raw dataset, as in the multiverse pseudocode.
//   expanded: the same expanded inputs as the round's main model, so that a
//             single member sharing the main model's spec and seed is f_i itself.
enum class MemberSource { raw, expanded };
std::string_view to_string(MemberSource s) noexcept;
MemberSource parse_member_source(std::string_view name);

struct MemberSpec {
    Family family = Family::mlp_tanh;
    Scale scale = Scale::medium;
    std::optional<double> learning_rate;  // overrides REConfig::train.learning_rate

    bool operator==(const MemberSpec&) const = default;
};

struct MultiverseConfig {
    std::vector<MemberSpec> members;
    MemberSource source = MemberSource::raw;

    std::size_t k() const noexcept { return members.size(); }
    // mvre requires one family; hmvre and sc-hmvre require at least two.
    void validate(Mode mode) const;
};

enum class Criterion { lowest_aulc, all, round_robin };
std::string_view to_string(Criterion c) noexcept;
Criterion parse_criterion(std::string_view name);

struct SelectionPolicy {
    std::size_t budget = 1;
    Criterion criterion = Criterion::all;

    void validate(std::size_t k) const;
};

struct MultiverseSnapshot {
    std::size_t round = 0;  // round that produced the bundles
    std::vector<IMTBundle> bundles;
    std::vector<double> aulcs;
};

struct RunRecord {
    std::size_t round = 0;  // 1-based
    double mse = 0.0;
    double aulc_main = 0.0;
    // AULCs of every source model available to this round (k entries).
    std::vector<double> member_aulcs;
    std::vector<std::size_t> selected;       // S_i, ascending member indices
    std::vector<std::size_t> retained_dims;  // aligned with selected
    std::vector<double> weights;             // aligned with selected
    std::size_t expanded_width = 0;          // D: auxiliary columns appended to x
    bool glitch = false;
    bool diverged = false;
    double wall_ms = 0.0;
    std::vector<double> loss_curve;  // main model
};

// Round-0 models: f_0 for re, the initial multiverse otherwise.
struct Baseline {
    std::vector<double> mse;
    std::vector<double> aulc;
    std::vector<bool> diverged;
};

struct RunResult {
    Baseline baseline;
    std::vector<RunRecord> records;
    TrainedModel final_model;
    bool halted = false;  // stop_on_glitch ended the run early
};

/// Ordered member indices used at `round` (1-based).
///   lowest-aulc: the `budget` smallest AULCs, ties to the lower index
///   all:         every member
///   round-robin: `budget` consecutive indices from ((round-1)*budget mod k)
std::vector<std::size_t> select_subset(const MultiverseSnapshot& snapshot,
                                       const SelectionPolicy& policy, std::size_t round);

// Called after every completed round, in round order.
using RoundObserver = std::function<void(const RunRecord&)>;

RunResult run_re(const Dataset& data, const REConfig& config, const RoundObserver& observer = {});
RunResult run_mvre(const Dataset& data, const REConfig& config, const MultiverseConfig& mv,
                   const RoundObserver& observer = {});
RunResult run_hmvre(const Dataset& data, const REConfig& config, const MultiverseConfig& mv,
                    const RoundObserver& observer = {});
RunResult run_schmvre(const Dataset& data, const REConfig& config, const MultiverseConfig& mv,
                      const SelectionPolicy& policy, const RoundObserver& observer = {});

/// Dispatches on config.mode.
RunResult run(const Dataset& data, const REConfig& config, const MultiverseConfig& mv,
              const SelectionPolicy& policy, const RoundObserver& observer = {});

}  // namespace rexp
