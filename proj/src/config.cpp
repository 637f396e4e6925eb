#include "rexp/config.hpp"

#include <charconv>
#include <functional>
#include <set>

#include "rexp/error.hpp"

namespace rexp {

namespace {

std::string join_lines(const std::vector<std::string>& items) {
    std::string out = "invalid configuration:";
    for (const auto& s : items) out += "\n  " + s;
    return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : std::invalid_argument(join_lines(violations)), violations_(std::move(violations)) {}

namespace {

std::uint64_t parse_count(std::string_view text) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || text.empty()) {
        throw ContractError("expected a non-negative integer, got '" + std::string(text) + "'");
    }
    return v;
}

bool parse_flag(std::string_view text) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw ContractError("expected true or false, got '" + std::string(text) + "'");
}

std::string flag(bool b) { return b ? "true" : "false"; }

std::vector<std::string_view> split_list(std::string_view text, char sep) {
    std::vector<std::string_view> out;
    if (text.empty()) return out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = text.find(sep, start);
        out.push_back(text.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) return out;
        start = pos + 1;
    }
}

std::vector<std::size_t> parse_widths(std::string_view text) {
    std::vector<std::size_t> out;
    for (auto w : split_list(text, ',')) out.push_back(parse_count(w));
    return out;
}

std::string format_widths(const std::vector<std::size_t>& widths) {
    std::string out;
    for (std::size_t i = 0; i < widths.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(widths[i]);
    }
    return out;
}

struct Field {
    std::function<void(ExperimentConfig&, std::string_view)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

const std::map<std::string, Field>& fields() {
    using C = ExperimentConfig;
    using S = std::string_view;
    static const std::map<std::string, Field> table = {
        {"mode", {[](C& c, S v) { c.re.mode = parse_mode(v); },
                  [](const C& c) { return std::string(to_string(c.re.mode)); }}},
        {"rounds", {[](C& c, S v) { c.re.rounds = parse_count(v); },
                    [](const C& c) { return std::to_string(c.re.rounds); }}},
        {"master_seed", {[](C& c, S v) { c.re.master_seed = parse_count(v); },
                         [](const C& c) { return std::to_string(c.re.master_seed); }}},
        {"stop_on_glitch", {[](C& c, S v) { c.re.stop_on_glitch = parse_flag(v); },
                            [](const C& c) { return flag(c.re.stop_on_glitch); }}},
        {"holdout", {[](C& c, S v) { c.re.holdout = parse_flag(v); },
                     [](const C& c) { return flag(c.re.holdout); }}},
        {"model.family", {[](C& c, S v) { c.re.model.family = parse_family(v); },
                          [](const C& c) { return std::string(to_string(c.re.model.family)); }}},
        {"model.scale", {[](C& c, S v) { c.re.model.scale = parse_scale(v); },
                         [](const C& c) { return std::string(to_string(c.re.model.scale)); }}},
        {"model.hidden", {[](C& c, S v) { c.re.model.hidden_layers = parse_widths(v); },
                          [](const C& c) { return format_widths(c.re.model.hidden_layers); }}},
        {"model.init_scale", {[](C& c, S v) { c.re.model.init_scale = parse_real(v); },
                              [](const C& c) { return format_real(c.re.model.init_scale); }}},
        {"train.epochs", {[](C& c, S v) { c.re.train.epochs = parse_count(v); },
                          [](const C& c) { return std::to_string(c.re.train.epochs); }}},
        {"train.learning_rate",
         {[](C& c, S v) { c.re.train.learning_rate = parse_real(v); },
          [](const C& c) { return format_real(c.re.train.learning_rate); }}},
        {"train.optimizer",
         {[](C& c, S v) { c.re.train.optimizer = parse_optimizer(v); },
          [](const C& c) { return std::string(to_string(c.re.train.optimizer)); }}},
        {"aggregator.theta",
         {[](C& c, S v) { c.re.aggregator.variance_threshold = parse_real(v); },
          [](const C& c) { return format_real(c.re.aggregator.variance_threshold); }}},
        {"aggregator.weighting",
         {[](C& c, S v) { c.re.aggregator.weighting = parse_weighting(v); },
          [](const C& c) { return std::string(to_string(c.re.aggregator.weighting)); }}},
        {"aggregator.temperature",
         {[](C& c, S v) { c.re.aggregator.temperature = parse_real(v); },
          [](const C& c) { return format_real(c.re.aggregator.temperature); }}},
        {"aggregator.include_predictions",
         {[](C& c, S v) { c.re.aggregator.include_predictions = parse_flag(v); },
          [](const C& c) { return flag(c.re.aggregator.include_predictions); }}},
        {"aggregator.max_components",
         {[](C& c, S v) {
              const auto cap = parse_count(v);
              c.re.aggregator.max_components =
                  cap == 0 ? std::nullopt : std::optional<std::size_t>(cap);
          },
          [](const C& c) { return std::to_string(c.re.aggregator.max_components.value_or(0)); }}},
        {"glitch.factor", {[](C& c, S v) { c.re.glitch.factor = parse_real(v); },
                           [](const C& c) { return format_real(c.re.glitch.factor); }}},
        {"glitch.window", {[](C& c, S v) { c.re.glitch.window = parse_count(v); },
                           [](const C& c) { return std::to_string(c.re.glitch.window); }}},
        {"multiverse.members", {[](C& c, S v) { c.mv.members = parse_members(v); },
                                [](const C& c) { return format_members(c.mv.members); }}},
        {"multiverse.member_source",
         {[](C& c, S v) { c.mv.source = parse_member_source(v); },
          [](const C& c) { return std::string(to_string(c.mv.source)); }}},
        {"selection.criterion",
         {[](C& c, S v) { c.policy.criterion = parse_criterion(v); },
          [](const C& c) { return std::string(to_string(c.policy.criterion)); }}},
        {"selection.budget", {[](C& c, S v) { c.policy.budget = parse_count(v); },
                              [](const C& c) { return std::to_string(c.policy.budget); }}},
        {"data.generator",
         {[](C& c, S v) {
              if (v != "sinusoid" && v != "file") {
                  throw ContractError("expected sinusoid or file, got '" + std::string(v) + "'");
              }
              c.data.generator = std::string(v);
          },
          [](const C& c) { return c.data.generator; }}},
        {"data.path", {[](C& c, S v) { c.data.path = std::string(v); },
                       [](const C& c) { return c.data.path; }}},
        {"data.n", {[](C& c, S v) { c.data.n = parse_count(v); },
                    [](const C& c) { return std::to_string(c.data.n); }}},
        {"data.sigma", {[](C& c, S v) { c.data.sigma = parse_real(v); },
                        [](const C& c) { return format_real(c.data.sigma); }}},
        {"data.seed", {[](C& c, S v) { c.data.seed = parse_count(v); },
                       [](const C& c) { return std::to_string(c.data.seed); }}},
        {"data.lo", {[](C& c, S v) { c.data.lo = parse_real(v); },
                     [](const C& c) { return format_real(c.data.lo); }}},
        {"data.hi", {[](C& c, S v) { c.data.hi = parse_real(v); },
                     [](const C& c) { return format_real(c.data.hi); }}},
    };
    return table;
}

// Keys written into run_meta that carry no settings.
const std::set<std::string>& informational_keys() {
    static const std::set<std::string> keys = {"artifact.version", "seed.scheme"};
    return keys;
}

void check(std::vector<std::string>& errors, bool ok, const std::string& message) {
    if (!ok) errors.push_back(message);
}

void validate(const ExperimentConfig& c, std::vector<std::string>& errors) {
    const auto& re = c.re;
    check(errors, re.rounds >= 1, "rounds: must be >= 1");
    check(errors, re.train.epochs >= 1, "train.epochs: must be >= 1");
    check(errors, re.train.learning_rate > 0.0, "train.learning_rate: must be > 0");
    check(errors,
          re.aggregator.variance_threshold > 0.0 && re.aggregator.variance_threshold <= 1.0,
          "aggregator.theta: must lie in (0, 1]");
    check(errors, re.aggregator.temperature > 0.0, "aggregator.temperature: must be > 0");
    check(errors, re.glitch.factor > 1.0, "glitch.factor: must be > 1");
    check(errors, re.glitch.window >= 1, "glitch.window: must be >= 1");
    check(errors, re.model.init_scale >= 0.0, "model.init_scale: must be >= 0");
    for (std::size_t w : re.model.hidden_layers)
        if (w < 1) {
            errors.push_back("model.hidden: widths must be >= 1");
            break;
        }

    if (re.mode != Mode::re) {
        try {
            c.mv.validate(re.mode);
        } catch (const ContractError& e) {
            errors.push_back(std::string("multiverse.members: ") + e.what());
        }
        if (re.mode == Mode::sc_hmvre) {
            check(errors, c.policy.budget >= 1 && c.policy.budget <= c.mv.k(),
                  "selection.budget: must lie in [1, " + std::to_string(c.mv.k()) + "]");
        }
    }

    if (c.data.generator == "file") {
        check(errors, !c.data.path.empty(), "data.path: required when data.generator=file");
    } else {
        check(errors, c.data.n >= 2, "data.n: must be >= 2");
        check(errors, c.data.sigma >= 0.0, "data.sigma: must be >= 0");
        check(errors, c.data.lo < c.data.hi, "data.lo: must be < data.hi");
    }
}

}  // namespace

ExperimentConfig default_config() {
    ExperimentConfig c;
    c.mv.members = {{Family::mlp_tanh, Scale::medium, std::nullopt},
                    {Family::rbf, Scale::medium, std::nullopt},
                    {Family::rff_linear, Scale::medium, std::nullopt}};
    return c;
}

std::string format_members(const std::vector<MemberSpec>& members) {
    std::string out;
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (i) out += ",";
        out += std::string(to_string(members[i].family)) + ":" +
               std::string(to_string(members[i].scale));
        if (members[i].learning_rate) out += ":" + format_real(*members[i].learning_rate);
    }
    return out;
}

std::vector<MemberSpec> parse_members(std::string_view text) {
    std::vector<MemberSpec> out;
    for (auto item : split_list(text, ',')) {
        const auto parts = split_list(item, ':');
        if (parts.size() < 2 || parts.size() > 3) {
            throw ContractError("member '" + std::string(item) +
                                "' must look like family:scale[:learning_rate]");
        }
        MemberSpec m{parse_family(parts[0]), parse_scale(parts[1]), std::nullopt};
        if (parts.size() == 3) m.learning_rate = parse_real(parts[2]);
        out.push_back(m);
    }
    return out;
}

ExperimentConfig config_from_key_values(const KeyValues& kv) {
    ExperimentConfig c = default_config();
    std::vector<std::string> errors;
    const auto& table = fields();
    for (const auto& [key, value] : kv) {
        if (informational_keys().contains(key)) continue;
        const auto it = table.find(key);
        if (it == table.end()) {
            errors.push_back(key + ": unknown key");
            continue;
        }
        try {
            it->second.set(c, value);
        } catch (const std::exception& e) {
            errors.push_back(key + ": " + e.what());
        }
    }
    validate(c, errors);
    if (!errors.empty()) throw ConfigError(std::move(errors));
    return c;
}

KeyValues config_to_key_values(const ExperimentConfig& config) {
    KeyValues kv;
    for (const auto& [key, field] : fields()) kv[key] = field.get(config);
    return kv;
}

Dataset load_data(const DataSource& source) {
    if (source.generator == "file") return load_dataset(source.path);
    return generate_sinusoid(source.n, source.sigma, source.seed, source.lo, source.hi);
}

}  // namespace rexp
