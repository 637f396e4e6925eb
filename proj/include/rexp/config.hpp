#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "rexp/data_io.hpp"
#include "rexp/engine.hpp"

namespace rexp {

inline constexpr std::string_view kArtifactVersion = "0.3.0";

// Either a generated sinusoid or a dataset CSV.
struct DataSource {
    std::string generator = "sinusoid";  // "sinusoid" or "file"
    std::string path;
    std::size_t n = 100;
    double sigma = 0.1;
    std::uint64_t seed = 7;
    double lo = 0.0;
    double hi = 1.0;
};

/// Everything needed to reproduce one experiment.
struct ExperimentConfig {
    REConfig re;
    MultiverseConfig mv;
    SelectionPolicy policy;
    DataSource data;
};

ExperimentConfig default_config();

/// Parses flat key=value settings on top of the defaults. Unknown keys, bad
/// values and violated invariants are all collected into one ConfigError.
ExperimentConfig config_from_key_values(const KeyValues& kv);

/// Every key with its resolved value; run_meta adds artifact.version and seed.scheme.
KeyValues config_to_key_values(const ExperimentConfig& config);

/// Member list syntax: "family:scale[:learning_rate]" entries joined by commas.
std::string format_members(const std::vector<MemberSpec>& members);
std::vector<MemberSpec> parse_members(std::string_view text);

Dataset load_data(const DataSource& source);

}  // namespace rexp
