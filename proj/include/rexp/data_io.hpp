#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "rexp/dataset.hpp"
#include "rexp/engine.hpp"

namespace rexp {

// Flat key=value text, keys sorted lexicographically.
using KeyValues = std::map<std::string, std::string>;

/// x_i evenly spaced over [lo, hi] (endpoints included), y_i = sin(2*pi*x_i) + eps_i
/// with eps ~ N(0, sigma^2) drawn from SeededRng(seed).
Dataset generate_sinusoid(std::size_t n, double sigma, std::uint64_t seed, double lo = 0.0,
                          double hi = 1.0);

/// Shortest decimal string that parses back to exactly `v`; locale independent.
std::string format_real(double v);
/// Parses a whole field as a finite double; throws ContractError otherwise.
double parse_real(std::string_view text);

/// CSV with header "x,y" (or "x0,...,x{d-1},y" for wider inputs).
void save_dataset(const Dataset& data, const std::filesystem::path& path);
/// Throws ParseError with the offending line number, IoError when unreadable.
Dataset load_dataset(const std::filesystem::path& path);

std::string format_key_values(const KeyValues& kv);
/// Blank lines and lines starting with '#' are skipped.
KeyValues parse_key_values(std::string_view text);
KeyValues read_key_values(const std::filesystem::path& path);

/// Writes summary.csv, loss_curve_round_<i>.csv per record, baseline.csv,
/// timing.csv and run_meta into out_dir (created if missing). Returns the
/// paths written, in write order. Wall-clock times only appear in timing.csv.
std::vector<std::filesystem::path> write_run_outputs(const std::vector<RunRecord>& records,
                                                     const Baseline& baseline,
                                                     const KeyValues& meta,
                                                     const std::filesystem::path& out_dir);

std::string summary_csv(const std::vector<RunRecord>& records);

struct SummaryRow {
    std::size_t round = 0;
    double mse = 0.0;
    double aulc_main = 0.0;
    std::size_t expanded_width = 0;
    bool glitch = false;
};

std::vector<SummaryRow> read_summary(const std::filesystem::path& path);

}  // namespace rexp
