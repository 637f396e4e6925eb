#include "rexp/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "rexp/config.hpp"
#include "rexp/data_io.hpp"
#include "rexp/engine.hpp"
#include "rexp/error.hpp"

namespace rexp::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kUsage =
    "usage: rexp <command> [options]\n"
    "\n"
    "commands:\n"
    "  gen     generate a noisy sinusoid dataset CSV\n"
    "  run     run a recurrent expansion experiment from a key=value config\n"
    "  report  summarize the outputs of a finished run\n"
    "\n"
    "Run 'rexp <command> --help' for the options of one command.\n";

// Parses args with app; returns an exit code when the command should stop.
std::optional<int> parse(CLI::App& app, const std::vector<std::string>& args, std::ostream& out,
                         std::ostream& err) {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kInvalid;
    }
    return std::nullopt;
}

std::size_t threads_from_env() {
    const char* v = std::getenv("REXP_THREADS");
    if (v == nullptr || *v == '\0') return 1;
    try {
        return static_cast<std::size_t>(std::stoul(v));
    } catch (const std::exception&) {
        return 1;
    }
}

std::string fixed(double v, int digits = 6) {
    std::ostringstream ss;
    ss << std::setprecision(digits) << v;
    return ss.str();
}

}  // namespace

int cmd_gen(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Generate y = sin(2*pi*x) + noise on evenly spaced x", "rexp gen"};
    std::size_t n = 100;
    double sigma = 0.1;
    std::uint64_t seed = 7;
    double lo = 0.0, hi = 1.0;
    std::string path;
    app.add_option("--n", n, "number of samples (>= 2)")->capture_default_str();
    app.add_option("--sigma", sigma, "noise standard deviation (>= 0)")->capture_default_str();
    app.add_option("--seed", seed, "noise seed")->capture_default_str();
    app.add_option("--lo", lo, "lower end of the x range")->capture_default_str();
    app.add_option("--hi", hi, "upper end of the x range")->capture_default_str();
    app.add_option("--out", path, "output CSV path")->required();
    if (auto code = parse(app, args, out, err)) return *code;

    if (n < 2 || !(sigma >= 0.0) || !(lo < hi)) {
        err << "error: require --n >= 2, --sigma >= 0 and --lo < --hi\n\n" << app.help();
        return kInvalid;
    }
    try {
        const Dataset d = generate_sinusoid(n, sigma, seed, lo, hi);
        save_dataset(d, path);
        out << fs::absolute(path).lexically_normal().string() << "\n";
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kIoError;
    }
    return kOk;
}

int cmd_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Run a recurrent expansion experiment", "rexp run"};
    std::string config_path;
    std::string out_dir;
    bool print_config = false;
    app.add_option("--config", config_path, "key=value configuration file");
    app.add_option("--out", out_dir, "output directory for run records");
    app.add_flag("--print-config", print_config,
                 "print the resolved configuration (defaults when no --config) and exit");
    if (auto code = parse(app, args, out, err)) return *code;

    ExperimentConfig config;
    try {
        const KeyValues kv = config_path.empty() ? KeyValues{} : read_key_values(config_path);
        config = config_from_key_values(kv);
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kIoError;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kInvalid;
    } catch (const ParseError& e) {
        err << "error: config " << e.what() << "\n";
        return kInvalid;
    }
    if (print_config) {
        out << format_key_values(config_to_key_values(config));
        return kOk;
    }
    if (config_path.empty() || out_dir.empty()) {
        err << "error: run needs --config and --out\n\n" << app.help();
        return kInvalid;
    }

    if (config.data.generator == "file") {
        config.data.path = fs::absolute(config.data.path).lexically_normal().string();
    }
    Dataset data;
    try {
        data = load_data(config.data);
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kIoError;
    } catch (const ParseError& e) {
        err << "error: dataset " << e.what() << "\n";
        return kIoError;
    }

    config.re.threads = threads_from_env();
    RunResult result;
    try {
        result = run(data, config.re, config.mv, config.policy, [&](const RunRecord& r) {
            err << "round " << r.round << "  mse " << fixed(r.mse) << "  aulc "
                << fixed(r.aulc_main) << (r.glitch ? "  GLITCH" : "")
                << (r.diverged ? "  DIVERGED" : "") << "\n";
        });
    } catch (const ShapeError& e) {
        err << "error: " << e.what() << "\n";
        return kInvalid;
    } catch (const ContractError& e) {
        err << "error: " << e.what() << "\n";
        return kInvalid;
    }

    KeyValues meta = config_to_key_values(config);
    meta["artifact.version"] = std::string(kArtifactVersion);
    meta["seed.scheme"] = "splitmix64(master_seed,round,slot)";
    try {
        write_run_outputs(result.records, result.baseline, meta, out_dir);
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kIoError;
    }
    if (result.halted) {
        err << "halted after round " << result.records.back().round << " (stop_on_glitch)\n";
        return kGlitchHalt;
    }
    return kOk;
}

int cmd_report(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Summarize a finished run", "rexp report"};
    std::string run_dir;
    std::string markdown;
    app.add_option("--run", run_dir, "run output directory")->required();
    app.add_option("--markdown", markdown, "also write a markdown table to this path");
    if (auto code = parse(app, args, out, err)) return *code;

    std::vector<SummaryRow> rows;
    try {
        rows = read_summary(fs::path(run_dir) / "summary.csv");
    } catch (const std::exception& e) {
        err << "error: cannot read summary: " << e.what() << "\n";
        return kIoError;
    }

    const auto best = std::min_element(rows.begin(), rows.end(),
                                       [](const auto& a, const auto& b) { return a.mse < b.mse; });
    const auto first_glitch =
        std::find_if(rows.begin(), rows.end(), [](const auto& r) { return r.glitch; });
    const auto glitch_after_min =
        std::find_if(best, rows.end(), [](const auto& r) { return r.glitch; });

    out << "rounds: " << rows.size() << "\n";
    out << "min mse: " << format_real(best->mse) << " at round " << best->round << "\n";
    out << "final mse: " << format_real(rows.back().mse) << " at round " << rows.back().round
        << "\n";
    const double a0 = rows.front().aulc_main;
    const double a1 = rows.back().aulc_main;
    out << "aulc trend: first " << format_real(a0) << " last " << format_real(a1) << " ("
        << (a1 < a0 ? "decreasing" : a1 > a0 ? "increasing" : "flat") << ")\n";
    out << "first glitch round: "
        << (first_glitch == rows.end() ? std::string("none") : std::to_string(first_glitch->round))
        << "\n";
    out << "glitch round after min: "
        << (glitch_after_min == rows.end() ? std::string("none")
                                           : std::to_string(glitch_after_min->round))
        << "\n";

    if (!markdown.empty()) {
        std::ofstream md(markdown, std::ios::binary | std::ios::trunc);
        if (!md) {
            err << "error: cannot write '" << markdown << "'\n";
            return kIoError;
        }
        md << "| round | mse | aulc_main | D | glitch |\n|---|---|---|---|---|\n";
        for (const auto& r : rows) {
            md << "| " << r.round << " | " << format_real(r.mse) << " | "
               << format_real(r.aulc_main) << " | " << r.expanded_width << " | "
               << (r.glitch ? "yes" : "") << " |\n";
        }
    }
    return kOk;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    if (args.empty()) {
        err << kUsage;
        return kInvalid;
    }
    const std::string& command = args.front();
    const std::vector<std::string> rest(args.begin() + 1, args.end());
    if (command == "gen") return cmd_gen(rest, out, err);
    if (command == "run") return cmd_run(rest, out, err);
    if (command == "report") return cmd_report(rest, out, err);
    if (command == "--help" || command == "-h" || command == "help") {
        out << kUsage;
        return kOk;
    }
    if (command == "--version") {
        out << "rexp " << kArtifactVersion << "\n";
        return kOk;
    }
    err << "error: unknown command '" << command << "'\n\n" << kUsage;
    return kInvalid;
}

}  // namespace rexp::cli
