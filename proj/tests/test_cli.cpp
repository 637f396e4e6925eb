#include <doctest.h>

#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "rexp/cli.hpp"
#include "rexp/config.hpp"
#include "rexp/data_io.hpp"
#include "rexp/error.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = rexp::cli::run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

// A config small enough to run in well under a second.
std::string tiny_config(const fs::path& data, const std::string& extra = "") {
    return "mode=re\nrounds=1\nmodel.hidden=8\ntrain.epochs=20\ndata.generator=file\ndata.path=" +
           data.string() + "\n" + extra;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("gen writes the requested dataset and prints its absolute path") {
    const auto dir = testutil::scratch_dir("cli_gen");
    const auto r = cli({"gen", "--n", "100", "--sigma", "0.1", "--seed", "7", "--out", (dir / "d.csv").string()});
    CHECK(r.code == 0);
    CHECK(r.out == fs::absolute(dir / "d.csv").lexically_normal().string() + "\n");
    const auto d = rexp::load_dataset(dir / "d.csv");
    CHECK(d.size() == 100);
    const auto mem = rexp::generate_sinusoid(100, 0.1, 7);
    CHECK(d.x == mem.x);
    CHECK(d.y == mem.y);
}

TEST_CASE("gen rejects bad values with usage and exit 2") {
    const auto dir = testutil::scratch_dir("cli_gen_bad");
    for (const auto& args : std::vector<std::vector<std::string>>{
             {"gen", "--n", "1", "--out", (dir / "d.csv").string()},
             {"gen", "--sigma", "-1", "--out", (dir / "d.csv").string()},
             {"gen", "--lo", "1", "--hi", "0", "--out", (dir / "d.csv").string()},
             {"gen", "--n", "ten", "--out", (dir / "d.csv").string()},
             {"gen", "--n", "10"},
             {"gen", "--bogus", "--out", (dir / "d.csv").string()}}) {
        const auto r = cli(args);
        CHECK(r.code == 2);
        CHECK(r.err.find("--out") != std::string::npos);
    }
    CHECK_FALSE(fs::exists(dir / "d.csv"));
}

TEST_CASE("gen reports unwritable output with exit 1") {
    const auto dir = testutil::scratch_dir("cli_gen_io");
    CHECK(cli({"gen", "--out", (dir / "missing" / "d.csv").string()}).code == 1);
}

TEST_CASE("top level usage, version and unknown commands") {
    CHECK(cli({}).code == 2);
    const auto help = cli({"--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("report") != std::string::npos);
    CHECK(cli({"--version"}).out == "rexp " + std::string(rexp::kArtifactVersion) + "\n");
    CHECK(cli({"frobnicate"}).code == 2);
    CHECK(cli({"run", "--help"}).code == 0);
}

TEST_CASE("smallest run writes one summary row and leaves the dataset untouched") {
    const auto dir = testutil::scratch_dir("cli_run_small");
    REQUIRE(cli({"gen", "--n", "12", "--out", (dir / "d.csv").string()}).code == 0);
    const std::string before = testutil::slurp(dir / "d.csv");
    testutil::spit(dir / "c.cfg", tiny_config(dir / "d.csv"));
    const auto r = cli({"run", "--config", (dir / "c.cfg").string(), "--out", (dir / "out").string()});
    CHECK(r.code == 0);
    CHECK(r.err.find("round 1") != std::string::npos);
    CHECK(rexp::read_summary(dir / "out" / "summary.csv").size() == 1);
    CHECK(testutil::slurp(dir / "d.csv") == before);

    const auto meta = rexp::read_key_values(dir / "out" / "run_meta");
    CHECK(meta.at("artifact.version") == rexp::kArtifactVersion);
    CHECK(meta.at("mode") == "re");
    CHECK(meta.at("data.path") == fs::absolute(dir / "d.csv").lexically_normal().string());
}

TEST_CASE("run_meta alone replays the run") {
    const auto dir = testutil::scratch_dir("cli_replay");
    testutil::spit(dir / "c.cfg",
                   "mode=sc-hmvre\nrounds=3\ntrain.epochs=15\ndata.n=16\nmaster_seed=3\n"
                   "multiverse.members=mlp-tanh:small,rbf:small,rff-linear:small:0.05\n"
                   "selection.criterion=lowest-aulc\nselection.budget=2\naggregator.weighting=softmax-neg-aulc\n");
    REQUIRE(cli({"run", "--config", (dir / "c.cfg").string(), "--out", (dir / "a").string()}).code == 0);
    REQUIRE(cli({"run", "--config", (dir / "a" / "run_meta").string(), "--out", (dir / "b").string()}).code == 0);
    CHECK(testutil::slurp(dir / "a" / "summary.csv") == testutil::slurp(dir / "b" / "summary.csv"));
    CHECK(testutil::slurp(dir / "a" / "run_meta") == testutil::slurp(dir / "b" / "run_meta"));
}

TEST_CASE("invalid configs exit 2 naming every problem") {
    const auto dir = testutil::scratch_dir("cli_invalid");
    testutil::spit(dir / "mixed.cfg", "mode=mvre\nmultiverse.members=mlp-tanh:small,rbf:small\n");
    const auto mixed = cli({"run", "--config", (dir / "mixed.cfg").string(), "--out", (dir / "o").string()});
    CHECK(mixed.code == 2);
    CHECK(mixed.err.find("multiverse.members") != std::string::npos);
    CHECK(mixed.err.find("family") != std::string::npos);

    testutil::spit(dir / "many.cfg", "rounds=0\ncolour=blue\naggregator.theta=1.5\ntrain.optimizer=sgd\n");
    const auto many = cli({"run", "--config", (dir / "many.cfg").string(), "--out", (dir / "o").string()});
    CHECK(many.code == 2);
    for (const char* key : {"rounds", "colour: unknown key", "aggregator.theta", "train.optimizer"})
        CHECK(many.err.find(key) != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "o"));

    testutil::spit(dir / "dup.cfg", "rounds=1\nrounds=2\n");
    CHECK(cli({"run", "--config", (dir / "dup.cfg").string(), "--out", (dir / "o").string()}).code == 2);
    CHECK(cli({"run", "--out", (dir / "o").string()}).code == 2);
}

TEST_CASE("missing config or dataset exits 1") {
    const auto dir = testutil::scratch_dir("cli_missing");
    CHECK(cli({"run", "--config", (dir / "nope.cfg").string(), "--out", (dir / "o").string()}).code == 1);
    testutil::spit(dir / "c.cfg", tiny_config(dir / "absent.csv"));
    CHECK(cli({"run", "--config", (dir / "c.cfg").string(), "--out", (dir / "o").string()}).code == 1);
}

TEST_CASE("divergence with stop_on_glitch halts with exit 3") {
    const auto dir = testutil::scratch_dir("cli_halt");
    testutil::spit(dir / "c.cfg",
                   "rounds=3\nstop_on_glitch=true\nmodel.family=mlp-relu\nmodel.hidden=32\n"
                   "train.learning_rate=50\ntrain.epochs=20\ndata.n=20\n");
    const auto r = cli({"run", "--config", (dir / "c.cfg").string(), "--out", (dir / "o").string()});
    CHECK(r.code == 3);
    CHECK(r.err.find("DIVERGED") != std::string::npos);
    CHECK(rexp::read_summary(dir / "o" / "summary.csv").size() == 1);
}

TEST_CASE("print-config shows the resolved configuration") {
    const auto r = cli({"run", "--print-config"});
    CHECK(r.code == 0);
    CHECK(rexp::parse_key_values(r.out) == rexp::config_to_key_values(rexp::default_config()));
    CHECK(r.out.find("train.learning_rate=0.1\n") != std::string::npos);
    CHECK(r.out.find("aggregator.theta=0.2\n") != std::string::npos);
    CHECK(r.out.find("rounds=100\n") != std::string::npos);

    const auto dir = testutil::scratch_dir("cli_print");
    testutil::spit(dir / "c.cfg", "rounds=4\n");
    const auto custom = cli({"run", "--config", (dir / "c.cfg").string(), "--print-config"});
    CHECK(custom.out.find("rounds=4\n") != std::string::npos);
}

TEST_CASE("documented defaults table matches print-config") {
    const std::string readme = testutil::slurp(fs::path(REXP_SOURCE_DIR) / "README.md");
    const auto start = readme.find("## Configuration defaults");
    REQUIRE(start != std::string::npos);
    const std::string section = readme.substr(start, readme.find("\n## ", start + 1) - start);
    const std::regex row(R"(\|\s*`([a-z_.]+)`\s*\|\s*`([^`]*)`\s*\|)");
    rexp::KeyValues documented;
    for (auto it = std::sregex_iterator(section.begin(), section.end(), row); it != std::sregex_iterator(); ++it)
        documented[(*it)[1]] = (*it)[2];
    CHECK(documented == rexp::config_to_key_values(rexp::default_config()));
}

TEST_CASE("report finds the minimum and the glitch rounds") {
    const auto dir = testutil::scratch_dir("cli_report");
    testutil::spit(dir / "summary.csv",
                   "round,mse,aulc_main,D,glitch,selected_ids\n"
                   "1,0.2,0.5,3,0,0\n2,0.05,0.4,3,0,0\n3,0.01,0.3,4,0,0\n4,0.04,0.35,4,1,0\n");
    const auto r = cli({"report", "--run", dir.string(), "--markdown", (dir / "t.md").string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("min mse: 0.01 at round 3\n") != std::string::npos);
    CHECK(r.out.find("final mse: 0.04 at round 4\n") != std::string::npos);
    CHECK(r.out.find("aulc trend: first 0.5 last 0.35 (decreasing)\n") != std::string::npos);
    CHECK(r.out.find("glitch round after min: 4\n") != std::string::npos);
    const std::string md = testutil::slurp(dir / "t.md");
    CHECK(md.find("| 3 | 0.01 | 0.3 | 4 |  |") != std::string::npos);
}

TEST_CASE("report on an empty or corrupt run directory exits 1") {
    const auto dir = testutil::scratch_dir("cli_report_bad");
    CHECK(cli({"report", "--run", dir.string()}).code == 1);
    testutil::spit(dir / "summary.csv", "round,mse\n1,zero\n");
    CHECK(cli({"report", "--run", dir.string()}).code == 1);
    CHECK(cli({"report"}).code == 2);
}

}
