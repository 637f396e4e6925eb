#include "rexp/data_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "rexp/error.hpp"
#include "rexp/rng.hpp"

namespace rexp {

namespace fs = std::filesystem;

void Dataset::validate() const {
    if (x.rows() == 0 || x.rows() != y.rows()) {
        throw ShapeError("dataset: x " + x.shape() + " and y " + y.shape() +
                         " must share a nonzero row count");
    }
}

Dataset generate_sinusoid(std::size_t n, double sigma, std::uint64_t seed, double lo, double hi) {
    if (n < 2) throw ContractError("generate_sinusoid: n must be >= 2");
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw ContractError("generate_sinusoid: range must satisfy lo < hi");
    }
    SeededRng rng(seed);
    const std::vector<double> noise = gaussian(rng, n, 0.0, sigma);
    Dataset d{Matrix(n, 1), Matrix(n, 1), {"sinusoid", n, sigma, seed, lo, hi, ""}};
    const double step = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = i + 1 == n ? hi : lo + static_cast<double>(i) * step;
        d.x(i, 0) = xi;
        d.y(i, 0) = std::sin(2.0 * std::numbers::pi * xi) + noise[i];
    }
    return d;
}

std::string format_real(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_real(std::string_view text) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (!text.empty() && *first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last || !std::isfinite(v)) {
        throw ContractError("not a finite number: '" + std::string(text) + "'");
    }
    return v;
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::string_view chomp(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

std::string dataset_header(std::size_t d) {
    if (d == 1) return "x,y";
    std::string h;
    for (std::size_t c = 0; c < d; ++c) h += "x" + std::to_string(c) + ",";
    return h + "y";
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

template <class T>
std::string join(const std::vector<T>& values, char sep) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += sep;
        if constexpr (std::is_floating_point_v<T>) {
            out += format_real(values[i]);
        } else {
            out += std::to_string(values[i]);
        }
    }
    return out;
}

}  // namespace

void save_dataset(const Dataset& data, const fs::path& path) {
    data.validate();
    std::string text = dataset_header(data.x.cols()) + "\n";
    for (std::size_t r = 0; r < data.size(); ++r) {
        for (double v : data.x.row(r)) text += format_real(v) + ",";
        text += format_real(data.y(r, 0)) + "\n";
    }
    write_text(path, text);
}

Dataset load_dataset(const fs::path& path) {
    const std::string text = read_text(path);
    std::istringstream in(text);
    std::string raw;
    if (!std::getline(in, raw)) throw ParseError(1, "missing header");
    const std::string_view header = chomp(raw);
    const std::size_t fields = split(header, ',').size();
    if (fields < 2 || header != dataset_header(fields - 1)) {
        throw ParseError(1, "missing header: expected '" + dataset_header(1) + "'");
    }
    const std::size_t d = fields - 1;
    std::vector<double> xs, ys;
    std::size_t line_no = 1;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string_view line = chomp(raw);
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != fields) {
            throw ParseError(line_no, "expected " + std::to_string(fields) + " fields, got " +
                                          std::to_string(cells.size()));
        }
        for (std::size_t c = 0; c < fields; ++c) {
            double v;
            try {
                v = parse_real(cells[c]);
            } catch (const ContractError&) {
                throw ParseError(line_no, "non-numeric cell '" + std::string(cells[c]) + "'");
            }
            (c + 1 == fields ? ys : xs).push_back(v);
        }
    }
    if (ys.empty()) throw ParseError(line_no, "no data rows");
    const std::size_t n = ys.size();
    Provenance prov;
    prov.generator = "file";
    prov.n = n;
    prov.path = path.string();
    return {Matrix(n, d, std::move(xs)), Matrix(n, 1, std::move(ys)), prov};
}

std::string format_key_values(const KeyValues& kv) {
    std::string out;
    for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
    return out;
}

KeyValues parse_key_values(std::string_view text) {
    KeyValues kv;
    std::size_t line_no = 0;
    for (std::string_view line : split(text, '\n')) {
        ++line_no;
        line = chomp(line);
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string_view::npos || line[first] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(line_no, "expected key=value");
        auto trim = [](std::string_view s) {
            const auto b = s.find_first_not_of(" \t");
            if (b == std::string_view::npos) return std::string_view{};
            const auto e = s.find_last_not_of(" \t");
            return s.substr(b, e - b + 1);
        };
        const std::string key(trim(line.substr(0, eq)));
        if (key.empty()) throw ParseError(line_no, "empty key");
        if (kv.contains(key)) throw ParseError(line_no, "duplicate key '" + key + "'");
        kv.emplace(key, std::string(trim(line.substr(eq + 1))));
    }
    return kv;
}

KeyValues read_key_values(const fs::path& path) {
    return parse_key_values(read_text(path));
}

std::string summary_csv(const std::vector<RunRecord>& records) {
    const std::size_t k = records.empty() ? 0 : records.front().member_aulcs.size();
    std::string text = "round,mse,aulc_main,D,glitch,selected_ids";
    for (std::size_t j = 0; j < k; ++j) text += ",member_aulc_" + std::to_string(j);
    text += ",retained_dims,weights,diverged\n";
    for (const auto& r : records) {
        text += std::to_string(r.round) + "," + format_real(r.mse) + "," +
                format_real(r.aulc_main) + "," + std::to_string(r.expanded_width) + "," +
                (r.glitch ? "1" : "0") + "," + join(r.selected, ';');
        for (double a : r.member_aulcs) text += "," + format_real(a);
        text += "," + join(r.retained_dims, ';') + "," + join(r.weights, ';') + "," +
                (r.diverged ? "1" : "0") + "\n";
    }
    return text;
}

std::vector<fs::path> write_run_outputs(const std::vector<RunRecord>& records,
                                        const Baseline& baseline, const KeyValues& meta,
                                        const fs::path& out_dir) {
    if (records.empty()) throw ContractError("write_run_outputs: no records");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir)) {
        throw IoError("cannot create output directory '" + out_dir.string() + "'");
    }
    std::vector<fs::path> manifest;
    auto emit = [&](const std::string& name, const std::string& text) {
        const fs::path p = out_dir / name;
        write_text(p, text);
        manifest.push_back(p);
    };

    emit("summary.csv", summary_csv(records));
    for (const auto& r : records) {
        std::string text = "epoch,loss\n";
        for (std::size_t t = 0; t < r.loss_curve.size(); ++t)
            text += std::to_string(t) + "," + format_real(r.loss_curve[t]) + "\n";
        emit("loss_curve_round_" + std::to_string(r.round) + ".csv", text);
    }
    std::string base = "member,mse,aulc,diverged\n";
    for (std::size_t j = 0; j < baseline.mse.size(); ++j) {
        base += std::to_string(j) + "," + format_real(baseline.mse[j]) + "," +
                format_real(baseline.aulc[j]) + "," +
                (j < baseline.diverged.size() && baseline.diverged[j] ? "1" : "0") + "\n";
    }
    emit("baseline.csv", base);
    std::string timing = "round,wall_ms\n";
    for (const auto& r : records)
        timing += std::to_string(r.round) + "," + format_real(r.wall_ms) + "\n";
    emit("timing.csv", timing);
    emit("run_meta", format_key_values(meta));
    return manifest;
}

std::vector<SummaryRow> read_summary(const fs::path& path) {
    const std::string text = read_text(path);
    const auto lines = split(text, '\n');
    if (lines.empty() || chomp(lines[0]).empty()) throw ParseError(1, "missing header");
    const auto header = split(chomp(lines[0]), ',');
    auto column = [&](std::string_view name) -> std::size_t {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw ParseError(1, "summary header lacks column '" + std::string(name) + "'");
    };
    const std::size_t c_round = column("round"), c_mse = column("mse"),
                      c_aulc = column("aulc_main"), c_d = column("D"), c_glitch = column("glitch");
    std::vector<SummaryRow> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::string_view line = chomp(lines[i]);
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != header.size()) {
            throw ParseError(i + 1, "expected " + std::to_string(header.size()) + " fields");
        }
        try {
            SummaryRow row;
            row.round = static_cast<std::size_t>(parse_real(cells[c_round]));
            row.mse = parse_real(cells[c_mse]);
            row.aulc_main = parse_real(cells[c_aulc]);
            row.expanded_width = static_cast<std::size_t>(parse_real(cells[c_d]));
            row.glitch = cells[c_glitch] == "1";
            rows.push_back(row);
        } catch (const ContractError& e) {
            throw ParseError(i + 1, e.what());
        }
    }
    if (rows.empty()) throw ParseError(lines.size(), "no data rows");
    return rows;
}

}  // namespace rexp
