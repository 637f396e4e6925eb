#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>
#include <vector>

#include "rexp/config.hpp"
#include "rexp/data_io.hpp"
#include "rexp/engine.hpp"
#include "rexp/error.hpp"
#include "rexp/imt.hpp"
#include "rexp/linalg.hpp"
#include "rexp/metrics.hpp"

namespace py = pybind11;
using rexp::Matrix;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
    if (a.ndim() == 1) {
        return Matrix(static_cast<std::size_t>(a.shape(0)), 1,
                      std::vector<double>(a.data(), a.data() + a.size()));
    }
    if (a.ndim() != 2) throw rexp::ShapeError("expected a 1-D or 2-D array");
    return Matrix(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                  std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Matrix& m) {
    Array out({m.rows(), m.cols()});
    std::copy(m.data().begin(), m.data().end(), out.mutable_data());
    return out;
}

py::dict record_dict(const rexp::RunRecord& r) {
    py::dict d;
    d["round"] = r.round;
    d["mse"] = r.mse;
    d["aulc_main"] = r.aulc_main;
    d["member_aulcs"] = r.member_aulcs;
    d["selected"] = r.selected;
    d["retained_dims"] = r.retained_dims;
    d["weights"] = r.weights;
    d["expanded_width"] = r.expanded_width;
    d["glitch"] = r.glitch;
    d["diverged"] = r.diverged;
    d["wall_ms"] = r.wall_ms;
    d["loss_curve"] = r.loss_curve;
    return d;
}

py::dict run_experiment(const rexp::KeyValues& settings, const std::optional<std::string>& out_dir) {
    rexp::ExperimentConfig config = rexp::config_from_key_values(settings);
    const rexp::Dataset data = rexp::load_data(config.data);
    rexp::RunResult result;
    {
        py::gil_scoped_release release;
        result = rexp::run(data, config.re, config.mv, config.policy);
    }
    if (out_dir) {
        rexp::KeyValues meta = rexp::config_to_key_values(config);
        meta["artifact.version"] = std::string(rexp::kArtifactVersion);
        meta["seed.scheme"] = "splitmix64(master_seed,round,slot)";
        rexp::write_run_outputs(result.records, result.baseline, meta, *out_dir);
    }
    py::list records;
    for (const auto& r : result.records) records.append(record_dict(r));
    py::dict baseline;
    baseline["mse"] = result.baseline.mse;
    baseline["aulc"] = result.baseline.aulc;
    baseline["diverged"] = result.baseline.diverged;
    py::dict out;
    out["records"] = records;
    out["baseline"] = baseline;
    out["halted"] = result.halted;
    out["config"] = rexp::config_to_key_values(config);
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Recurrent expansion experiments: data, metrics, PCA aggregation and run engines.";
    m.attr("__version__") = std::string(rexp::kArtifactVersion);

    py::register_exception<rexp::IoError>(m, "IoError", PyExc_OSError);
    py::register_exception<rexp::ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<rexp::NumericError>(m, "NumericError", PyExc_ArithmeticError);

    m.def(
        "generate_sinusoid",
        [](std::size_t n, double sigma, std::uint64_t seed, double lo, double hi) {
            const auto d = rexp::generate_sinusoid(n, sigma, seed, lo, hi);
            return py::make_tuple(to_array(d.x), to_array(d.y));
        },
        py::arg("n") = 100, py::arg("sigma") = 0.1, py::arg("seed") = 7, py::arg("lo") = 0.0,
        py::arg("hi") = 1.0, "Evenly spaced x on [lo, hi] and y = sin(2*pi*x) + noise, as (x, y) columns.");

    m.def("aulc", [](const std::vector<double>& curve) { return rexp::aulc(curve); }, py::arg("loss_curve"),
          "Area under a loss curve with unit trapezoid steps, divided by the number of steps.");

    m.def("mse", [](const Array& p, const Array& t) { return rexp::mse(to_matrix(p), to_matrix(t)); },
          py::arg("predictions"), py::arg("targets"));

    m.def(
        "detect_glitch",
        [](const std::vector<double>& series, double factor, std::size_t window) {
            const auto r = rexp::detect_glitch(series, {factor, window});
            py::dict d;
            d["flagged"] = r.flagged;
            d["first_flag_index"] = r.first_flag_index;
            d["running_min"] = r.running_min;
            d["flags"] = r.flags;
            return d;
        },
        py::arg("series"), py::arg("factor") = 2.0, py::arg("window") = 3);

    m.def(
        "eig_sym",
        [](const Array& s) {
            const auto e = rexp::eig_sym(to_matrix(s));
            return py::make_tuple(e.values, to_array(e.vectors));
        },
        py::arg("matrix"), "Eigenvalues (descending) and eigenvector columns of a symmetric PSD matrix.");

    m.def(
        "fit_pca",
        [](const Array& features, double theta, std::optional<std::size_t> cap) {
            const Matrix f = to_matrix(features);
            const auto pca = rexp::fit_pca(f, theta, cap);
            py::dict d;
            d["mean"] = pca.mean;
            d["components"] = to_array(pca.components);
            d["explained_ratios"] = pca.explained_ratios;
            d["retained"] = pca.retained;
            d["degenerate"] = pca.degenerate;
            d["scores"] = to_array(rexp::apply_pca(pca, f));
            return d;
        },
        py::arg("features"), py::arg("theta") = 0.2, py::arg("cap") = std::nullopt);

    m.def(
        "select_subset",
        [](const std::vector<double>& aulcs, std::size_t budget, const std::string& criterion,
           std::size_t round) {
            rexp::MultiverseSnapshot s;
            s.aulcs = aulcs;
            s.bundles.resize(aulcs.size());
            return rexp::select_subset(s, {budget, rexp::parse_criterion(criterion)}, round);
        },
        py::arg("aulcs"), py::arg("budget"), py::arg("criterion"), py::arg("round") = 1);

    m.def("default_config", [] { return rexp::config_to_key_values(rexp::default_config()); },
          "Every configuration key with its default value.");

    m.def("run", &run_experiment, py::arg("settings") = rexp::KeyValues{},
          py::arg("out_dir") = std::nullopt,
          "Run an experiment from key=value settings layered over the defaults. When out_dir is "
          "given the usual run files are written there too.");
}
