#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "phmkit/datasource.hpp"
#include "phmkit/evaluator.hpp"
#include "phmkit/runner.hpp"
#include "phmkit/transforms.hpp"
#include "phmkit/windowing.hpp"

namespace py = pybind11;
using namespace phmkit;

namespace {

py::array_t<double> matrix_to_array(const Matrix& m) {
    py::array_t<double> out({m.rows(), m.cols()});
    auto buffer = out.mutable_unchecked<2>();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            buffer(py::ssize_t(r), py::ssize_t(c)) = m(r, c);
        }
    }
    return out;
}

Matrix array_to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) {
        throw py::value_error("expected a 2-d array");
    }
    Matrix m(std::size_t(a.shape(0)), std::size_t(a.shape(1)));
    auto buffer = a.unchecked<2>();
    for (py::ssize_t r = 0; r < a.shape(0); ++r) {
        for (py::ssize_t c = 0; c < a.shape(1); ++c) {
            m(std::size_t(r), std::size_t(c)) = buffer(r, c);
        }
    }
    return m;
}

py::dict unit_to_dict(const RawUnit& unit) {
    py::dict d;
    d["unit_id"] = unit.unit_id;
    d["x"] = matrix_to_array(unit.x);
    d["y"] = py::array_t<double>(py::ssize_t(unit.y.size()), unit.y.data());
    d["channel_names"] = unit.channel_names;
    d["metadata"] = unit.metadata;
    return d;
}

py::dict report_to_dict(const MetricReport& report) {
    py::dict d;
    d["metrics"] = report.metrics;
    d["metrics_denormalized"] = report.metrics_denormalized;
    d["per_unit"] = report.per_unit;
    d["counts"] = report.counts;
    return d;
}

WindowSpec window_spec_of(std::int64_t l_seq, std::int64_t stride, std::int64_t warm_start,
                          std::int64_t offset, std::int64_t pred_len, std::int64_t lbl_len,
                          const std::string& pad_policy) {
    WindowSpec spec;
    spec.l_seq = l_seq;
    spec.stride = stride;
    spec.warm_start = warm_start;
    spec.offset = offset;
    spec.pred_len = pred_len;
    spec.lbl_len = lbl_len;
    if (pad_policy == "replicate-edge") {
        spec.pad_policy = PadPolicy::replicate_edge;
    } else if (pad_policy == "zeros") {
        spec.pad_policy = PadPolicy::zeros;
    } else {
        throw py::value_error("pad_policy must be 'replicate-edge' or 'zeros'");
    }
    spec.check();
    return spec;
}

std::vector<ScoredPair> pairs_of(const std::vector<double>& predictions,
                                 const std::vector<double>& truths) {
    if (predictions.size() != truths.size()) {
        throw py::value_error("predictions and truths must have equal length");
    }
    std::vector<ScoredPair> pairs;
    pairs.reserve(predictions.size());
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        pairs.push_back({predictions[i], truths[i], "all"});
    }
    return pairs;
}

} // namespace

PYBIND11_MODULE(_phmkit, m) {
    m.doc() = "Leakage-safe evaluation-protocol engine for multi-unit time series";
    m.attr("__version__") = tool_version();

    py::register_exception<LeakageFault>(m, "LeakageFault");
    py::register_exception<Error>(m, "PhmkitError");

    m.def("code_fingerprint", []() { return std::string(code_fingerprint()); },
          "SHA-256 fingerprint of the library sources baked in at build time");

    // ------------------------------------------------------------------ data
    m.def(
        "generate_synthetic",
        [](std::int64_t n_units, std::int64_t t_min, std::int64_t t_max, std::int64_t channels,
           const std::string& shape, double noise_std, std::uint64_t seed,
           const std::string& task, std::int64_t class_count) {
            SyntheticSpec spec;
            spec.n_units = n_units;
            spec.t_min = t_min;
            spec.t_max = t_max;
            spec.channels = channels;
            if (shape == "linear") {
                spec.shape = DegradationShape::linear;
            } else if (shape == "exponential") {
                spec.shape = DegradationShape::exponential;
            } else if (shape == "piecewise") {
                spec.shape = DegradationShape::piecewise;
            } else {
                throw py::value_error("unknown shape '" + shape + "'");
            }
            spec.noise_std = noise_std;
            spec.seed = seed;
            if (task == "prognostics") {
                spec.task = TaskKind::prognostics;
            } else if (task == "diagnostics") {
                spec.task = TaskKind::diagnostics;
            } else {
                throw py::value_error("unknown task '" + task + "'");
            }
            spec.class_count = class_count;

            py::list units;
            for (const RawUnit& unit : generate_synthetic(spec)) {
                units.append(unit_to_dict(unit));
            }
            return units;
        },
        py::arg("n_units") = 4, py::arg("t_min") = 40, py::arg("t_max") = 60,
        py::arg("channels") = 3, py::arg("shape") = "linear", py::arg("noise_std") = 0.0,
        py::arg("seed") = 0, py::arg("task") = "prognostics", py::arg("class_count") = 3,
        "Deterministic synthetic run-to-failure units");

    m.def(
        "load_csv",
        [](const std::string& path) {
            py::list units;
            for (const RawUnit& unit : load_csv(path)) {
                units.append(unit_to_dict(unit));
            }
            return units;
        },
        py::arg("path"), "Load long-format CSV trajectories");

    m.def(
        "construct_ah_rul",
        [](const std::vector<std::vector<double>>& cycle_currents, double q_nom,
           const std::string& sign, const std::string& eol, double threshold,
           const std::vector<double>& capacity, double dt) {
            AhRulSpec spec;
            spec.q_nom = q_nom;
            spec.sample_dt = dt;
            spec.sign = sign == "negative-discharge" ? SignConvention::negative_discharge
                                                     : SignConvention::positive_discharge;
            if (eol == "threshold") {
                spec.eol = EolRule::threshold;
                spec.eol_threshold = threshold;
                spec.capacity_channel = "capacity";
            }
            return construct_ah_rul(cycle_currents, spec, capacity);
        },
        py::arg("cycle_currents"), py::arg("q_nom"), py::arg("sign") = "positive-discharge",
        py::arg("eol") = "last-cycle", py::arg("threshold") = 0.0,
        py::arg("capacity") = std::vector<double>{}, py::arg("dt") = 1.0,
        "Remaining normalized discharge throughput per cycle");

    // ------------------------------------------------------------- windowing
    m.def(
        "admissible_starts",
        [](std::int64_t t_prime, std::int64_t l_seq, std::int64_t stride,
           std::int64_t warm_start, std::int64_t offset, std::int64_t pred_len,
           std::int64_t lbl_len, const std::string& pad_policy) {
            return admissible_starts(t_prime, window_spec_of(l_seq, stride, warm_start, offset,
                                                             pred_len, lbl_len, pad_policy));
        },
        py::arg("t_prime"), py::arg("l_seq"), py::arg("stride") = 1, py::arg("warm_start") = 0,
        py::arg("offset") = 0, py::arg("pred_len") = 1, py::arg("lbl_len") = 0,
        py::arg("pad_policy") = "replicate-edge",
        "Admissible window starts on a transformed grid");

    m.def(
        "tabularize",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& window) {
            std::vector<double> flat = tabularize(array_to_matrix(window));
            return py::array_t<double>(py::ssize_t(flat.size()), flat.data());
        },
        py::arg("window"), "Time-major flattening of a window");

    m.def(
        "untabularize",
        [](const std::vector<double>& flat, std::size_t rows, std::size_t cols) {
            return matrix_to_array(untabularize(flat, rows, cols));
        },
        py::arg("flat"), py::arg("rows"), py::arg("cols"),
        "Inverse of tabularize");

    // --------------------------------------------------------------- metrics
    m.def(
        "regression_metrics",
        [](const std::vector<double>& predictions, const std::vector<double>& truths) {
            RegressionMetrics r = regression_metrics(pairs_of(predictions, truths));
            py::dict d;
            d["mae"] = r.mae;
            d["mse"] = r.mse;
            d["rmse"] = r.rmse;
            return d;
        },
        py::arg("predictions"), py::arg("truths"));

    m.def(
        "phm_score",
        [](const std::vector<double>& predictions, const std::vector<double>& truths,
           double epsilon) { return phm_score(pairs_of(predictions, truths), epsilon); },
        py::arg("predictions"), py::arg("truths"), py::arg("epsilon") = 1e-8,
        "Asymmetric percentage-error score averaged over pairs");

    m.def(
        "nasa_score",
        [](const std::vector<double>& predictions, const std::vector<double>& truths,
           double a_early, double a_late) {
            return nasa_score(pairs_of(predictions, truths), a_early, a_late);
        },
        py::arg("predictions"), py::arg("truths"), py::arg("a_early") = 13.0,
        py::arg("a_late") = 10.0);

    m.def(
        "auroc",
        [](const std::vector<double>& scores, const std::vector<std::int64_t>& labels) {
            if (scores.size() != labels.size()) {
                throw py::value_error("scores and labels must have equal length");
            }
            std::vector<ClassPair> pairs;
            for (std::size_t i = 0; i < scores.size(); ++i) {
                ClassPair p;
                p.scores = {1.0 - scores[i], scores[i]};
                p.truth = labels[i];
                pairs.push_back(std::move(p));
            }
            return classification_metrics(pairs, {0, 1}).auroc;
        },
        py::arg("scores"), py::arg("labels"),
        "Binary rank AUROC with half tie credit (positive class = 1)");

    // ------------------------------------------------------------------ runs
    m.def(
        "run",
        [](const std::string& config_json, py::object out_dir, py::object cache_dir,
           bool no_cache, py::object seed) {
            RunConfig config = parse_config(config_json);
            RunOptions options;
            if (!out_dir.is_none()) {
                options.out_dir = py::cast<std::string>(out_dir);
            }
            if (!cache_dir.is_none()) {
                options.cache_dir = py::cast<std::string>(cache_dir);
            }
            options.no_cache = no_cache;
            if (!seed.is_none()) {
                options.seed_override = py::cast<std::uint64_t>(seed);
            }
            RunResult result = execute_run(config, options);
            py::dict d;
            d["config_digest"] = result.config_digest;
            d["metric_digest"] = result.metric_digest;
            d["val"] = report_to_dict(result.val_report);
            d["test"] = report_to_dict(result.test_report);
            d["out_dir"] = result.out_dir.string();
            d["test_target_reads_before_eval"] = result.test_target_reads_before_eval;
            return d;
        },
        py::arg("config_json"), py::arg("out_dir") = py::none(),
        py::arg("cache_dir") = py::none(), py::arg("no_cache") = false,
        py::arg("seed") = py::none(),
        "Execute a full run from a JSON config string");

    m.def(
        "run_file",
        [](const std::string& config_path, py::object out_dir, py::object cache_dir,
           bool no_cache) {
            RunConfig config = parse_config_file(config_path);
            RunOptions options;
            if (!out_dir.is_none()) {
                options.out_dir = py::cast<std::string>(out_dir);
            }
            if (!cache_dir.is_none()) {
                options.cache_dir = py::cast<std::string>(cache_dir);
            }
            options.no_cache = no_cache;
            RunResult result = execute_run(config, options);
            py::dict d;
            d["config_digest"] = result.config_digest;
            d["metric_digest"] = result.metric_digest;
            d["val"] = report_to_dict(result.val_report);
            d["test"] = report_to_dict(result.test_report);
            d["out_dir"] = result.out_dir.string();
            return d;
        },
        py::arg("config_path"), py::arg("out_dir") = py::none(),
        py::arg("cache_dir") = py::none(), py::arg("no_cache") = false,
        "Execute a full run from a JSON config file");

    m.def(
        "replay",
        [](const std::string& run_dir, bool allow_code_drift) {
            ReplayResult verdict = replay(run_dir, allow_code_drift);
            py::dict d;
            d["identical"] = verdict.identical;
            d["recorded_digest"] = verdict.recorded_digest;
            d["replayed_digest"] = verdict.replayed_digest;
            return d;
        },
        py::arg("run_dir"), py::arg("allow_code_drift") = false,
        "Re-execute a recorded run and compare metric digests");

    m.def("audit", [](const std::string& run_dir) { return audit_run(run_dir); },
          py::arg("run_dir"), "Leakage-policy violations of a recorded run");
}
