#include <fstream>
#include <set>

#include "phmkit/runner.hpp"

namespace phmkit {

const char* tool_version() { return "0.1.0"; }

namespace {

using nlohmann::json;

/// Wrapper enforcing the strict schema: every key must be consumed, types
/// must match, and error messages carry the config path.
class StrictObject {
public:
    StrictObject(const json& value, std::string path) : value_(value), path_(std::move(path)) {
        if (!value.is_object()) {
            throw SchemaError(path_ + ": expected an object");
        }
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return value_.contains(key) && !value_.at(key).is_null();
    }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return value_.at(key);
    }

    template <typename T>
    T get(const std::string& key, T fallback) {
        seen_.insert(key);
        if (!value_.contains(key) || value_.at(key).is_null()) {
            return fallback;
        }
        return convert<T>(key);
    }

    template <typename T>
    T require(const std::string& key) {
        seen_.insert(key);
        if (!value_.contains(key) || value_.at(key).is_null()) {
            throw SchemaError(path_ + "." + key + ": required key is missing");
        }
        return convert<T>(key);
    }

    /// Rejects unknown keys; call after all gets.
    void done() const {
        for (const auto& [key, ignored] : value_.items()) {
            if (!seen_.count(key)) {
                throw SchemaError(path_ + "." + key + ": unknown key");
            }
        }
    }

    const std::string& path() const { return path_; }

private:
    template <typename T>
    T convert(const std::string& key) {
        try {
            return value_.at(key).get<T>();
        } catch (const json::exception&) {
            throw SchemaError(path_ + "." + key + ": type mismatch");
        }
    }

    const json& value_;
    std::string path_;
    std::set<std::string> seen_;
};

json parse_datasource(const json& block, RunConfig& config) {
    StrictObject obj(block, "datasource");
    std::string kind = obj.get<std::string>("kind", "synthetic");
    json resolved;
    resolved["kind"] = kind;
    if (kind == "synthetic") {
        config.source_kind = SourceKind::synthetic;
        SyntheticSpec& spec = config.synthetic;
        spec.n_units = obj.get<std::int64_t>("n_units", 4);
        spec.t_min = obj.get<std::int64_t>("t_min", 40);
        spec.t_max = obj.get<std::int64_t>("t_max", 60);
        spec.channels = obj.get<std::int64_t>("channels", 3);
        std::string shape = obj.get<std::string>("shape", "linear");
        if (shape == "linear") {
            spec.shape = DegradationShape::linear;
        } else if (shape == "exponential") {
            spec.shape = DegradationShape::exponential;
        } else if (shape == "piecewise") {
            spec.shape = DegradationShape::piecewise;
        } else {
            throw SchemaError("datasource.shape: unknown shape '" + shape + "'");
        }
        spec.noise_std = obj.get<double>("noise_std", 0.0);
        std::string task = obj.get<std::string>("task", "prognostics");
        if (task == "prognostics") {
            spec.task = TaskKind::prognostics;
        } else if (task == "diagnostics") {
            spec.task = TaskKind::diagnostics;
        } else {
            throw SchemaError("datasource.task: unknown task '" + task + "'");
        }
        spec.class_count = obj.get<std::int64_t>("class_count", 3);
        spec.check();
        resolved["n_units"] = spec.n_units;
        resolved["t_min"] = spec.t_min;
        resolved["t_max"] = spec.t_max;
        resolved["channels"] = spec.channels;
        resolved["shape"] = shape;
        resolved["noise_std"] = spec.noise_std;
        resolved["task"] = task;
        resolved["class_count"] = spec.class_count;
    } else if (kind == "csv") {
        config.source_kind = SourceKind::csv;
        config.csv_path = obj.require<std::string>("path");
        config.csv_schema.unit_col = obj.get<std::string>("unit_col", "unit_id");
        config.csv_schema.time_col = obj.get<std::string>("time_col", "t");
        config.csv_schema.feature_cols =
            obj.get<std::vector<std::string>>("feature_cols", {});
        config.csv_schema.target_col = obj.get<std::string>("target_col", "y");
        resolved["path"] = config.csv_path.string();
        resolved["unit_col"] = config.csv_schema.unit_col;
        resolved["time_col"] = config.csv_schema.time_col;
        resolved["feature_cols"] = config.csv_schema.feature_cols;
        resolved["target_col"] = config.csv_schema.target_col;
    } else {
        throw SchemaError("datasource.kind: unknown kind '" + kind + "'");
    }
    obj.done();
    return resolved;
}

json parse_split(const json& block, RunConfig& config) {
    StrictObject obj(block, "split");
    std::string mode = obj.get<std::string>("mode", "inter");
    json resolved;
    resolved["mode"] = mode;

    json units_resolved = {{"train", json::array()}, {"val", json::array()},
                           {"test", json::array()}};
    json boundaries_resolved = {{"train_frac", 0.6}, {"val_frac", 0.8}};

    // Both sub-blocks are part of the resolved form, so both are legal in
    // either mode; only the one matching the mode is consulted.
    if (obj.has("units")) {
        StrictObject units(obj.raw("units"), "split.units");
        for (Split s : kAllSplits) {
            auto ids = units.get<std::vector<std::string>>(split_name(s), {});
            for (const auto& id : ids) {
                if (config.split_units.count(id)) {
                    throw SchemaError("split.units: unit '" + id +
                                      "' assigned to more than one split");
                }
                config.split_units[id] = s;
            }
            units_resolved[split_name(s)] = ids;
        }
        units.done();
    }
    if (obj.has("boundaries")) {
        StrictObject boundaries(obj.raw("boundaries"), "split.boundaries");
        config.train_frac = boundaries.get<double>("train_frac", 0.6);
        config.val_frac = boundaries.get<double>("val_frac", 0.8);
        boundaries.done();
        boundaries_resolved["train_frac"] = config.train_frac;
        boundaries_resolved["val_frac"] = config.val_frac;
    }

    if (mode == "inter") {
        config.split_mode = SplitMode::inter_unit;
        if (config.split_units.empty()) {
            throw SchemaError("split.units: required for inter-unit splits");
        }
    } else if (mode == "intra") {
        config.split_mode = SplitMode::intra_unit;
        config.split_units.clear();
        if (!(config.train_frac >= 0.0 && config.train_frac <= config.val_frac &&
              config.val_frac <= 1.0)) {
            throw SchemaError("split.boundaries: need 0 <= train_frac <= val_frac <= 1");
        }
    } else {
        throw SchemaError("split.mode: unknown mode '" + mode + "'");
    }
    obj.done();

    resolved["units"] = units_resolved;
    resolved["boundaries"] = boundaries_resolved;
    return resolved;
}

json parse_transform_stage(const json& block, std::size_t index, RunConfig& config) {
    std::string path = "transforms[" + std::to_string(index) + "]";
    StrictObject obj(block, path);

    TransformStageSpec spec;
    spec.stage_name = obj.get<std::string>("name", "stage" + std::to_string(index + 1));
    spec.kind = transform_kind_from_name(obj.require<std::string>("kind"));
    spec.apply_to = obj.get<std::vector<std::string>>("apply_to", {"features"});
    spec.assign_to = obj.get<std::string>("assign_to", "");
    spec.cache_point = obj.get<bool>("cache_point", false);

    std::string fit_scope = obj.get<std::string>("fit_scope", "pooled");
    if (fit_scope == "pooled") {
        spec.fit_scope = FitScope::pooled;
    } else if (fit_scope == "per_unit") {
        spec.fit_scope = FitScope::per_unit;
    } else {
        throw SchemaError(path + ".fit_scope: unknown scope '" + fit_scope + "'");
    }

    spec.align = align_rule_from_name(obj.get<std::string>("align", "last"));

    json resolved;
    resolved["name"] = spec.stage_name;
    resolved["kind"] = transform_kind_name(spec.kind);
    resolved["apply_to"] = spec.apply_to;
    resolved["assign_to"] = spec.assign_to;
    resolved["cache_point"] = spec.cache_point;
    resolved["fit_scope"] = fit_scope;
    resolved["align"] = align_rule_name(spec.align);

    // The fit_on field is descriptive: it must say train exactly when the
    // kind is stateful.
    std::string default_fit_on;
    switch (spec.kind) {
    case TransformKind::repair: {
        std::string mode = obj.get<std::string>("mode", "zero");
        if (mode == "zero") {
            spec.repair_mode = RepairMode::zero;
        } else if (mode == "mean") {
            spec.repair_mode = RepairMode::mean;
        } else if (mode == "locf") {
            spec.repair_mode = RepairMode::locf;
        } else if (mode == "linear") {
            spec.repair_mode = RepairMode::linear;
        } else {
            throw SchemaError(path + ".mode: unknown repair mode '" + mode + "'");
        }
        resolved["mode"] = mode;
        break;
    }
    default:
        break;
    }
    default_fit_on = spec.stateful() ? "train" : "none";
    std::string fit_on = obj.get<std::string>("fit_on", default_fit_on);
    if (spec.stateful() && fit_on != "train") {
        throw SchemaError(path + ".fit_on: stateful kind '" +
                          transform_kind_name(spec.kind) + "' must be fitted on train");
    }
    if (!spec.stateful() && fit_on != "none") {
        throw SchemaError(path + ".fit_on: stateless kind '" +
                          transform_kind_name(spec.kind) + "' takes no fitting split");
    }
    resolved["fit_on"] = fit_on;

    switch (spec.kind) {
    case TransformKind::constant_scale:
        spec.constant = obj.require<double>("constant");
        resolved["constant"] = spec.constant;
        break;
    case TransformKind::windowed_aggregation: {
        spec.agg_rule = agg_rule_from_name(obj.get<std::string>("rule", "mean"));
        spec.window = obj.require<std::int64_t>("window");
        spec.hop = obj.get<std::int64_t>("hop", spec.window);
        resolved["rule"] = obj.get<std::string>("rule", "mean");
        resolved["window"] = spec.window;
        resolved["hop"] = spec.hop;
        break;
    }
    case TransformKind::stft: {
        spec.window = obj.require<std::int64_t>("window");
        spec.hop = obj.get<std::int64_t>("hop", spec.window);
        spec.n_fft = obj.get<std::int64_t>("n_fft", spec.window);
        std::string post = obj.get<std::string>("post_map", "magnitude");
        if (post == "magnitude") {
            spec.post_map = StftPostMap::magnitude;
        } else if (post == "power") {
            spec.post_map = StftPostMap::power;
        } else if (post == "log_power") {
            spec.post_map = StftPostMap::log_power;
        } else {
            throw SchemaError(path + ".post_map: unknown post map '" + post + "'");
        }
        resolved["window"] = spec.window;
        resolved["hop"] = spec.hop;
        resolved["n_fft"] = spec.n_fft;
        resolved["post_map"] = post;
        break;
    }
    case TransformKind::segment_stats: {
        std::string domain = obj.get<std::string>("domain", "time");
        if (domain == "time") {
            spec.domain = StatsDomain::time;
        } else if (domain == "frequency") {
            spec.domain = StatsDomain::frequency;
        } else {
            throw SchemaError(path + ".domain: unknown domain '" + domain + "'");
        }
        auto stats = obj.get<std::vector<std::string>>("stats", {"mean", "std"});
        for (const auto& s : stats) {
            spec.stats.push_back(stat_from_name(s));
        }
        resolved["domain"] = domain;
        resolved["stats"] = stats;
        break;
    }
    case TransformKind::subsample:
        spec.subsample_rate = obj.require<std::int64_t>("rate");
        resolved["rate"] = spec.subsample_rate;
        break;
    case TransformKind::pad_to_length:
        spec.pad_length = obj.require<std::int64_t>("length");
        spec.pad_value = obj.get<double>("value", 0.0);
        resolved["length"] = spec.pad_length;
        resolved["value"] = spec.pad_value;
        break;
    case TransformKind::corrupt: {
        std::string mode = obj.get<std::string>("mode", "point");
        if (mode == "point") {
            spec.corrupt_mode = CorruptMode::point;
        } else if (mode == "block") {
            spec.corrupt_mode = CorruptMode::block;
        } else {
            throw SchemaError(path + ".mode: unknown corruption mode '" + mode + "'");
        }
        spec.corrupt_rate = obj.require<double>("rate");
        spec.block_min = obj.get<std::int64_t>("block_min", 1);
        spec.block_max = obj.get<std::int64_t>("block_max", spec.block_min);
        spec.seed = obj.get<std::uint64_t>("seed", 0);
        resolved["mode"] = mode;
        resolved["rate"] = spec.corrupt_rate;
        resolved["block_min"] = spec.block_min;
        resolved["block_max"] = spec.block_max;
        resolved["seed"] = spec.seed;
        break;
    }
    case TransformKind::health_index: {
        json lifetimes = json::object();
        if (obj.has("lifetimes")) {
            for (const auto& [unit, value] : obj.raw("lifetimes").items()) {
                if (!value.is_number()) {
                    throw SchemaError(path + ".lifetimes." + unit + ": expected a number");
                }
                spec.lifetimes[unit] = value.get<double>();
                lifetimes[unit] = value.get<double>();
            }
        }
        resolved["lifetimes"] = lifetimes;
        break;
    }
    default:
        break;
    }

    obj.done();
    spec.check();
    config.transforms.push_back(std::move(spec));
    return resolved;
}

json parse_window(const json& block, RunConfig& config) {
    StrictObject obj(block, "window");
    WindowSpec& w = config.window;
    w.l_seq = obj.get<std::int64_t>("L_seq", 1);
    w.stride = obj.get<std::int64_t>("stride", 1);
    w.warm_start = obj.get<std::int64_t>("warm_start", 0);
    w.offset = obj.get<std::int64_t>("offset", 0);
    w.pred_len = obj.get<std::int64_t>("pred_len", 1);
    w.lbl_len = obj.get<std::int64_t>("lbl_len", 0);
    std::string pad = obj.get<std::string>("pad_policy", "replicate-edge");
    if (pad == "replicate-edge") {
        w.pad_policy = PadPolicy::replicate_edge;
    } else if (pad == "zeros") {
        w.pad_policy = PadPolicy::zeros;
    } else {
        throw SchemaError("window.pad_policy: unknown policy '" + pad + "'");
    }
    obj.done();
    w.check();

    json resolved;
    resolved["L_seq"] = w.l_seq;
    resolved["stride"] = w.stride;
    resolved["warm_start"] = w.warm_start;
    resolved["offset"] = w.offset;
    resolved["pred_len"] = w.pred_len;
    resolved["lbl_len"] = w.lbl_len;
    resolved["pad_policy"] = pad;
    return resolved;
}

json parse_model(const json& block, RunConfig& config) {
    StrictObject obj(block, "model");
    config.model_kind = model_kind_from_name(obj.get<std::string>("kind", "mean"));
    std::string task = obj.get<std::string>("task", "regression");
    if (task == "regression") {
        config.task = ModelTask::regression;
    } else if (task == "classification") {
        config.task = ModelTask::classification;
    } else {
        throw SchemaError("model.task: unknown task '" + task + "'");
    }
    config.knn_k = obj.get<std::size_t>("k", 1);
    obj.done();

    bool valid = config.task == ModelTask::regression
                     ? config.model_kind != ModelKind::majority
                     : (config.model_kind == ModelKind::majority ||
                        config.model_kind == ModelKind::knn);
    if (!valid) {
        throw SchemaError(std::string("model.kind: '") + model_kind_name(config.model_kind) +
                          "' does not support task '" + task + "'");
    }

    json resolved;
    resolved["kind"] = model_kind_name(config.model_kind);
    resolved["task"] = task;
    resolved["k"] = config.knn_k;
    return resolved;
}

json parse_context(const json& block, RunConfig& config) {
    StrictObject obj(block, "context");
    config.context.size = obj.get<std::size_t>("size", 1);
    std::string selection = obj.get<std::string>("selection", "nearest");
    if (selection == "nearest") {
        config.context.selection = ContextSelection::nearest_by_feature;
    } else if (selection == "random") {
        config.context.selection = ContextSelection::uniform_random;
    } else {
        throw SchemaError("context.selection: unknown selection '" + selection + "'");
    }
    config.context.seed = obj.get<std::uint64_t>("seed", 0);
    obj.done();
    config.context.check();

    json resolved;
    resolved["size"] = config.context.size;
    resolved["selection"] = selection;
    resolved["seed"] = config.context.seed;
    return resolved;
}

json parse_evaluator(const json& block, RunConfig& config) {
    StrictObject obj(block, "evaluator");
    std::string aggregation = obj.get<std::string>("aggregation", "window");
    if (aggregation == "window") {
        config.aggregation = Aggregation::window;
    } else if (aggregation == "per_unit") {
        config.aggregation = Aggregation::per_unit;
    } else if (aggregation == "both") {
        config.aggregation = Aggregation::both;
    } else {
        throw SchemaError("evaluator.aggregation: unknown mode '" + aggregation + "'");
    }

    std::vector<std::string> default_metrics =
        config.task == ModelTask::regression
            ? std::vector<std::string>{"mae", "mse", "rmse"}
            : std::vector<std::string>{"accuracy", "macro_f1", "auroc"};
    config.metrics = obj.get<std::vector<std::string>>("metrics", default_metrics);

    const std::set<std::string> regression_metrics_set = {"mae", "mse", "rmse", "phm_score",
                                                          "nasa_score"};
    const std::set<std::string> classification_metrics_set = {"accuracy", "macro_f1", "auroc"};
    for (const auto& metric : config.metrics) {
        bool ok = config.task == ModelTask::regression ? regression_metrics_set.count(metric) > 0
                                                       : classification_metrics_set.count(metric) > 0;
        if (!ok) {
            throw SchemaError("evaluator.metrics: '" + metric + "' is not valid for task '" +
                              (config.task == ModelTask::regression ? "regression"
                                                                    : "classification") +
                              "'");
        }
    }
    if (config.task == ModelTask::classification && aggregation != "window") {
        throw SchemaError("evaluator.aggregation: classification supports window-level "
                          "aggregation only");
    }

    config.descale = obj.get<bool>("descale", false);
    if (config.descale && config.task == ModelTask::classification) {
        throw SchemaError("evaluator.descale: inverse scaling applies to regression targets "
                          "only");
    }
    config.phm_epsilon = obj.get<double>("phm_epsilon", 1e-8);
    config.nasa_a_early = obj.get<double>("nasa_a_early", 13.0);
    config.nasa_a_late = obj.get<double>("nasa_a_late", 10.0);
    config.class_count = obj.get<std::int64_t>("class_count", 0);
    obj.done();

    if (config.task == ModelTask::classification && config.class_count == 0) {
        if (config.source_kind == SourceKind::synthetic) {
            config.class_count = config.synthetic.class_count;
        } else {
            throw SchemaError("evaluator.class_count: required for classification on csv data");
        }
    }
    if (config.phm_epsilon <= 0.0) {
        throw SchemaError("evaluator.phm_epsilon: must be > 0");
    }

    json resolved;
    resolved["aggregation"] = aggregation;
    resolved["metrics"] = config.metrics;
    resolved["descale"] = config.descale;
    resolved["phm_epsilon"] = config.phm_epsilon;
    resolved["nasa_a_early"] = config.nasa_a_early;
    resolved["nasa_a_late"] = config.nasa_a_late;
    resolved["class_count"] = config.class_count;
    return resolved;
}

} // namespace

RunConfig parse_config(const std::string& json_text) {
    json document;
    try {
        document = json::parse(json_text);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("config is not valid JSON: ") + e.what());
    }

    RunConfig config;
    StrictObject root(document, "config");

    config.seed = root.get<std::uint64_t>("seed", 0);

    json resolved;
    resolved["seed"] = config.seed;
    resolved["datasource"] =
        parse_datasource(root.has("datasource") ? root.raw("datasource") : json::object(),
                         config);
    config.synthetic.seed = config.seed;
    resolved["split"] =
        parse_split(root.has("split") ? root.raw("split") : json::object(), config);

    json transforms_resolved = json::array();
    if (root.has("transforms")) {
        const json& stages = root.raw("transforms");
        if (!stages.is_array()) {
            throw SchemaError("transforms: expected an array");
        }
        for (std::size_t i = 0; i < stages.size(); ++i) {
            transforms_resolved.push_back(parse_transform_stage(stages[i], i, config));
        }
    }
    resolved["transforms"] = transforms_resolved;

    resolved["window"] =
        parse_window(root.has("window") ? root.raw("window") : json::object(), config);
    resolved["model"] =
        parse_model(root.has("model") ? root.raw("model") : json::object(), config);
    resolved["context"] =
        parse_context(root.has("context") ? root.raw("context") : json::object(), config);
    resolved["evaluator"] =
        parse_evaluator(root.has("evaluator") ? root.raw("evaluator") : json::object(), config);

    if (config.source_kind == SourceKind::synthetic) {
        std::string ds_task = resolved["datasource"]["task"].get<std::string>();
        bool classification = config.task == ModelTask::classification;
        if ((ds_task == "diagnostics") != classification) {
            throw SchemaError("model.task: must match the synthetic datasource task ('" +
                              ds_task + "')");
        }
    }

    if (root.has("cache_dir")) {
        config.cache_dir = root.get<std::string>("cache_dir", "");
        resolved["cache_dir"] = config.cache_dir->string();
    } else {
        resolved["cache_dir"] = nullptr;
    }
    config.dump_predictions = root.get<bool>("predictions", false);
    resolved["predictions"] = config.dump_predictions;

    root.done();
    config.resolved = std::move(resolved);
    return config;
}

RunConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw SchemaError("cannot open config file '" + path.string() + "'");
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config(text);
}

} // namespace phmkit
