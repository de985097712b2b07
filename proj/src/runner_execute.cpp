#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include "phmkit/runner.hpp"
#include "phmkit/sha256.hpp"
#include "phmkit/windowing.hpp"

namespace phmkit {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string iso_timestamp() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw RunError("cannot write '" + path.string() + "'");
    }
    out.write(content.data(), std::streamsize(content.size()));
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw RunError("cannot read '" + path.string() + "'");
    }
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

SplitContainer load_and_split(const RunConfig& config) {
    std::vector<RawUnit> units;
    if (config.source_kind == SourceKind::synthetic) {
        SyntheticSpec spec = config.synthetic;
        spec.seed = config.seed;
        units = generate_synthetic(spec);
    } else {
        units = load_csv(config.csv_path, config.csv_schema);
    }
    if (units.empty()) {
        throw RunError("datasource produced no units");
    }

    SplitContainer container;
    container.assignment.mode = config.split_mode;
    if (config.split_mode == SplitMode::inter_unit) {
        for (const auto& unit : units) {
            auto it = config.split_units.find(unit.unit_id);
            if (it == config.split_units.end()) {
                throw SchemaError("split.units: loaded unit '" + unit.unit_id +
                                  "' has no split assignment");
            }
            container.assignment.inter[unit.unit_id] = it->second;
        }
        for (const auto& [id, split] : config.split_units) {
            if (!container.assignment.inter.count(id)) {
                throw SchemaError("split.units: assigned unit '" + id + "' was not loaded");
            }
        }
    } else {
        for (const auto& unit : units) {
            // Preliminary boundaries on the raw grid; recomputed on the final
            // transformed grid after the pipeline.
            IntraBoundaries b;
            b.tau_train = std::int64_t(std::floor(config.train_frac * double(unit.length())));
            b.tau_val = std::int64_t(std::floor(config.val_frac * double(unit.length())));
            container.assignment.intra[unit.unit_id] = b;
        }
    }

    for (const auto& unit : units) {
        UnitData data;
        data.unit_id = unit.unit_id;
        data.raw_length = std::int64_t(unit.length());
        data.metadata = unit.metadata;

        Series features;
        features.values = unit.x;
        features.support = SupportMap::identity(unit.length());
        features.channel_names = unit.channel_names;
        data.keys["features"] = std::move(features);

        Series target;
        target.values = Matrix(unit.length(), 1);
        for (std::size_t t = 0; t < unit.length(); ++t) {
            target.values(t, 0) = unit.y[t];
        }
        target.support = SupportMap::identity(unit.length());
        target.channel_names = {"target"};
        data.keys["target"] = std::move(target);

        if (config.split_mode == SplitMode::inter_unit) {
            container.units(container.assignment.inter.at(unit.unit_id)).push_back(data);
        } else {
            for (Split s : kAllSplits) {
                container.units(s).push_back(data);
            }
        }
    }
    for (Split s : kAllSplits) {
        auto& list = container.units(s);
        std::sort(list.begin(), list.end(),
                  [](const UnitData& a, const UnitData& b) { return a.unit_id < b.unit_id; });
        container.stage_history[s] = {};
    }

    auto violations = validate_container(container);
    if (!violations.empty()) {
        throw IntegrityError("loaded container is invalid: " + violations.front());
    }
    return container;
}

/// Invertible affine target chain for metric de-scaling, built from the
/// executed stage records. Throws RunError when the chain is broken by a
/// non-affine target transform.
TargetDescaler build_descaler(const RunConfig& config,
                              const std::vector<StageExecutionRecord>& records,
                              const SplitContainer& container) {
    std::vector<TargetDescaler::AffineStep> forward;

    for (std::size_t i = 0; i < config.transforms.size(); ++i) {
        const TransformStageSpec& spec = config.transforms[i];
        if (spec.output_key() != container.target_key) {
            continue;
        }
        const FittedTransformState& state = records[i].state;
        TargetDescaler::AffineStep inverse;
        switch (spec.kind) {
        case TransformKind::minmax: {
            // inverse: v * (max - min) + min, per fitted scope
            for (const auto& [name, values] : state.params) {
                if (name.rfind("min", 0) != 0) {
                    continue;
                }
                std::string suffix = name.substr(3);   // "" or "/unit"
                double lo = values.at(0);
                double hi = state.params.at("max" + suffix).at(0);
                if (suffix.empty()) {
                    inverse.default_scale = hi - lo;
                    inverse.default_shift = lo;
                } else {
                    inverse.scale[suffix.substr(1)] = hi - lo;
                    inverse.shift[suffix.substr(1)] = lo;
                }
            }
            forward.push_back(inverse);
            break;
        }
        case TransformKind::standard: {
            for (const auto& [name, values] : state.params) {
                if (name.rfind("mean", 0) != 0) {
                    continue;
                }
                std::string suffix = name.substr(4);
                double mu = values.at(0);
                double sigma = state.params.at("std" + suffix).at(0);
                if (suffix.empty()) {
                    inverse.default_scale = sigma;
                    inverse.default_shift = mu;
                } else {
                    inverse.scale[suffix.substr(1)] = sigma;
                    inverse.shift[suffix.substr(1)] = mu;
                }
            }
            forward.push_back(inverse);
            break;
        }
        case TransformKind::constant_scale:
            inverse.default_scale = 1.0 / spec.constant;
            forward.push_back(inverse);
            break;
        case TransformKind::health_index: {
            // runtime = lifetime * (1 - HI) = -lifetime * HI + lifetime
            for (Split s : kAllSplits) {
                for (const UnitData& unit : container.units(s)) {
                    double lifetime;
                    auto it = spec.lifetimes.find(unit.unit_id);
                    if (it != spec.lifetimes.end()) {
                        lifetime = it->second;
                    } else {
                        auto meta = unit.metadata.find("lifetime");
                        if (meta == unit.metadata.end()) {
                            continue;
                        }
                        lifetime = std::stod(meta->second);
                    }
                    inverse.scale[unit.unit_id] = -lifetime;
                    inverse.shift[unit.unit_id] = lifetime;
                }
            }
            forward.push_back(inverse);
            break;
        }
        case TransformKind::identity:
        case TransformKind::repair:
        case TransformKind::corrupt:
        case TransformKind::subsample:
        case TransformKind::windowed_aggregation:
            // Value-preserving or affine-commuting on the target; no step.
            break;
        default:
            throw RunError("descale error: target passed through non-invertible stage '" +
                           spec.stage_name + "'");
        }
    }

    TargetDescaler descaler;
    descaler.inverse_steps.assign(forward.rbegin(), forward.rend());
    return descaler;
}

void fill_regression_report(const RunConfig& config, const std::vector<ScoredPair>& pairs,
                            bool denormalized, MetricReport& report) {
    auto metric_of = [&](const std::string& name) {
        if (name == "mae") return UnitMetric::mae;
        if (name == "mse") return UnitMetric::mse;
        if (name == "rmse") return UnitMetric::rmse;
        return UnitMetric::phm;
    };
    auto& out = denormalized ? report.metrics_denormalized : report.metrics;

    bool window_level =
        config.aggregation == Aggregation::window || config.aggregation == Aggregation::both;
    bool per_unit_level =
        config.aggregation == Aggregation::per_unit || config.aggregation == Aggregation::both;

    for (const auto& name : config.metrics) {
        if (name == "nasa_score") {
            out["nasa_score"] = nasa_score(pairs, config.nasa_a_early, config.nasa_a_late);
            continue;
        }
        UnitMetric metric = metric_of(name);
        if (window_level) {
            out[name] = aggregate_window_level(pairs, metric, config.phm_epsilon);
        }
        if (per_unit_level) {
            PerUnitResult unit_result = aggregate_per_unit(pairs, metric, config.phm_epsilon);
            std::string key = config.aggregation == Aggregation::both ? name + "_per_unit" : name;
            out[key] = unit_result.mean_over_units;
            if (!denormalized) {
                for (const auto& [unit, value] : unit_result.per_unit) {
                    report.per_unit[unit][name] = value;
                }
                report.counts = unit_result.counts;
            }
        }
    }
}

MetricReport evaluate_split(const RunConfig& config, const std::vector<ScoredPair>& pairs,
                            const std::vector<std::int64_t>& class_set,
                            const TargetDescaler* descaler) {
    MetricReport report;
    if (pairs.empty()) {
        return report;
    }

    if (config.task == ModelTask::regression) {
        fill_regression_report(config, pairs, false, report);
        if (descaler != nullptr) {
            std::vector<ScoredPair> physical = descale_predictions(pairs, *descaler);
            fill_regression_report(config, physical, true, report);
        }
    } else {
        std::vector<ClassPair> class_pairs;
        class_pairs.reserve(pairs.size());
        for (const auto& pair : pairs) {
            ClassPair cp;
            cp.unit_id = pair.unit_id;
            cp.truth = std::llround(pair.truth);
            cp.scores.assign(class_set.size(), 0.0);
            auto predicted = std::llround(pair.prediction);
            for (std::size_t c = 0; c < class_set.size(); ++c) {
                if (class_set[c] == predicted) {
                    cp.scores[c] = 1.0;
                }
            }
            class_pairs.push_back(std::move(cp));
        }
        ClassificationMetrics m = classification_metrics(class_pairs, class_set);
        auto want = [&](const char* name) {
            return std::find(config.metrics.begin(), config.metrics.end(), name) !=
                   config.metrics.end();
        };
        if (want("accuracy")) report.metrics["accuracy"] = m.accuracy;
        if (want("macro_f1")) report.metrics["macro_f1"] = m.macro_f1;
        if (want("auroc")) report.metrics["auroc"] = m.auroc;
    }
    return report;
}

json report_as_json(const MetricReport& report) {
    json j;
    j["metrics"] = report.metrics;
    j["metrics_denormalized"] = report.metrics_denormalized;
    j["per_unit"] = report.per_unit;
    j["counts"] = report.counts;
    return j;
}

} // namespace

RunResult execute_run(const RunConfig& base_config, const RunOptions& options) {
    RunConfig config = base_config;
    if (options.seed_override) {
        config.seed = *options.seed_override;
        config.resolved["seed"] = config.seed;
    }
    if (options.cache_dir) {
        config.cache_dir = options.cache_dir;
    } else if (!config.cache_dir) {
        const char* env = std::getenv("PHM_CACHE_DIR");
        if (env != nullptr && *env != '\0') {
            config.cache_dir = fs::path(env);
        }
    }
    const bool use_cache = !options.no_cache && config.cache_dir.has_value();

    const std::string started_at = iso_timestamp();
    const std::string code_fp = code_fingerprint();
    const std::string config_canonical = canonical_json(config.resolved);
    const std::string config_digest = Sha256::hex_digest(config_canonical);

    const std::size_t n_stages = config.transforms.size();

    // Cache keys per tier. The loaded tier depends on the datasource, the
    // split policy and the seed; transform-tier keys add the pipeline prefix.
    json source_config = {{"datasource", config.resolved["datasource"]},
                          {"split", config.resolved["split"]},
                          {"seed", config.seed}};
    const json& transform_config = config.resolved["transforms"];
    TierKeys keys;
    keys.loaded = cache_key(source_config, json::array(), code_fp, CacheTier::loaded);
    for (std::size_t i = 0; i < n_stages; ++i) {
        if (config.transforms[i].cache_point) {
            json prefix = json::array();
            for (std::size_t j = 0; j <= i; ++j) {
                prefix.push_back(transform_config[j]);
            }
            keys.boundaries.push_back(cache_key(source_config, prefix, code_fp,
                                                CacheTier::boundary, std::int64_t(i)));
        }
    }
    keys.preprocessed =
        cache_key(source_config, transform_config, code_fp, CacheTier::preprocessed);

    // --- Load (tier 1/2/3 aware). Checkpoints carry both the container and
    // the records of every stage already applied to it.
    SplitContainer container;
    std::vector<StageExecutionRecord> records;
    std::size_t resume = 0;
    std::string hit_tier = "none";
    bool restored = false;
    if (use_cache) {
        if (auto hit = lookup(keys, std::int64_t(n_stages), *config.cache_dir)) {
            PipelineCheckpoint checkpoint = deserialize_checkpoint(hit->payload);
            container = std::move(checkpoint.container);
            records = std::move(checkpoint.records);
            resume = std::size_t(hit->resume_index);
            hit_tier = cache_tier_name(hit->tier);
            if (hit->tier == CacheTier::boundary) {
                hit_tier += ":" + std::to_string(hit->resume_index - 1);
            }
            restored = true;
        }
    }
    if (!restored) {
        container = load_and_split(config);
        if (use_cache) {
            store(keys.loaded, serialize_checkpoint(container, {}), *config.cache_dir);
        }
    }

    FitPolicy policy;
    if (config.split_mode == SplitMode::intra_unit) {
        for (const UnitData& unit : container.units(Split::train)) {
            policy.intra_raw_train_limit[unit.unit_id] =
                std::int64_t(std::floor(config.train_frac * double(unit.raw_length)));
        }
    }

    // --- Transform pipeline, persisting boundary checkpoints as they are
    // produced (Tier 2) and the final state (Tier 3).
    RunResult result;
    result.counters.stage_executions.assign(n_stages, 0);
    std::size_t position = resume;
    while (position < n_stages) {
        std::size_t stop = n_stages;
        if (use_cache) {
            for (std::size_t j = position; j < n_stages; ++j) {
                if (config.transforms[j].cache_point) {
                    stop = j + 1;
                    break;
                }
            }
        }
        PipelineResult segment = run_pipeline(container, config.transforms, policy, position,
                                              &result.counters, stop);
        container = std::move(segment.container);
        for (auto& record : segment.records) {
            records.push_back(std::move(record));
        }
        if (use_cache && stop > position && config.transforms[stop - 1].cache_point) {
            for (const auto& key : keys.boundaries) {
                if (key.boundary_index == std::int64_t(stop - 1)) {
                    store(key, serialize_checkpoint(container, records), *config.cache_dir);
                }
            }
        }
        position = stop;
    }
    if (use_cache && hit_tier.rfind("preprocessed", 0) != 0) {
        store(keys.preprocessed, serialize_checkpoint(container, records), *config.cache_dir);
    }
    if (records.size() != n_stages) {
        throw RunError("internal: stage record count " + std::to_string(records.size()) +
                       " does not match pipeline length " + std::to_string(n_stages));
    }

    // --- Intra-unit boundaries on the final transformed grid.
    std::map<std::string, std::int64_t> boundary_raw_max;
    if (config.split_mode == SplitMode::intra_unit) {
        for (const UnitData& unit : container.units(Split::train)) {
            const Series& features = unit.keys.at(container.feature_key);
            auto t_prime = std::int64_t(features.length());
            IntraBoundaries b;
            b.tau_train = std::int64_t(std::floor(config.train_frac * double(t_prime)));
            b.tau_val = std::int64_t(std::floor(config.val_frac * double(t_prime)));
            container.assignment.intra[unit.unit_id] = b;

            std::int64_t raw_max = 0;
            for (std::int64_t j = 0; j < b.tau_train; ++j) {
                const SupportEntry& e = features.support.entries[std::size_t(j)];
                if (!e.artificial) {
                    raw_max = std::max(raw_max, e.hi);
                }
            }
            boundary_raw_max[unit.unit_id] = raw_max;
        }
    }

    // --- Windowing and routing.
    std::vector<WindowSample> all_samples;
    if (config.split_mode == SplitMode::inter_unit) {
        for (Split s : kAllSplits) {
            for (const UnitData& unit : container.units(s)) {
                AlignedSeries aligned = container.aligned_view(unit);
                auto samples = slice_unit(aligned, config.window, s);
                all_samples.insert(all_samples.end(), samples.begin(), samples.end());
            }
        }
    } else {
        for (const UnitData& unit : container.units(Split::train)) {
            AlignedSeries aligned = container.aligned_view(unit);
            auto samples = slice_unit(aligned, config.window, Split::train);
            all_samples.insert(all_samples.end(), samples.begin(), samples.end());
        }
    }
    RoutedWindows routed = route_windows(all_samples, container.assignment);

    std::map<Split, std::vector<TabularSample>> tabular;
    for (Split s : kAllSplits) {
        auto& list = tabular[s];
        list.reserve(routed.of(s).size());
        for (const WindowSample& sample : routed.of(s)) {
            list.push_back(to_tabular(sample, config.window));
        }
    }
    if (tabular[Split::train].empty()) {
        throw RunError("no training windows were produced; check window and split settings");
    }

    // --- Fit on train only, predict on val and test.
    // Test targets are read exclusively by the final evaluation pass; the
    // counter below asserts that.
    bool eval_phase = false;
    std::int64_t test_reads_before_eval = 0;
    auto read_target = [&](const TabularSample& sample) {
        if (sample.split == Split::test && !eval_phase) {
            ++test_reads_before_eval;
        }
        return sample.y;
    };

    FittedModel model = fit_baseline(config.model_kind, tabular[Split::train], config.task,
                                     config.knn_k, config.context);

    auto predict_split = [&](Split s) {
        std::vector<double> predictions;
        predictions.reserve(tabular[s].size());
        for (const TabularSample& sample : tabular[s]) {
            std::vector<const TabularSample*> context;
            if (config.model_kind == ModelKind::knn) {
                context = select_context(sample, tabular[Split::train], config.context,
                                         container.assignment);
            }
            predictions.push_back(predict(model, sample, context));
        }
        return predictions;
    };
    std::vector<double> val_predictions = predict_split(Split::val);
    std::vector<double> test_predictions = predict_split(Split::test);

    // --- Final evaluation pass.
    eval_phase = true;
    auto make_pairs = [&](Split s, const std::vector<double>& predictions) {
        std::vector<ScoredPair> pairs;
        pairs.reserve(predictions.size());
        for (std::size_t i = 0; i < predictions.size(); ++i) {
            pairs.push_back({predictions[i], read_target(tabular[s][i]),
                             tabular[s][i].unit_id});
        }
        return pairs;
    };
    std::vector<ScoredPair> val_pairs = make_pairs(Split::val, val_predictions);
    std::vector<ScoredPair> test_pairs = make_pairs(Split::test, test_predictions);

    std::vector<std::int64_t> class_set;
    if (config.task == ModelTask::classification) {
        for (std::int64_t c = 0; c < config.class_count; ++c) {
            class_set.push_back(c);
        }
    }

    TargetDescaler descaler;
    if (config.descale) {
        descaler = build_descaler(config, records, container);
    }
    const TargetDescaler* descaler_ptr = config.descale ? &descaler : nullptr;

    result.val_report = evaluate_split(config, val_pairs, class_set, descaler_ptr);
    result.test_report = evaluate_split(config, test_pairs, class_set, descaler_ptr);
    result.test_target_reads_before_eval = test_reads_before_eval;

    json metrics_doc;
    metrics_doc["val"] = report_as_json(result.val_report);
    metrics_doc["test"] = report_as_json(result.test_report);
    std::string metrics_canonical = canonical_json(metrics_doc);
    result.metric_digest = Sha256::hex_digest(metrics_canonical);
    result.config_digest = config_digest;

    // --- Manifest with the embedded audit record.
    json manifest;
    manifest["config_digest"] = config_digest;
    manifest["code_fingerprint"] = code_fp;
    manifest["seed"] = config.seed;
    manifest["tool_version"] = tool_version();
    manifest["metric_report_digest"] = result.metric_digest;
    manifest["started_at"] = started_at;
    manifest["finished_at"] = iso_timestamp();
    manifest["test_isolation"] = {{"test_target_reads_before_eval", test_reads_before_eval}};

    json cache_section;
    cache_section["enabled"] = use_cache;
    cache_section["hit_tier"] = hit_tier;
    cache_section["keys"]["loaded"] = keys.loaded.hex;
    cache_section["keys"]["preprocessed"] = keys.preprocessed.hex;
    json boundary_keys = json::array();
    for (const auto& key : keys.boundaries) {
        boundary_keys.push_back({{"stage", key.boundary_index}, {"key", key.hex}});
    }
    cache_section["keys"]["boundaries"] = boundary_keys;
    manifest["cache"] = cache_section;

    json audit;
    audit["mode"] = config.split_mode == SplitMode::inter_unit ? "inter" : "intra";
    json audit_stages = json::array();
    for (const auto& record : records) {
        json stage;
        stage["name"] = record.stage_name;
        stage["fitted_on"] = record.state.fitted_on;
        stage["fingerprint"] = record.state.fingerprint;
        stage["consumed_raw_max"] = record.fit_consumed_raw_max;
        audit_stages.push_back(stage);
    }
    audit["stages"] = audit_stages;
    json audit_boundaries = json::object();
    if (config.split_mode == SplitMode::intra_unit) {
        for (const auto& [unit, b] : container.assignment.intra) {
            audit_boundaries[unit] = {{"tau_train", b.tau_train},
                                      {"tau_val", b.tau_val},
                                      {"boundary_raw_max", boundary_raw_max[unit]}};
        }
    }
    audit["boundaries"] = audit_boundaries;
    json members = json::object();
    for (Split s : kAllSplits) {
        json list = json::array();
        for (const TabularSample& sample : tabular[s]) {
            list.push_back({sample.unit_id, sample.k});
        }
        members[split_name(s)] = list;
    }
    audit["split_members"] = members;
    manifest["audit"] = audit;
    result.manifest = manifest;

    // --- Artifacts.
    if (options.out_dir) {
        fs::create_directories(*options.out_dir);
        write_text_file(*options.out_dir / "config.resolved.json", config_canonical + "\n");
        write_text_file(*options.out_dir / "metrics.json", metrics_canonical + "\n");
        write_text_file(*options.out_dir / "manifest.json", manifest.dump(2) + "\n");
        if (config.dump_predictions) {
            json predictions;
            auto dump_pairs = [](const std::vector<TabularSample>& samples,
                                 const std::vector<double>& preds) {
                json list = json::array();
                for (std::size_t i = 0; i < samples.size(); ++i) {
                    list.push_back({{"unit", samples[i].unit_id},
                                    {"k", samples[i].k},
                                    {"prediction", preds[i]},
                                    {"target", samples[i].y}});
                }
                return list;
            };
            predictions["val"] = dump_pairs(tabular[Split::val], val_predictions);
            predictions["test"] = dump_pairs(tabular[Split::test], test_predictions);
            write_text_file(*options.out_dir / "predictions.json", predictions.dump(2) + "\n");
        }
        result.out_dir = *options.out_dir;
    }

    return result;
}

ReplayResult replay(const fs::path& run_dir, bool allow_code_drift) {
    fs::path manifest_path = run_dir / "manifest.json";
    fs::path config_path = run_dir / "config.resolved.json";
    if (!fs::exists(manifest_path) || !fs::exists(config_path)) {
        throw RunError("replay error: '" + run_dir.string() +
                       "' is missing manifest.json or config.resolved.json");
    }
    json manifest = json::parse(read_text_file(manifest_path));
    std::string recorded_code = manifest.value("code_fingerprint", "");
    if (recorded_code != code_fingerprint() && !allow_code_drift) {
        throw RunError("replay refused: the current code fingerprint differs from the one in "
                       "the manifest; rerun with --allow-code-drift to proceed anyway");
    }

    RunConfig config = parse_config(read_text_file(config_path));
    RunOptions options;   // no artifacts, config-defined cache
    RunResult rerun = execute_run(config, options);

    ReplayResult verdict;
    verdict.recorded_digest = manifest.value("metric_report_digest", "");
    verdict.replayed_digest = rerun.metric_digest;
    verdict.identical = verdict.recorded_digest == verdict.replayed_digest;
    return verdict;
}

std::vector<std::string> audit_run(const fs::path& run_dir) {
    fs::path manifest_path = run_dir / "manifest.json";
    if (!fs::exists(manifest_path)) {
        throw RunError("audit error: '" + run_dir.string() + "' has no manifest.json");
    }
    json manifest = json::parse(read_text_file(manifest_path));
    if (!manifest.contains("audit")) {
        throw RunError("audit error: manifest has no audit record");
    }
    const json& audit = manifest["audit"];

    RunAuditRecord record;
    record.mode = audit.value("mode", "inter") == "intra" ? SplitMode::intra_unit
                                                          : SplitMode::inter_unit;
    const json stages = audit.value("stages", json::array());
    for (const auto& stage : stages) {
        RunAuditRecord::FittedStage fitted;
        fitted.stage_name = stage.value("name", "");
        fitted.fitted_on = stage.value("fitted_on", "none");
        const json consumed = stage.value("consumed_raw_max", json::object());
        for (const auto& [unit, value] : consumed.items()) {
            fitted.consumed_raw_max[unit] = value.get<std::int64_t>();
        }
        record.stages.push_back(std::move(fitted));
    }
    const json boundaries = audit.value("boundaries", json::object());
    for (const auto& [unit, b] : boundaries.items()) {
        record.train_boundary_raw_max[unit] = b.value("boundary_raw_max", std::int64_t(0));
    }
    const json members = audit.value("split_members", json::object());
    for (const auto& [split, list] : members.items()) {
        for (const auto& member : list) {
            record.split_members[split].emplace_back(member[0].get<std::string>(),
                                                     member[1].get<std::int64_t>());
        }
    }
    return leakage_audit(record);
}

} // namespace phmkit
