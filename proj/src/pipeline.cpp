#include <algorithm>
#include <cmath>
#include <set>

#include "phmkit/rng.hpp"
#include "phmkit/transforms.hpp"

namespace phmkit {

namespace {

std::size_t effective_rows(const FitInput::UnitSlice& slice) {
    std::size_t rows = slice.series->length();
    if (slice.row_limit >= 0) {
        rows = std::min(rows, std::size_t(slice.row_limit));
    }
    return rows;
}

/// Per-channel reduction helper over the fit slices, ascending unit_id then
/// ascending time, skipping NaNs.
template <typename Fn>
void for_each_fit_value(const std::vector<FitInput::UnitSlice>& slices, std::size_t channel,
                        Fn&& fn) {
    for (const auto& slice : slices) {
        std::size_t rows = effective_rows(slice);
        for (std::size_t r = 0; r < rows; ++r) {
            double v = slice.series->values(r, channel);
            if (!std::isnan(v)) {
                fn(v);
            }
        }
    }
}

void fit_minmax(const std::vector<FitInput::UnitSlice>& slices, std::size_t cols,
                const std::string& suffix, FittedTransformState& state) {
    std::vector<double> lo(cols), hi(cols);
    for (std::size_t c = 0; c < cols; ++c) {
        bool any = false;
        double mn = 0.0, mx = 0.0;
        for_each_fit_value(slices, c, [&](double v) {
            if (!any) {
                mn = mx = v;
                any = true;
            } else {
                mn = std::min(mn, v);
                mx = std::max(mx, v);
            }
        });
        if (!any) {
            throw IntegrityError("fit error: channel " + std::to_string(c + 1) +
                                 " has no finite training values");
        }
        lo[c] = mn;
        hi[c] = mx;
    }
    state.params["min" + suffix] = std::move(lo);
    state.params["max" + suffix] = std::move(hi);
}

void fit_standard(const std::vector<FitInput::UnitSlice>& slices, std::size_t cols,
                  const std::string& suffix, FittedTransformState& state) {
    std::vector<double> mean(cols), stddev(cols);
    for (std::size_t c = 0; c < cols; ++c) {
        double sum = 0.0;
        std::int64_t n = 0;
        for_each_fit_value(slices, c, [&](double v) {
            sum += v;
            ++n;
        });
        if (n == 0) {
            throw IntegrityError("fit error: channel " + std::to_string(c + 1) +
                                 " has no finite training values");
        }
        double mu = sum / double(n);
        double acc = 0.0;
        for_each_fit_value(slices, c, [&](double v) { acc += (v - mu) * (v - mu); });
        mean[c] = mu;
        stddev[c] = std::sqrt(acc / double(n));   // population convention
    }
    state.params["mean" + suffix] = std::move(mean);
    state.params["std" + suffix] = std::move(stddev);
}

void fit_repair_mean(const std::vector<FitInput::UnitSlice>& slices, std::size_t cols,
                     const std::string& suffix, FittedTransformState& state) {
    std::vector<double> mean(cols);
    for (std::size_t c = 0; c < cols; ++c) {
        double sum = 0.0;
        std::int64_t n = 0;
        for_each_fit_value(slices, c, [&](double v) {
            sum += v;
            ++n;
        });
        if (n == 0) {
            throw IntegrityError("fit error: channel " + std::to_string(c + 1) +
                                 " has no finite training values");
        }
        mean[c] = sum / double(n);
    }
    state.params["mean" + suffix] = std::move(mean);
}

} // namespace

FittedTransformState fit_stage(const TransformStageSpec& spec, const FitInput& train_data) {
    spec.check();
    if (train_data.tag != Split::train) {
        throw LeakageFault("stage '" + spec.stage_name + "': fit invoked on data tagged '" +
                           split_name(train_data.tag) + "' - parameters may only be estimated on "
                           "the training partition");
    }

    FittedTransformState state;
    state.stage_name = spec.stage_name;
    state.kind = transform_kind_name(spec.kind);

    if (!spec.stateful()) {
        state.fitted_on = "none";
        state.seal();
        return state;
    }
    state.fitted_on = "train";

    // Reductions run in ascending unit_id order regardless of input layout.
    std::vector<FitInput::UnitSlice> slices = train_data.units;
    std::sort(slices.begin(), slices.end(),
              [](const auto& a, const auto& b) { return a.unit_id < b.unit_id; });

    std::size_t total_rows = 0;
    for (const auto& slice : slices) {
        if (slice.series == nullptr) {
            throw IntegrityError("fit error: unit '" + slice.unit_id + "' has no series");
        }
        total_rows += effective_rows(slice);
    }
    if (total_rows == 0) {
        throw IntegrityError("stage '" + spec.stage_name +
                             "': fit error - empty train partition");
    }

    if (spec.kind == TransformKind::concept_classes) {
        if (spec.fit_scope == FitScope::per_unit) {
            throw SpecError("stage '" + spec.stage_name +
                            "': concept_classes does not support per-unit fitting");
        }
        std::vector<std::string> ids;
        for (const auto& slice : slices) {
            if (slice.metadata == nullptr || !slice.metadata->count("dataset_id")) {
                throw IntegrityError("stage '" + spec.stage_name + "': unit '" + slice.unit_id +
                                     "' has no dataset_id metadata");
            }
            ids.push_back(slice.metadata->at("dataset_id"));
        }
        state.lookups["dataset_ids"] = fit_concept_lookup(std::move(ids));
        state.seal();
        return state;
    }

    const std::size_t cols = slices.front().series->width();
    for (const auto& slice : slices) {
        if (slice.series->width() != cols) {
            throw IntegrityError("stage '" + spec.stage_name +
                                 "': units disagree on channel count");
        }
    }

    auto fit_group = [&](const std::vector<FitInput::UnitSlice>& group, const std::string& suffix) {
        switch (spec.kind) {
        case TransformKind::minmax:
            fit_minmax(group, cols, suffix, state);
            break;
        case TransformKind::standard:
            fit_standard(group, cols, suffix, state);
            break;
        case TransformKind::repair:
            fit_repair_mean(group, cols, suffix, state);
            break;
        default:
            throw SpecError("stage '" + spec.stage_name + "': kind is not stateful");
        }
    };

    if (spec.fit_scope == FitScope::pooled) {
        fit_group(slices, "");
    } else {
        for (const auto& slice : slices) {
            if (effective_rows(slice) == 0) {
                throw IntegrityError("stage '" + spec.stage_name + "': fit error - unit '" +
                                     slice.unit_id + "' contributes no training rows");
            }
            fit_group({slice}, "/" + slice.unit_id);
        }
    }

    state.seal();
    return state;
}

namespace {

double unit_lifetime(const TransformStageSpec& spec, const UnitData& unit) {
    auto it = spec.lifetimes.find(unit.unit_id);
    if (it != spec.lifetimes.end()) {
        return it->second;
    }
    auto meta = unit.metadata.find("lifetime");
    if (meta == unit.metadata.end()) {
        throw IntegrityError("stage '" + spec.stage_name + "': no lifetime known for unit '" +
                             unit.unit_id + "'");
    }
    return std::stod(meta->second);
}

std::vector<std::string> stat_channel_names(const Series& input,
                                            const TransformStageSpec& spec) {
    std::vector<std::string> names;
    for (std::size_t c = 0; c < input.width(); ++c) {
        std::string base = c < input.channel_names.size() ? input.channel_names[c]
                                                          : "c" + std::to_string(c + 1);
        for (StatKind s : spec.stats) {
            names.push_back(base + "_" + stat_name(s));
        }
    }
    return names;
}

std::vector<std::string> stft_channel_names(const Series& input, std::int64_t bins) {
    std::vector<std::string> names;
    for (std::size_t c = 0; c < input.width(); ++c) {
        std::string base = c < input.channel_names.size() ? input.channel_names[c]
                                                          : "c" + std::to_string(c + 1);
        for (std::int64_t k = 0; k < bins; ++k) {
            names.push_back(base + "_k" + std::to_string(k));
        }
    }
    return names;
}

/// How many leading rows of `series` have their whole raw support within
/// [1, raw_limit]. Used to build chronological train views for intra splits.
std::int64_t causal_prefix_rows(const Series& series, std::int64_t raw_limit) {
    std::int64_t rows = 0;
    for (const SupportEntry& e : series.support.entries) {
        if (e.artificial || e.hi > raw_limit) {
            break;
        }
        ++rows;
    }
    return rows;
}

std::int64_t consumed_raw_max(const Series& series, std::int64_t rows) {
    std::int64_t hi = 0;
    for (std::int64_t r = 0; r < rows; ++r) {
        const SupportEntry& e = series.support.entries[std::size_t(r)];
        if (!e.artificial) {
            hi = std::max(hi, e.hi);
        }
    }
    return hi;
}

} // namespace

PipelineResult run_pipeline(const SplitContainer& container,
                            const std::vector<TransformStageSpec>& pipeline,
                            const FitPolicy& policy, std::size_t start_index,
                            PipelineCounters* counters, std::size_t stop_index) {
    std::set<std::string> names;
    for (const auto& stage : pipeline) {
        stage.check();
        if (!names.insert(stage.stage_name).second) {
            throw SpecError("duplicate stage name '" + stage.stage_name + "'");
        }
    }
    if (counters && counters->stage_executions.size() != pipeline.size()) {
        counters->stage_executions.assign(pipeline.size(), 0);
    }
    const std::size_t end_index = std::min(stop_index, pipeline.size());

    PipelineResult result;
    result.container = container;
    SplitContainer& work = result.container;

    for (std::size_t stage_idx = start_index; stage_idx < end_index; ++stage_idx) {
        const TransformStageSpec& spec = pipeline[stage_idx];
        if (counters) {
            counters->stage_executions[stage_idx] += 1;
        }

        StageExecutionRecord record;
        record.stage_name = spec.stage_name;
        record.kind = transform_kind_name(spec.kind);

        // Train-only parameter estimation.
        FitInput fit_input;
        fit_input.tag = Split::train;
        if (spec.stateful()) {
            for (const UnitData& unit : work.units(Split::train)) {
                auto it = unit.keys.find(spec.apply_to.front());
                if (it == unit.keys.end()) {
                    throw RunError("stage '" + spec.stage_name + "': unit '" + unit.unit_id +
                                   "' has no key '" + spec.apply_to.front() + "'");
                }
                FitInput::UnitSlice slice;
                slice.unit_id = unit.unit_id;
                slice.series = &it->second;
                slice.metadata = &unit.metadata;
                if (work.assignment.mode == SplitMode::intra_unit) {
                    auto limit = policy.intra_raw_train_limit.find(unit.unit_id);
                    if (limit == policy.intra_raw_train_limit.end()) {
                        throw RunError("stage '" + spec.stage_name +
                                       "': intra-unit fit requires a raw train limit for unit '" +
                                       unit.unit_id + "'");
                    }
                    slice.row_limit = causal_prefix_rows(it->second, limit->second);
                }
                record.fit_consumed_raw_max[unit.unit_id] =
                    consumed_raw_max(it->second, slice.row_limit >= 0
                                                     ? slice.row_limit
                                                     : std::int64_t(it->second.length()));
                fit_input.units.push_back(slice);
            }
        }
        FittedTransformState state = fit_stage(spec, fit_input);

        // ConstantScaler keeps its factor in the applied state so the same
        // code path serves the evaluator's inverse scaling.
        if (spec.kind == TransformKind::constant_scale) {
            state.params["constant"] = {spec.constant};
            state.seal();
        }

        // Frozen application to every split.
        for (Split split : kAllSplits) {
            for (UnitData& unit : work.units(split)) {
                std::vector<const Series*> inputs;
                for (const auto& key : spec.apply_to) {
                    auto it = unit.keys.find(key);
                    if (it == unit.keys.end()) {
                        throw RunError("stage '" + spec.stage_name + "': unit '" + unit.unit_id +
                                       "' has no key '" + key + "'");
                    }
                    inputs.push_back(&it->second);
                }
                const Series& input = *inputs.front();
                const std::size_t input_length = input.length();

                Series output;
                SupportMap local_support;   // grid-changing stages only
                bool grid_changed = false;

                switch (spec.kind) {
                case TransformKind::identity:
                    output = input;
                    break;
                case TransformKind::minmax:
                case TransformKind::standard:
                case TransformKind::constant_scale:
                    output.values = apply_pointwise_scale(spec.kind, state, input.values,
                                                          Direction::forward, unit.unit_id);
                    output.support = input.support;
                    output.channel_names = input.channel_names;
                    break;
                case TransformKind::windowed_aggregation: {
                    auto [values, local] =
                        apply_windowed_aggregation(spec.agg_rule, spec.window, spec.hop,
                                                   input.values);
                    output.values = std::move(values);
                    local_support = std::move(local);
                    output.channel_names = input.channel_names;
                    grid_changed = true;
                    break;
                }
                case TransformKind::stft: {
                    auto [values, local] = apply_stft(spec.window, spec.hop, spec.n_fft,
                                                      spec.post_map, input.values);
                    output.values = std::move(values);
                    local_support = std::move(local);
                    output.channel_names = stft_channel_names(input, spec.n_fft / 2 + 1);
                    grid_changed = true;
                    break;
                }
                case TransformKind::segment_stats: {
                    auto [values, local] = apply_segment_stats(spec.domain, spec.stats,
                                                               input.values);
                    output.values = std::move(values);
                    local_support = std::move(local);
                    output.channel_names = stat_channel_names(input, spec);
                    grid_changed = true;
                    break;
                }
                case TransformKind::cumsum_squared:
                    output.values = apply_cumsum_squared(input.values);
                    output.support = input.support;
                    output.channel_names = input.channel_names;
                    break;
                case TransformKind::subsample: {
                    auto [values, local] = apply_subsample(spec.subsample_rate, input.values);
                    output.values = std::move(values);
                    local_support = std::move(local);
                    output.channel_names = input.channel_names;
                    grid_changed = true;
                    break;
                }
                case TransformKind::concatenate:
                    output = apply_concatenate(inputs);
                    break;
                case TransformKind::pad_to_length: {
                    auto [values, local] = apply_pad_to_length(spec.pad_length, spec.pad_value,
                                                               input.values);
                    output.values = std::move(values);
                    local_support = std::move(local);
                    output.channel_names = input.channel_names;
                    grid_changed = true;
                    break;
                }
                case TransformKind::repair:
                    output.values = apply_repair(spec.repair_mode, state, input.values);
                    output.support = input.support;
                    output.channel_names = input.channel_names;
                    break;
                case TransformKind::corrupt: {
                    CorruptResult corrupted =
                        apply_corrupt(spec, mix_seed(spec.seed, unit.unit_id), input.values);
                    output.values = std::move(corrupted.values);
                    output.support = input.support;
                    output.channel_names = input.channel_names;
                    record.corrupt_realized_ratio[std::string(split_name(split)) + "/" +
                                                  unit.unit_id] = corrupted.realized_ratio;
                    break;
                }
                case TransformKind::health_index:
                    output.values = apply_health_index(unit_lifetime(spec, unit), input.values,
                                                       Direction::forward);
                    output.support = input.support;
                    output.channel_names = input.channel_names;
                    break;
                case TransformKind::concept_classes: {
                    auto meta = unit.metadata.find("dataset_id");
                    if (meta == unit.metadata.end()) {
                        throw IntegrityError("stage '" + spec.stage_name + "': unit '" +
                                             unit.unit_id + "' has no dataset_id metadata");
                    }
                    const auto& lookup = state.lookups.at("dataset_ids");
                    Matrix codes(input.length(), 1);
                    std::vector<double> row(input.width());
                    for (std::size_t r = 0; r < input.length(); ++r) {
                        for (std::size_t c = 0; c < input.width(); ++c) {
                            row[c] = input.values(r, c);
                        }
                        codes(r, 0) = double(encode_concept_class(lookup, row, meta->second));
                    }
                    output.values = std::move(codes);
                    output.support = input.support;
                    output.channel_names = {"class"};
                    break;
                }
                }

                if (grid_changed) {
                    output.support = compose_support(input.support, local_support);
                }

                // Re-align the target whenever a feature-side stage changed
                // the grid the target currently lives on.
                const std::string out_key = spec.output_key();
                if (grid_changed && out_key != work.target_key &&
                    spec.apply_to.front() != work.target_key) {
                    auto target_it = unit.keys.find(work.target_key);
                    if (target_it != unit.keys.end() &&
                        target_it->second.length() == input_length) {
                        Series& target = target_it->second;
                        if (target.width() != 1) {
                            throw RunError("stage '" + spec.stage_name +
                                           "': cannot align a multi-channel target; encode it "
                                           "into one channel first");
                        }
                        std::vector<double> flat(target.values.data());
                        std::vector<double> aligned =
                            align_target(flat, local_support, spec.align);
                        Matrix aligned_values(aligned.size(), 1);
                        aligned_values.data() = aligned;
                        target.values = std::move(aligned_values);
                        target.support = output.support;
                    }
                }

                unit.keys[out_key] = std::move(output);
            }
        }

        for (Split split : kAllSplits) {
            work.stage_history[split].push_back(spec.stage_name + ":" + state.fingerprint);
        }
        record.state = std::move(state);
        result.records.push_back(std::move(record));
    }

    return result;
}

} // namespace phmkit
