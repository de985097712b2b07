#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "phmkit/types.hpp"

namespace phmkit {

enum class TransformKind {
    identity,
    minmax,
    standard,
    constant_scale,
    windowed_aggregation,
    stft,
    segment_stats,
    cumsum_squared,
    subsample,
    concatenate,
    pad_to_length,
    repair,
    corrupt,
    health_index,
    concept_classes,
};

TransformKind transform_kind_from_name(const std::string& name);
const char* transform_kind_name(TransformKind kind);

/// Stateful kinds estimate parameters on the training partition; everything
/// else is stateless. Repair is stateful only in mean mode and handled in
/// TransformStageSpec::stateful().
bool kind_is_grid_changing(TransformKind kind);

enum class AggRule { mean, sum, min, max, median, std_dev, first, last };
enum class StatKind { mean, max, min, rms, var, std_dev, skewness, kurtosis, energy, peak_factor, range };
enum class StatsDomain { time, frequency };
enum class StftPostMap { magnitude, power, log_power };
enum class RepairMode { zero, mean, locf, linear };
enum class CorruptMode { point, block };
enum class FitScope { pooled, per_unit };
enum class Direction { forward, inverse };

AggRule agg_rule_from_name(const std::string& name);
StatKind stat_from_name(const std::string& name);
const char* stat_name(StatKind s);

/// How a raw-time target is sampled or aggregated onto a transformed index.
enum class AlignRule { last, mean, max, majority, none };
AlignRule align_rule_from_name(const std::string& name);
const char* align_rule_name(AlignRule rule);

/// Declarative description of one pipeline stage: the algorithm kind, its
/// hyperparameters, and the routing metadata (which container keys it reads
/// and writes, whether and where it fits).
struct TransformStageSpec {
    std::string stage_name;
    TransformKind kind = TransformKind::identity;

    std::vector<std::string> apply_to;   // container keys read
    std::string assign_to;               // output key; empty = first input key
    bool cache_point = false;
    FitScope fit_scope = FitScope::pooled;
    AlignRule align = AlignRule::last;   // target alignment after a grid change

    // kind-specific hyperparameters
    double constant = 1.0;               // constant_scale
    AggRule agg_rule = AggRule::mean;    // windowed_aggregation
    std::int64_t window = 1;             // windowed_aggregation, stft
    std::int64_t hop = 1;                // windowed_aggregation, stft
    std::int64_t n_fft = 0;              // stft
    StftPostMap post_map = StftPostMap::magnitude;
    StatsDomain domain = StatsDomain::time;       // segment_stats
    std::vector<StatKind> stats;                  // segment_stats
    std::int64_t subsample_rate = 1;              // subsample
    std::int64_t pad_length = 0;                  // pad_to_length
    double pad_value = 0.0;
    RepairMode repair_mode = RepairMode::zero;    // repair
    CorruptMode corrupt_mode = CorruptMode::point;
    double corrupt_rate = 0.0;
    std::int64_t block_min = 1;
    std::int64_t block_max = 1;
    std::uint64_t seed = 0;                       // corrupt
    std::map<std::string, double> lifetimes;      // health_index; metadata fallback

    bool stateful() const;
    std::string output_key() const { return assign_to.empty() ? apply_to.front() : assign_to; }

    /// Throws SpecError on invalid hyperparameters or routing.
    void check() const;
};

// ---------------------------------------------------------------------------
// Fitting

/// Train-partition view handed to fit_stage. Slices reference series stored
/// in a container; row_limit restricts consumption to a chronological prefix
/// (intra-unit splits) with a negative value meaning "all rows".
struct FitInput {
    struct UnitSlice {
        std::string unit_id;
        const Series* series = nullptr;
        const std::map<std::string, std::string>* metadata = nullptr;
        std::int64_t row_limit = -1;
    };
    Split tag = Split::train;
    std::vector<UnitSlice> units;   // ascending unit_id
};

/// Estimates the stage's parameters on training data only. Throws
/// LeakageFault when the input is not tagged train. Stateless kinds return
/// an empty state with a stable fingerprint.
FittedTransformState fit_stage(const TransformStageSpec& spec, const FitInput& train_data);

// ---------------------------------------------------------------------------
// Per-kind apply operations. Grid-changing operations return the local
// support map: new index -> index/interval on the input grid.

Matrix apply_pointwise_scale(TransformKind kind, const FittedTransformState& state,
                             const Matrix& x, Direction direction,
                             const std::string& unit_id = {});

std::pair<Matrix, SupportMap> apply_windowed_aggregation(AggRule rule, std::int64_t window,
                                                         std::int64_t hop, const Matrix& x);

std::pair<Matrix, SupportMap> apply_stft(std::int64_t window, std::int64_t hop,
                                         std::int64_t n_fft, StftPostMap post_map,
                                         const Matrix& x);

std::pair<Matrix, SupportMap> apply_segment_stats(StatsDomain domain,
                                                  const std::vector<StatKind>& stats,
                                                  const Matrix& x);

Matrix apply_cumsum_squared(const Matrix& x);

std::pair<Matrix, SupportMap> apply_subsample(std::int64_t rate, const Matrix& x);

/// Channel-axis concatenation. All inputs must share length and identical
/// supports; the first input's support is preserved.
Series apply_concatenate(const std::vector<const Series*>& inputs);

std::pair<Matrix, SupportMap> apply_pad_to_length(std::int64_t pad_length, double pad_value,
                                                  const Matrix& x);

Matrix apply_repair(RepairMode mode, const FittedTransformState& state, const Matrix& x);

struct CorruptResult {
    Matrix values;
    double realized_ratio = 0.0;
};

CorruptResult apply_corrupt(const TransformStageSpec& spec, std::uint64_t seed, const Matrix& x);

/// Health index HI = 1 - runtime / lifetime (forward); runtime = lifetime *
/// (1 - HI) (inverse). Values must lie in [0, lifetime] going forward.
Matrix apply_health_index(double lifetime, const Matrix& runtime, Direction direction);

/// Lookup from sorted unique training dataset ids to codes 1..N.
std::vector<std::string> fit_concept_lookup(std::vector<std::string> train_dataset_ids);

/// (lambda(d) - 1) * d_c + sum_m m*c_m for a concept vector with exactly one
/// active coordinate after rounding.
std::int64_t encode_concept_class(const std::vector<std::string>& lookup,
                                  const std::vector<double>& concept_vector,
                                  const std::string& dataset_id);

/// Aligns raw-grid targets onto a transformed grid: pointwise for timestamp
/// supports, rule-based aggregation for intervals. Majority ties break
/// toward the smallest class code.
std::vector<double> align_target(const std::vector<double>& targets, const SupportMap& support,
                                 AlignRule rule);

/// Maps a local support (entries on the previous grid) through the previous
/// grid's raw support. Interval entries take the conservative union span.
SupportMap compose_support(const SupportMap& previous, const SupportMap& local);

// ---------------------------------------------------------------------------
// Pipeline execution

/// Per-unit chronological fit limits for intra-unit splits, in raw indices.
/// Empty means the whole train partition may be consumed.
struct FitPolicy {
    std::map<std::string, std::int64_t> intra_raw_train_limit;
};

/// What one executed stage did: fitted state, which raw prefix each unit
/// contributed to the fit, and stage-specific reporting.
struct StageExecutionRecord {
    std::string stage_name;
    std::string kind;
    FittedTransformState state;
    std::map<std::string, std::int64_t> fit_consumed_raw_max;
    std::map<std::string, double> corrupt_realized_ratio;
};

/// Execution counters used by the cache tests to prove which stages ran.
struct PipelineCounters {
    std::vector<std::int64_t> stage_executions;
};

struct PipelineResult {
    SplitContainer container;
    std::vector<StageExecutionRecord> records;
};

/// Runs the pipeline on a validated container: per stage, fit on train (if
/// stateful), apply with frozen state to train, val and test, compose
/// supports, and align the target wherever a stage changes the feature
/// grid. `start_index` resumes after a cached boundary; `stop_index` lets
/// the orchestrator pause after a checkpoint stage. Deterministic in
/// (container, pipeline).
PipelineResult run_pipeline(const SplitContainer& container,
                            const std::vector<TransformStageSpec>& pipeline,
                            const FitPolicy& policy = {},
                            std::size_t start_index = 0,
                            PipelineCounters* counters = nullptr,
                            std::size_t stop_index = std::size_t(-1));

} // namespace phmkit
