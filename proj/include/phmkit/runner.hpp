#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "phmkit/cache.hpp"
#include "phmkit/datasource.hpp"
#include "phmkit/evaluator.hpp"
#include "phmkit/models.hpp"
#include "phmkit/partition.hpp"
#include "phmkit/transforms.hpp"
#include "phmkit/types.hpp"

namespace phmkit {

const char* tool_version();

/// Fingerprint of the library's own sources, baked in at build time: the
/// SHA-256 of a sorted (path, file digest) manifest.
const char* code_fingerprint();

enum class SourceKind { synthetic, csv };
enum class Aggregation { window, per_unit, both };

/// A fully resolved run configuration. `resolved` holds the canonical JSON
/// with every default materialized; its digest identifies the run.
struct RunConfig {
    std::uint64_t seed = 0;

    SourceKind source_kind = SourceKind::synthetic;
    SyntheticSpec synthetic;
    std::filesystem::path csv_path;
    CsvSchema csv_schema;

    SplitMode split_mode = SplitMode::inter_unit;
    std::map<std::string, Split> split_units;   // inter-unit
    double train_frac = 0.6;                    // intra-unit
    double val_frac = 0.8;

    std::vector<TransformStageSpec> transforms;
    WindowSpec window;

    ModelKind model_kind = ModelKind::mean;
    ModelTask task = ModelTask::regression;
    std::size_t knn_k = 1;
    ContextSpec context;

    Aggregation aggregation = Aggregation::window;
    std::vector<std::string> metrics;
    bool descale = false;
    double phm_epsilon = 1e-8;
    double nasa_a_early = 13.0;
    double nasa_a_late = 10.0;
    std::int64_t class_count = 0;   // classification; 0 = from datasource

    std::optional<std::filesystem::path> cache_dir;
    bool dump_predictions = false;

    nlohmann::json resolved;
};

/// Strict parser: unknown keys are rejected with their path, defaults are
/// filled in, and the returned config carries the self-contained resolved
/// document that gets hashed.
RunConfig parse_config(const std::string& json_text);
RunConfig parse_config_file(const std::filesystem::path& path);

struct RunOptions {
    std::optional<std::filesystem::path> out_dir;     // no artifacts when unset
    std::optional<std::filesystem::path> cache_dir;   // overrides config
    bool no_cache = false;
    std::optional<std::uint64_t> seed_override;
};

/// Everything a finished run produced.
struct RunResult {
    MetricReport val_report;
    MetricReport test_report;
    std::string metric_digest;       // sha256 of the canonical metrics document
    std::string config_digest;
    nlohmann::json manifest;
    PipelineCounters counters;       // stage executions during this run
    std::int64_t test_target_reads_before_eval = 0;
    std::filesystem::path out_dir;   // empty when no artifacts were written
};

/// Executes load -> split -> transform (cached) -> window -> route -> fit ->
/// predict -> evaluate, writes artifacts, and returns the reports plus the
/// reproduction manifest. Deterministic in (config, seed, code).
RunResult execute_run(const RunConfig& config, const RunOptions& options = {});

struct ReplayResult {
    bool identical = false;
    std::string recorded_digest;
    std::string replayed_digest;
};

/// Re-executes a run from its stored resolved config and compares metric
/// digests. Refuses when the current code fingerprint differs from the
/// manifest unless `allow_code_drift`.
ReplayResult replay(const std::filesystem::path& run_dir, bool allow_code_drift = false);

/// Reconstructs the audit record from a run directory's manifest and
/// returns the leakage violations (empty = compliant).
std::vector<std::string> audit_run(const std::filesystem::path& run_dir);

} // namespace phmkit
