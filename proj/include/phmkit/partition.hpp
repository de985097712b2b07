#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "phmkit/types.hpp"

namespace phmkit {

/// Window samples routed into the three partitions. Disjoint and exhaustive
/// over the input by construction.
struct RoutedWindows {
    std::vector<WindowSample> train;
    std::vector<WindowSample> val;
    std::vector<WindowSample> test;

    std::vector<WindowSample>& of(Split s);
    const std::vector<WindowSample>& of(Split s) const;
};

/// Routes samples under the assignment: whole units in inter-unit mode, by
/// supervision index against the unit's boundaries in intra-unit mode.
RoutedWindows route_windows(const std::vector<WindowSample>& samples,
                            const SplitAssignment& assignment);

// ---------------------------------------------------------------------------
// Leakage audit

/// What a finished run recorded about its fits, for after-the-fact auditing.
struct RunAuditRecord {
    SplitMode mode = SplitMode::inter_unit;

    struct FittedStage {
        std::string stage_name;
        std::string fitted_on;                              // split tag used for fitting
        std::map<std::string, std::int64_t> consumed_raw_max;   // unit -> max raw index
    };
    std::vector<FittedStage> stages;

    /// Intra-unit mode: per unit, the largest raw index covered by the
    /// composed support of transformed indices <= tau_train.
    std::map<std::string, std::int64_t> train_boundary_raw_max;

    /// Sample identities per split, for disjointness checking.
    std::map<std::string, std::vector<std::pair<std::string, std::int64_t>>> split_members;
};

/// Reports every leakage-policy violation in the record: fits on non-train
/// data, intra-unit fits that consumed indices past the training boundary,
/// and split-set intersections. Empty report = compliant run.
std::vector<std::string> leakage_audit(const RunAuditRecord& record);

// ---------------------------------------------------------------------------
// Context selection

enum class ContextSelection { nearest_by_feature, uniform_random };

/// Constraints on the labeled context handed to in-context predictors.
struct ContextSpec {
    std::size_t size = 1;
    ContextSelection selection = ContextSelection::nearest_by_feature;
    std::uint64_t seed = 0;
    bool enforce_intra_boundary = true;

    void check() const;
};

/// Builds the ordered context for one query: the query itself is always
/// excluded (matched by unit and start index); under intra-unit enforcement,
/// same-unit pool members whose supervision index exceeds the unit's
/// training boundary are filtered out. Deterministic in (query, pool, spec).
std::vector<const TabularSample*> select_context(const TabularSample& query,
                                                 const std::vector<TabularSample>& pool,
                                                 const ContextSpec& spec,
                                                 const SplitAssignment& assignment);

} // namespace phmkit
