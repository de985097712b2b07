#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "phmkit/types.hpp"

namespace phmkit {

/// Column mapping for long-format CSV ingestion. When `feature_cols` is
/// empty, every column whose name starts with "f_" is taken as a feature, in
/// header order.
struct CsvSchema {
    std::string unit_col = "unit_id";
    std::string time_col = "t";
    std::vector<std::string> feature_cols;
    std::string target_col = "y";
};

/// Loads one long-format CSV file into per-unit trajectories. Rows are
/// grouped by unit and sorted by time; time indices must form 1..T per unit.
/// Units are returned sorted by unit_id.
std::vector<RawUnit> load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});

/// Writes units back to the same long format (used by round-trip tests and
/// the CLI's dataset export).
void write_csv(const std::filesystem::path& path, const std::vector<RawUnit>& units);

enum class DegradationShape { linear, exponential, piecewise };
enum class TaskKind { prognostics, diagnostics };

/// Parameters of the synthetic run-to-failure generator.
struct SyntheticSpec {
    std::int64_t n_units = 4;
    std::int64_t t_min = 40;
    std::int64_t t_max = 60;
    std::int64_t channels = 3;
    DegradationShape shape = DegradationShape::linear;
    double noise_std = 0.0;
    std::uint64_t seed = 0;
    TaskKind task = TaskKind::prognostics;
    std::int64_t class_count = 3;   // diagnostics only

    void check() const;
};

/// Deterministic synthetic generator: two calls with an identical spec yield
/// bit-identical units. Prognostics targets are RUL = T - t before optional
/// noise; diagnostics targets are piecewise-constant class codes in
/// [0, class_count).
std::vector<RawUnit> generate_synthetic(const SyntheticSpec& spec);

enum class SignConvention { positive_discharge, negative_discharge };
enum class EolRule { last_cycle, threshold };

/// Parameters of the ampere-hour RUL target construction.
struct AhRulSpec {
    double q_nom = 1.0;                       // nominal capacity, > 0
    std::string current_channel = "current";
    std::string cycle_channel = "cycle";      // per-row cycle number, 1-based
    std::string capacity_channel;             // threshold mode only
    SignConvention sign = SignConvention::positive_discharge;
    EolRule eol = EolRule::last_cycle;
    double eol_threshold = 0.0;
    double sample_dt = 1.0;                   // spacing of within-cycle samples

    void check() const;
};

/// Remaining normalized discharge throughput per cycle. `cycle_currents[n]`
/// holds the within-cycle current samples of cycle n+1, integrated by the
/// trapezoidal rule at `sample_dt` spacing. `cycle_capacity` is consulted in
/// threshold mode only (end of life = first cycle whose capacity drops below
/// the threshold). Output: Q_rul per cycle, 0 at and after end of life.
std::vector<double> construct_ah_rul(const std::vector<std::vector<double>>& cycle_currents,
                                     const AhRulSpec& spec,
                                     const std::vector<double>& cycle_capacity = {});

/// RawUnit adapter: rows are grouped by the cycle channel, the current
/// channel provides within-cycle samples, and every row receives the Q_rul
/// of its cycle. Returns a length-T vector aligned with the unit's rows.
std::vector<double> construct_ah_rul(const RawUnit& unit, const AhRulSpec& spec);

} // namespace phmkit
