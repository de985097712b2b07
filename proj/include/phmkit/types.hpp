#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "phmkit/errors.hpp"

namespace phmkit {

/// Dense row-major matrix of 64-bit floats. Missing values are quiet-NaN.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    const double* row_ptr(std::size_t r) const { return data_.data() + r * cols_; }
    double* row_ptr(std::size_t r) { return data_.data() + r * cols_; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool operator==(const Matrix& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Raw-time support of one transformed index: a 1-based timestamp (lo == hi)
/// or an inclusive interval [lo, hi]. Padding stages mark appended indices
/// as artificial; those carry no raw-time evidence and cannot be aligned.
struct SupportEntry {
    std::int64_t lo = 0;
    std::int64_t hi = 0;
    bool artificial = false;

    bool is_timestamp() const { return lo == hi && !artificial; }
    bool operator==(const SupportEntry&) const = default;

    static SupportEntry timestamp(std::int64_t t) { return {t, t, false}; }
    static SupportEntry interval(std::int64_t lo, std::int64_t hi) { return {lo, hi, false}; }
    static SupportEntry artificial_entry() { return {0, 0, true}; }
};

/// Support map a(j) for a transformed series: entry j-1 lists the raw
/// indices that produced transformed index j.
struct SupportMap {
    std::vector<SupportEntry> entries;

    std::size_t size() const { return entries.size(); }

    static SupportMap identity(std::size_t t) {
        SupportMap m;
        m.entries.reserve(t);
        for (std::size_t i = 1; i <= t; ++i) {
            m.entries.push_back(SupportEntry::timestamp(std::int64_t(i)));
        }
        return m;
    }

    /// Checks entry ordering and raw-index bounds against a raw length.
    /// Returns violation messages; empty when well formed.
    std::vector<std::string> validate(std::int64_t raw_len) const;

    bool operator==(const SupportMap&) const = default;
};

/// One monitored unit's raw trajectory.
struct RawUnit {
    std::string unit_id;
    Matrix x;                  // T x M sensor values
    std::vector<double> y;     // length-T task target
    std::vector<std::string> channel_names;
    std::map<std::string, std::string> metadata;

    std::size_t length() const { return y.size(); }

    /// Throws IntegrityError when the structural invariants are broken.
    void check() const;
};

enum class Split { train, val, test };

const char* split_name(Split s);
Split split_from_name(const std::string& name);

inline constexpr Split kAllSplits[] = {Split::train, Split::val, Split::test};

/// Chronological split boundaries for one unit, expressed on the
/// transformed grid: train is j <= tau_train, val is tau_train < j <= tau_val.
struct IntraBoundaries {
    std::int64_t tau_train = 0;
    std::int64_t tau_val = 0;

    bool operator==(const IntraBoundaries&) const = default;
};

enum class SplitMode { inter_unit, intra_unit };

/// Unit -> split mapping (inter-unit) or per-unit chronological boundaries
/// (intra-unit).
struct SplitAssignment {
    SplitMode mode = SplitMode::inter_unit;
    std::map<std::string, Split> inter;
    std::map<std::string, IntraBoundaries> intra;

    bool operator==(const SplitAssignment&) const = default;
};

/// One named data block for one unit: a values matrix on some temporal grid
/// plus the raw-time support of that grid.
struct Series {
    Matrix values;
    SupportMap support;
    std::vector<std::string> channel_names;

    std::size_t length() const { return values.rows(); }
    std::size_t width() const { return values.cols(); }

    bool operator==(const Series&) const = default;
};

/// All keyed series of one unit inside a split container.
struct UnitData {
    std::string unit_id;
    std::int64_t raw_length = 0;
    std::map<std::string, Series> keys;
    std::map<std::string, std::string> metadata;

    bool operator==(const UnitData&) const = default;
};

/// Transformed features, aligned targets and their shared support for one
/// unit. rows(z) == y.size() == support.size() by construction.
struct AlignedSeries {
    std::string unit_id;
    Matrix z;
    std::vector<double> y;
    SupportMap support;

    /// Throws IntegrityError on length mismatch.
    void check() const;
};

/// Split-keyed transport of per-unit data plus the assignment that produced
/// it. Immutable by convention: transforms return new containers.
///
/// Inter-unit mode stores each unit under exactly one split. Intra-unit mode
/// stores a copy of every unit under each split; membership of individual
/// windows is decided later by their supervision index.
struct SplitContainer {
    SplitAssignment assignment;
    std::map<Split, std::vector<UnitData>> splits;        // sorted by unit_id
    std::map<Split, std::vector<std::string>> stage_history;
    std::string feature_key = "features";
    std::string target_key = "target";

    const std::vector<UnitData>& units(Split s) const;
    std::vector<UnitData>& units(Split s);

    /// Extracts the (features, target, support) view used by the windowing
    /// stage. Throws IntegrityError if the two keys live on different grids.
    AlignedSeries aligned_view(const UnitData& unit) const;
};

enum class PadPolicy { replicate_edge, zeros };

/// Windowing parameters on the transformed grid.
struct WindowSpec {
    std::int64_t l_seq = 1;        // history length
    std::int64_t stride = 1;       // gap between window starts
    std::int64_t warm_start = 0;   // permitted left extension (rho)
    std::int64_t offset = 0;       // supervision offset after window end (delta)
    std::int64_t pred_len = 1;     // supervision segment length
    std::int64_t lbl_len = 0;      // multi-step overlap; 0 = single-step
    PadPolicy pad_policy = PadPolicy::replicate_edge;

    bool multi_step() const { return lbl_len > 0; }

    /// Throws SpecError when the admissibility preconditions are violated.
    void check() const;

    /// Required right-side coverage per window.
    std::int64_t coverage() const { return l_seq + offset + pred_len; }

    std::int64_t supervision_index(std::int64_t k) const { return k + l_seq - 1 + offset; }
};

/// One supervised instance (W_k, y_k) with its global identity.
struct WindowSample {
    std::string unit_id;
    std::int64_t k = 0;       // start index, may be <= 0 under warm start
    std::int64_t j_sup = 0;   // supervision index on the transformed grid
    Matrix w;                 // l_seq x F
    std::vector<double> y;    // scalar (size 1) or multi-step segment
    Split split = Split::train;

    double label() const { return y.front(); }
};

/// Flattened dual of a window sample, time-major.
struct TabularSample {
    std::string unit_id;
    std::int64_t k = 0;
    std::int64_t j_sup = 0;
    std::vector<double> x;    // length l_seq * F
    double y = 0.0;
    Split split = Split::train;
};

/// Parameters of one fitted pipeline stage, stamped with the split they were
/// estimated on and a content fingerprint.
struct FittedTransformState {
    std::string stage_name;
    std::string kind;
    std::string fitted_on = "none";                         // "train" for stateful stages
    std::map<std::string, std::vector<double>> params;      // named float vectors/scalars
    std::map<std::string, std::vector<std::string>> lookups; // e.g. dataset-id tables
    std::string fingerprint;                                 // 64 hex chars

    bool empty() const { return params.empty() && lookups.empty(); }

    /// Recomputes the content fingerprint from the current params.
    std::string compute_fingerprint() const;
    void seal() { fingerprint = compute_fingerprint(); }
};

/// Structural validation of a whole container. Violations are data, not
/// faults: the returned list is empty on success and never throws.
std::vector<std::string> validate_container(const SplitContainer& container);

} // namespace phmkit
