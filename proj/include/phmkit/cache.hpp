#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "phmkit/transforms.hpp"
#include "phmkit/types.hpp"

namespace phmkit {

enum class CacheTier { loaded, boundary, preprocessed };

const char* cache_tier_name(CacheTier tier);

/// Content address of one cached pipeline state.
struct CacheKey {
    std::string hex;                     // 64 lowercase hex chars
    CacheTier tier = CacheTier::loaded;
    std::int64_t boundary_index = -1;    // stage index, boundary tier only

    bool operator==(const CacheKey&) const = default;
};

/// Canonical JSON bytes: lexicographically sorted keys, no insignificant
/// whitespace, shortest round-trip floats, UTF-8. Throws SpecError on
/// non-finite numbers, which have no canonical JSON form.
std::string canonical_json(const nlohmann::json& value);

/// SHA-256 over (tier tag || canonical datasource config || canonical
/// transform-prefix config || code fingerprint). Boundary keys embed the
/// stage index in the tier tag, so they depend only on the pipeline prefix.
CacheKey cache_key(const nlohmann::json& datasource_config,
                   const nlohmann::json& transform_prefix_config,
                   const std::string& code_fingerprint, CacheTier tier,
                   std::int64_t boundary_index = -1);

/// Writes the payload under its key: atomic (temp file + rename), preceded
/// by a versioned header, serialized against concurrent writers by an
/// advisory per-key lock file. Re-storing identical content leaves
/// identical bytes.
void store(const CacheKey& key, const std::string& payload,
           const std::filesystem::path& cache_dir, int lock_timeout_ms = 10000);

/// Reads and validates one entry. Corrupt entries (bad header or checksum)
/// are quarantined by renaming to .corrupt and reported as a miss.
std::optional<std::string> read_entry(const CacheKey& key,
                                      const std::filesystem::path& cache_dir);

/// Key set for one run, mirroring the three cache tiers.
struct TierKeys {
    CacheKey preprocessed;
    std::vector<CacheKey> boundaries;   // pipeline order; may be empty
    CacheKey loaded;
};

struct CacheHit {
    CacheTier tier = CacheTier::loaded;
    /// First pipeline stage that still has to run (stage count = fully
    /// preprocessed).
    std::int64_t resume_index = 0;
    std::string payload;
};

/// Deepest-hit search: fully preprocessed first, then boundary checkpoints
/// from the last one backwards, then the loaded tier.
std::optional<CacheHit> lookup(const TierKeys& keys, std::int64_t stage_count,
                               const std::filesystem::path& cache_dir);

/// Bit-stable container serialization: little-endian, length-prefixed,
/// fixed field order, map keys sorted, floats as raw IEEE-754 bits.
std::string serialize_container(const SplitContainer& container);

/// Inverse of serialize_container. Throws CacheError on malformed bytes or
/// an unknown format version.
SplitContainer deserialize_container(const std::string& bytes);

/// A cached checkpoint bundles the container with the execution records of
/// every stage already applied to it, so resumed runs keep the fitted
/// states (descaling, auditing) without re-fitting.
struct PipelineCheckpoint {
    SplitContainer container;
    std::vector<StageExecutionRecord> records;
};

std::string serialize_checkpoint(const SplitContainer& container,
                                 const std::vector<StageExecutionRecord>& records);
PipelineCheckpoint deserialize_checkpoint(const std::string& bytes);

} // namespace phmkit
