#include "phmkit/cache.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <fstream>
#include <thread>

#include "phmkit/sha256.hpp"

namespace phmkit {

namespace fs = std::filesystem;

const char* cache_tier_name(CacheTier tier) {
    switch (tier) {
    case CacheTier::loaded: return "loaded";
    case CacheTier::boundary: return "boundary";
    case CacheTier::preprocessed: return "preprocessed";
    }
    return "?";
}

namespace {

void reject_non_finite(const nlohmann::json& value, const std::string& path) {
    if (value.is_number_float()) {
        double d = value.get<double>();
        if (!std::isfinite(d)) {
            throw SpecError("canonicalization error: non-finite number at " + path);
        }
    } else if (value.is_object()) {
        for (const auto& [k, v] : value.items()) {
            reject_non_finite(v, path + "." + k);
        }
    } else if (value.is_array()) {
        std::size_t i = 0;
        for (const auto& v : value) {
            reject_non_finite(v, path + "[" + std::to_string(i++) + "]");
        }
    }
}

} // namespace

std::string canonical_json(const nlohmann::json& value) {
    reject_non_finite(value, "$");
    // nlohmann object keys are kept in sorted order, dump() emits no
    // insignificant whitespace and shortest round-trip decimals.
    return value.dump();
}

CacheKey cache_key(const nlohmann::json& datasource_config,
                   const nlohmann::json& transform_prefix_config,
                   const std::string& code_fingerprint, CacheTier tier,
                   std::int64_t boundary_index) {
    std::string tier_tag = cache_tier_name(tier);
    if (tier == CacheTier::boundary) {
        if (boundary_index < 0) {
            throw SpecError("boundary cache key requires a stage index");
        }
        tier_tag += ":" + std::to_string(boundary_index);
    }
    Sha256 h;
    h.update(tier_tag);
    h.update("\x1f");
    h.update(canonical_json(datasource_config));
    h.update("\x1f");
    h.update(canonical_json(transform_prefix_config));
    h.update("\x1f");
    h.update(code_fingerprint);

    CacheKey key;
    key.hex = to_hex(h.finish());
    key.tier = tier;
    key.boundary_index = tier == CacheTier::boundary ? boundary_index : -1;
    return key;
}

namespace {

constexpr char kMagic[4] = {'P', 'H', 'M', 'C'};
constexpr std::uint16_t kFileVersion = 1;
constexpr std::size_t kHeaderSize = 4 + 2 + 32 + 32;

std::array<std::uint8_t, 32> key_bytes(const CacheKey& key) {
    std::array<std::uint8_t, 32> out{};
    auto nibble = [](char c) -> std::uint8_t {
        if (c >= '0' && c <= '9') return std::uint8_t(c - '0');
        if (c >= 'a' && c <= 'f') return std::uint8_t(c - 'a' + 10);
        throw SpecError("cache key is not lowercase hex");
    };
    if (key.hex.size() != 64) {
        throw SpecError("cache key must be 64 hex chars");
    }
    for (std::size_t i = 0; i < 32; ++i) {
        out[i] = std::uint8_t(nibble(key.hex[2 * i]) << 4) | nibble(key.hex[2 * i + 1]);
    }
    return out;
}

fs::path entry_path(const CacheKey& key, const fs::path& cache_dir) {
    return cache_dir / cache_tier_name(key.tier) / (key.hex + ".bin");
}

/// RAII advisory lock on <key>.lock next to the entry.
class FileLock {
public:
    FileLock(const fs::path& lock_path, int timeout_ms) {
        fd_ = ::open(lock_path.c_str(), O_CREAT | O_RDWR, 0644);
        if (fd_ < 0) {
            throw CacheError("cannot open lock file '" + lock_path.string() + "'");
        }
        auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::milliseconds(timeout_ms);
        while (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
            if (std::chrono::steady_clock::now() >= deadline) {
                ::close(fd_);
                fd_ = -1;
                throw CacheError("cache-busy: timed out waiting for '" + lock_path.string() +
                                 "'");
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
        }
    }
    ~FileLock() {
        if (fd_ >= 0) {
            ::flock(fd_, LOCK_UN);
            ::close(fd_);
        }
    }
    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;

private:
    int fd_ = -1;
};

} // namespace

void store(const CacheKey& key, const std::string& payload, const fs::path& cache_dir,
           int lock_timeout_ms) {
    fs::path path = entry_path(key, cache_dir);
    fs::create_directories(path.parent_path());

    FileLock lock(path.parent_path() / (key.hex + ".lock"), lock_timeout_ms);

    std::string bytes;
    bytes.reserve(kHeaderSize + payload.size());
    bytes.append(kMagic, 4);
    bytes.push_back(char(kFileVersion & 0xff));
    bytes.push_back(char(kFileVersion >> 8));
    auto kb = key_bytes(key);
    bytes.append(reinterpret_cast<const char*>(kb.data()), kb.size());
    auto checksum = Sha256::digest(payload);
    bytes.append(reinterpret_cast<const char*>(checksum.data()), checksum.size());
    bytes.append(payload);

    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw CacheError("cannot write '" + tmp.string() + "'");
        }
        out.write(bytes.data(), std::streamsize(bytes.size()));
        if (!out) {
            throw CacheError("short write to '" + tmp.string() + "'");
        }
    }
    fs::rename(tmp, path);
}

std::optional<std::string> read_entry(const CacheKey& key, const fs::path& cache_dir) {
    fs::path path = entry_path(key, cache_dir);
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        return std::nullopt;
    }
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();

    auto quarantine = [&]() -> std::optional<std::string> {
        std::error_code ec;
        fs::rename(path, path.string() + ".corrupt", ec);
        return std::nullopt;
    };

    if (bytes.size() < kHeaderSize || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        return quarantine();
    }
    std::uint16_t version = std::uint16_t(std::uint8_t(bytes[4])) |
                            std::uint16_t(std::uint8_t(bytes[5])) << 8;
    if (version != kFileVersion) {
        return quarantine();
    }
    auto kb = key_bytes(key);
    if (std::memcmp(bytes.data() + 6, kb.data(), 32) != 0) {
        return quarantine();
    }
    std::string payload = bytes.substr(kHeaderSize);
    auto checksum = Sha256::digest(payload);
    if (std::memcmp(bytes.data() + 6 + 32, checksum.data(), 32) != 0) {
        return quarantine();
    }
    return payload;
}

std::optional<CacheHit> lookup(const TierKeys& keys, std::int64_t stage_count,
                               const fs::path& cache_dir) {
    if (auto payload = read_entry(keys.preprocessed, cache_dir)) {
        return CacheHit{CacheTier::preprocessed, stage_count, std::move(*payload)};
    }
    for (auto it = keys.boundaries.rbegin(); it != keys.boundaries.rend(); ++it) {
        if (auto payload = read_entry(*it, cache_dir)) {
            return CacheHit{CacheTier::boundary, it->boundary_index + 1, std::move(*payload)};
        }
    }
    if (auto payload = read_entry(keys.loaded, cache_dir)) {
        return CacheHit{CacheTier::loaded, 0, std::move(*payload)};
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Container serialization

namespace {

constexpr std::uint16_t kContainerVersion = 1;

class Writer {
public:
    std::string take() { return std::move(buffer_); }

    void u8(std::uint8_t v) { buffer_.push_back(char(v)); }
    void u16(std::uint16_t v) {
        for (int i = 0; i < 2; ++i) buffer_.push_back(char(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buffer_.push_back(char(v >> (8 * i)));
    }
    void i64(std::int64_t v) { u64(std::uint64_t(v)); }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        u64(bits);
    }
    void str(const std::string& s) {
        u64(s.size());
        buffer_.append(s);
    }

private:
    std::string buffer_;
};

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    std::uint8_t u8() {
        need(1);
        return std::uint8_t(bytes_[pos_++]);
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = 0;
        for (int i = 0; i < 2; ++i) v |= std::uint16_t(std::uint8_t(bytes_[pos_++])) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(bytes_[pos_++])) << (8 * i);
        return v;
    }
    std::int64_t i64() { return std::int64_t(u64()); }
    double f64() {
        std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }
    std::string str() {
        std::uint64_t n = u64();
        return raw_bytes(n);
    }
    std::string raw_bytes(std::uint64_t n) {
        need(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::uint64_t n) {
        if (pos_ + n > bytes_.size()) {
            throw CacheError("container payload truncated");
        }
    }
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

void write_series(Writer& w, const Series& s) {
    w.u64(s.values.rows());
    w.u64(s.values.cols());
    for (double v : s.values.data()) {
        w.f64(v);
    }
    w.u64(s.support.entries.size());
    for (const SupportEntry& e : s.support.entries) {
        w.i64(e.lo);
        w.i64(e.hi);
        w.u8(e.artificial ? 1 : 0);
    }
    w.u64(s.channel_names.size());
    for (const auto& name : s.channel_names) {
        w.str(name);
    }
}

Series read_series(Reader& r) {
    Series s;
    std::uint64_t rows = r.u64();
    std::uint64_t cols = r.u64();
    s.values = Matrix(rows, cols);
    for (auto& v : s.values.data()) {
        v = r.f64();
    }
    std::uint64_t n_support = r.u64();
    s.support.entries.resize(n_support);
    for (auto& e : s.support.entries) {
        e.lo = r.i64();
        e.hi = r.i64();
        e.artificial = r.u8() != 0;
    }
    std::uint64_t n_names = r.u64();
    s.channel_names.resize(n_names);
    for (auto& name : s.channel_names) {
        name = r.str();
    }
    return s;
}

} // namespace

std::string serialize_container(const SplitContainer& container) {
    Writer w;
    w.u16(kContainerVersion);
    w.u8(container.assignment.mode == SplitMode::inter_unit ? 0 : 1);

    w.u64(container.assignment.inter.size());
    for (const auto& [unit, split] : container.assignment.inter) {
        w.str(unit);
        w.u8(std::uint8_t(split));
    }
    w.u64(container.assignment.intra.size());
    for (const auto& [unit, b] : container.assignment.intra) {
        w.str(unit);
        w.i64(b.tau_train);
        w.i64(b.tau_val);
    }

    w.str(container.feature_key);
    w.str(container.target_key);

    for (Split s : kAllSplits) {
        auto it = container.stage_history.find(s);
        const auto& hist = it == container.stage_history.end() ? std::vector<std::string>{}
                                                               : it->second;
        w.u64(hist.size());
        for (const auto& entry : hist) {
            w.str(entry);
        }
    }

    for (Split s : kAllSplits) {
        const auto& units = container.units(s);
        w.u64(units.size());
        for (const UnitData& unit : units) {
            w.str(unit.unit_id);
            w.i64(unit.raw_length);
            w.u64(unit.keys.size());
            for (const auto& [key, series] : unit.keys) {   // std::map: sorted
                w.str(key);
                write_series(w, series);
            }
            w.u64(unit.metadata.size());
            for (const auto& [k, v] : unit.metadata) {
                w.str(k);
                w.str(v);
            }
        }
    }
    return w.take();
}

SplitContainer deserialize_container(const std::string& bytes) {
    Reader r(bytes);
    std::uint16_t version = r.u16();
    if (version != kContainerVersion) {
        throw CacheError("unknown container format version " + std::to_string(version));
    }
    SplitContainer container;
    container.assignment.mode = r.u8() == 0 ? SplitMode::inter_unit : SplitMode::intra_unit;

    std::uint64_t n_inter = r.u64();
    for (std::uint64_t i = 0; i < n_inter; ++i) {
        std::string unit = r.str();
        container.assignment.inter[unit] = Split(r.u8());
    }
    std::uint64_t n_intra = r.u64();
    for (std::uint64_t i = 0; i < n_intra; ++i) {
        std::string unit = r.str();
        IntraBoundaries b;
        b.tau_train = r.i64();
        b.tau_val = r.i64();
        container.assignment.intra[unit] = b;
    }

    container.feature_key = r.str();
    container.target_key = r.str();

    for (Split s : kAllSplits) {
        std::uint64_t n = r.u64();
        auto& hist = container.stage_history[s];
        hist.resize(n);
        for (auto& entry : hist) {
            entry = r.str();
        }
    }

    for (Split s : kAllSplits) {
        std::uint64_t n_units = r.u64();
        auto& units = container.units(s);
        units.resize(n_units);
        for (auto& unit : units) {
            unit.unit_id = r.str();
            unit.raw_length = r.i64();
            std::uint64_t n_keys = r.u64();
            for (std::uint64_t k = 0; k < n_keys; ++k) {
                std::string key = r.str();
                unit.keys[key] = read_series(r);
            }
            std::uint64_t n_meta = r.u64();
            for (std::uint64_t m = 0; m < n_meta; ++m) {
                std::string key = r.str();
                unit.metadata[key] = r.str();
            }
        }
    }

    if (!r.done()) {
        throw CacheError("trailing bytes after container payload");
    }
    return container;
}

namespace {

void write_state(Writer& w, const FittedTransformState& state) {
    w.str(state.stage_name);
    w.str(state.kind);
    w.str(state.fitted_on);
    w.str(state.fingerprint);
    w.u64(state.params.size());
    for (const auto& [name, values] : state.params) {
        w.str(name);
        w.u64(values.size());
        for (double v : values) {
            w.f64(v);
        }
    }
    w.u64(state.lookups.size());
    for (const auto& [name, items] : state.lookups) {
        w.str(name);
        w.u64(items.size());
        for (const auto& item : items) {
            w.str(item);
        }
    }
}

FittedTransformState read_state(Reader& r) {
    FittedTransformState state;
    state.stage_name = r.str();
    state.kind = r.str();
    state.fitted_on = r.str();
    state.fingerprint = r.str();
    std::uint64_t n_params = r.u64();
    for (std::uint64_t i = 0; i < n_params; ++i) {
        std::string name = r.str();
        std::uint64_t n = r.u64();
        std::vector<double> values(n);
        for (auto& v : values) {
            v = r.f64();
        }
        state.params[name] = std::move(values);
    }
    std::uint64_t n_lookups = r.u64();
    for (std::uint64_t i = 0; i < n_lookups; ++i) {
        std::string name = r.str();
        std::uint64_t n = r.u64();
        std::vector<std::string> items(n);
        for (auto& item : items) {
            item = r.str();
        }
        state.lookups[name] = std::move(items);
    }
    return state;
}

} // namespace

std::string serialize_checkpoint(const SplitContainer& container,
                                 const std::vector<StageExecutionRecord>& records) {
    std::string container_bytes = serialize_container(container);
    Writer w;
    w.u64(container_bytes.size());
    w.u64(records.size());
    std::string head = w.take();

    Writer body;
    for (const auto& record : records) {
        body.str(record.stage_name);
        body.str(record.kind);
        write_state(body, record.state);
        body.u64(record.fit_consumed_raw_max.size());
        for (const auto& [unit, value] : record.fit_consumed_raw_max) {
            body.str(unit);
            body.i64(value);
        }
        body.u64(record.corrupt_realized_ratio.size());
        for (const auto& [unit, value] : record.corrupt_realized_ratio) {
            body.str(unit);
            body.f64(value);
        }
    }
    return head + container_bytes + body.take();
}

PipelineCheckpoint deserialize_checkpoint(const std::string& bytes) {
    Reader r(bytes);
    std::uint64_t container_len = r.u64();
    std::uint64_t n_records = r.u64();
    std::string container_bytes = r.raw_bytes(container_len);

    PipelineCheckpoint checkpoint;
    checkpoint.container = deserialize_container(container_bytes);
    checkpoint.records.resize(n_records);
    for (auto& record : checkpoint.records) {
        record.stage_name = r.str();
        record.kind = r.str();
        record.state = read_state(r);
        std::uint64_t n_fit = r.u64();
        for (std::uint64_t i = 0; i < n_fit; ++i) {
            std::string unit = r.str();
            record.fit_consumed_raw_max[unit] = r.i64();
        }
        std::uint64_t n_corrupt = r.u64();
        for (std::uint64_t i = 0; i < n_corrupt; ++i) {
            std::string unit = r.str();
            record.corrupt_realized_ratio[unit] = r.f64();
        }
    }
    if (!r.done()) {
        throw CacheError("trailing bytes after checkpoint payload");
    }
    return checkpoint;
}

} // namespace phmkit
