#pragma once

#include <array>
#include <cstdint>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace phmkit {

/// Incremental SHA-256 (FIPS 180-4). Self-contained so that cache keys and
/// fingerprints do not depend on an external crypto library.
class Sha256 {
public:
    Sha256() { reset(); }

    void reset();
    void update(const void* data, std::size_t len);
    void update(std::string_view s) { update(s.data(), s.size()); }

    /// Finalizes and returns the 32-byte digest. The object must be reset()
    /// before reuse.
    std::array<std::uint8_t, 32> finish();

    static std::array<std::uint8_t, 32> digest(std::string_view data);
    static std::string hex_digest(std::string_view data);

private:
    void process_block(const std::uint8_t* block);

    std::array<std::uint32_t, 8> state_{};
    std::uint64_t total_len_ = 0;
    std::array<std::uint8_t, 64> buffer_{};
    std::size_t buffer_len_ = 0;
};

std::string to_hex(const std::array<std::uint8_t, 32>& digest);

} // namespace phmkit
