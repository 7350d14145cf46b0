#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace switchcode {

/// Incremental SHA-256 (FIPS 180-4). Used for the run manifests, where a
/// stable, widely checkable digest matters more than speed.
class Sha256 {
  public:
    Sha256();
    void update(const void* data, std::size_t len);
    /// Finishes the hash and returns the digest as lowercase hex.
    std::string hex_digest();

  private:
    void process_block(const std::uint8_t* block);

    std::uint32_t state_[8];
    std::uint64_t total_bytes_ = 0;
    std::uint8_t buffer_[64];
    std::size_t buffered_ = 0;
};

std::string sha256_hex(const std::string& data);
std::string sha256_file_hex(const std::string& path);

}  // namespace switchcode
