#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace podtann {

// Incremental SHA-256 (FIPS 180-4).
class Sha256 {
public:
  Sha256();
  void update(const void* data, std::size_t len);
  void update(const std::string& s) { update(s.data(), s.size()); }
  std::string hex_digest(); // finalizes; further updates are invalid

  static std::string hex(const void* data, std::size_t len);
  static std::string hex(const std::string& s) { return hex(s.data(), s.size()); }

private:
  void process_block(const std::uint8_t* block);

  std::uint32_t h_[8];
  std::uint8_t buffer_[64];
  std::size_t buffer_len_ = 0;
  std::uint64_t total_len_ = 0;
};

} // namespace podtann
