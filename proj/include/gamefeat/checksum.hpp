#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace gamefeat {

/// 64-bit FNV-1a. Used to fingerprint corpus records and key index caches;
/// not a cryptographic hash.
class Fnv1a64 {
 public:
  void update(std::string_view bytes) {
    for (unsigned char c : bytes) {
      state_ ^= c;
      state_ *= 0x100000001b3ULL;
    }
  }
  std::uint64_t digest() const { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string to_hex(std::uint64_t value);

/// Streams the whole file through FNV-1a. Throws Error if unreadable.
std::uint64_t checksum_file(const std::filesystem::path& path);

}  // namespace gamefeat
