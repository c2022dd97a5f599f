#include "gamefeat/checksum.hpp"

#include <array>
#include <cstdio>
#include <fstream>

#include "gamefeat/error.hpp"

namespace gamefeat {

std::string to_hex(std::uint64_t value) {
  std::array<char, 17> buf{};
  std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(value));
  return std::string(buf.data());
}

std::string Fnv1a64::hex() const { return to_hex(state_); }

std::uint64_t checksum_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  Fnv1a64 h;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())));
  }
  return h.digest();
}

}  // namespace gamefeat
