#include "hemocyte/hash.hpp"

#include <array>
#include <cstdio>
#include <fstream>

#include "hemocyte/error.hpp"

namespace hemocyte {

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open file for hashing: " + path);
  std::array<char, 1 << 16> buf;
  std::uint64_t h = kFnvOffset;
  while (in) {
    in.read(buf.data(), buf.size());
    h = fnv1a64(buf.data(), static_cast<std::size_t>(in.gcount()), h);
  }
  return h;
}

}  // namespace hemocyte
