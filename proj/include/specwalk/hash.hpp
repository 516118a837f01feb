#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace specwalk {

// 64-bit FNV-1a; stable across platforms and runs, used for content ids and seeds.
class Fnv1a {
 public:
  Fnv1a& update(const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
    return *this;
  }
  Fnv1a& update(std::string_view s) { return update(s.data(), s.size()); }
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace specwalk
