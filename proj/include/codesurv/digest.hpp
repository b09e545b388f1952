#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace codesurv {

// Identifier written into every snapshot store header.
inline constexpr std::string_view kDigestAlgorithm = "blake2b-128";

// 128-bit content digest. Ordering matches the byte order of the hex form.
struct Digest {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;

  auto operator<=>(const Digest&) const = default;

  std::string hex() const;
  static Digest from_hex(std::string_view hex);  // throws Error(MalformedInput)
};

Digest digest_bytes(std::string_view bytes);

struct DigestHash {
  std::size_t operator()(const Digest& d) const noexcept {
    return static_cast<std::size_t>(d.lo ^ (d.hi * 0x9e3779b97f4a7c15ULL));
  }
};

}  // namespace codesurv
