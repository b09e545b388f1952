#include "codesurv/digest.hpp"

#include <sodium.h>

#include <array>
#include <stdexcept>

#include "codesurv/error.hpp"

namespace codesurv {
namespace {

struct SodiumInit {
  SodiumInit() {
    if (sodium_init() < 0) throw std::runtime_error("libsodium initialisation failed");
  }
};

std::uint64_t load_be64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | p[i];
  return v;
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

Digest digest_bytes(std::string_view bytes) {
  static const SodiumInit init;
  std::array<unsigned char, 16> out{};
  crypto_generichash(out.data(), out.size(),
                     reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(),
                     nullptr, 0);
  return Digest{load_be64(out.data()), load_be64(out.data() + 8)};
}

std::string Digest::hex() const {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s(32, '0');
  for (int i = 0; i < 16; ++i) {
    s[15 - i] = kHex[(hi >> (4 * i)) & 0xF];
    s[31 - i] = kHex[(lo >> (4 * i)) & 0xF];
  }
  return s;
}

Digest Digest::from_hex(std::string_view hex) {
  if (hex.size() != 32) throw Error(ErrorCode::MalformedInput, "digest must be 32 hex chars");
  Digest d;
  for (std::size_t i = 0; i < 32; ++i) {
    int v = hex_value(hex[i]);
    if (v < 0) throw Error(ErrorCode::MalformedInput, "bad hex digit in digest");
    std::uint64_t& word = i < 16 ? d.hi : d.lo;
    word = (word << 4) | static_cast<std::uint64_t>(v);
  }
  return d;
}

}  // namespace codesurv
