#pragma once

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "vtab/errors.hpp"

namespace vtab {

// Incremental SHA-256 with helpers for the canonical little-endian encodings
// used by content hashes.
class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw Error("sha256: digest init failed");
    }
  }

  Sha256& update(std::span<const std::uint8_t> bytes) {
    EVP_DigestUpdate(ctx_.get(), bytes.data(), bytes.size());
    return *this;
  }

  Sha256& update(std::string_view text) {
    EVP_DigestUpdate(ctx_.get(), text.data(), text.size());
    return *this;
  }

  Sha256& update_u64(std::uint64_t v) {
    std::array<std::uint8_t, 8> le{};
    for (int i = 0; i < 8; ++i) le[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v >> (8 * i));
    return update(le);
  }

  Sha256& update_i64(std::int64_t v) { return update_u64(static_cast<std::uint64_t>(v)); }

  Sha256& update_f64(double v) { return update_u64(std::bit_cast<std::uint64_t>(v)); }

  // Length-prefixed so that adjacent strings cannot alias.
  Sha256& update_str(std::string_view text) {
    update_u64(text.size());
    return update(text);
  }

  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), digest.data(), &len);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
      out.push_back(kHex[digest[i] >> 4]);
      out.push_back(kHex[digest[i] & 0xf]);
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

inline std::string sha256_hex(std::string_view text) { return Sha256{}.update(text).hex(); }

inline std::string sha256_hex(std::span<const std::uint8_t> bytes) { return Sha256{}.update(bytes).hex(); }

}  // namespace vtab
