#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "kf/unicode.hpp"

// Reversible byte <-> printable code point mapping for byte-level BPE.
// Bytes that are already printable and non-space keep their own code
// point; the rest are assigned 256, 257, ... in ascending byte order, so
// every token renders as visible characters and any byte string maps back
// losslessly. Serialized models name this mapping "gpt2".

namespace kf::bytemap {

inline const std::array<char32_t, 256>& byte_to_cp() {
  static const std::array<char32_t, 256> table = [] {
    std::array<char32_t, 256> t{};
    const auto printable = [](int b) {
      return (b >= '!' && b <= '~') || (b >= 0xA1 && b <= 0xAC) || (b >= 0xAE && b <= 0xFF);
    };
    char32_t next = 256;
    for (int b = 0; b < 256; ++b) t[b] = printable(b) ? char32_t(b) : next++;
    return t;
  }();
  return table;
}

inline std::optional<std::uint8_t> cp_to_byte(char32_t cp) {
  static const auto reverse = [] {
    std::array<std::int16_t, 512> r{};
    r.fill(-1);
    const auto& fwd = byte_to_cp();
    for (int b = 0; b < 256; ++b) r[fwd[b]] = static_cast<std::int16_t>(b);
    return r;
  }();
  if (cp >= 512 || reverse[cp] < 0) return std::nullopt;
  return static_cast<std::uint8_t>(reverse[cp]);
}

// Raw bytes -> printable symbol string (UTF-8 of mapped code points).
inline std::string encode_bytes(std::string_view raw) {
  std::string out;
  out.reserve(raw.size() * 2);
  for (const char c : raw) uni::append(out, byte_to_cp()[static_cast<unsigned char>(c)]);
  return out;
}

// Symbol string -> raw bytes; nullopt if any code point is outside the map.
inline std::optional<std::string> decode_bytes(std::string_view symbol) {
  std::string out;
  out.reserve(symbol.size());
  std::size_t i = 0;
  while (i < symbol.size()) {
    const char32_t cp = uni::decode(symbol, i);
    const auto b = cp_to_byte(cp);
    if (!b) return std::nullopt;
    out.push_back(static_cast<char>(*b));
  }
  return out;
}

}  // namespace kf::bytemap
