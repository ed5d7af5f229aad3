#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <string>
#include <vector>

#include "kf/unicode.hpp"
#include "support/oracles.hpp"

using namespace kf;

TEST_CASE("code point encode/decode round-trips the whole range", "[unicode]") {
  for (char32_t cp = 0; cp <= 0x10FFFF; ++cp) {
    if (cp >= 0xD800 && cp <= 0xDFFF) continue;
    std::string buf;
    uni::append(buf, cp);
    std::size_t pos = 0;
    REQUIRE(uni::decode(buf, pos) == cp);
    REQUIRE(pos == buf.size());
    REQUIRE(uni::is_valid_utf8(buf));
  }
}

TEST_CASE("decoder matches an independent encoder on random text", "[unicode]") {
  std::mt19937_64 rng(41);
  for (int it = 0; it < 500; ++it) {
    const std::string s = oracle::random_utf8(rng, 128);
    REQUIRE(uni::is_valid_utf8(s));
    std::string rebuilt;
    for (const char32_t cp : uni::code_points(s)) uni::append(rebuilt, cp);
    REQUIRE(rebuilt == s);
  }
}

TEST_CASE("invalid sequences are rejected and decode to U+FFFD", "[unicode]") {
  const std::vector<std::string> bad = {
      "\x80",              // stray continuation
      "\xC0\xAF",          // overlong '/'
      "\xC1\xBF",          // overlong
      "\xE0\x80\xAF",      // overlong 3-byte
      "\xED\xA0\x80",      // surrogate D800
      "\xF0\x80\x80\xAF",  // overlong 4-byte
      "\xF4\x90\x80\x80",  // above U+10FFFF
      "\xFF",              // invalid lead
      "\xE1\x80",          // truncated
      "\xC3",              // truncated at end
  };
  for (const auto& s : bad) {
    CAPTURE(s);
    REQUIRE_FALSE(uni::is_valid_utf8(s));
    std::size_t pos = 0;
    REQUIRE(uni::decode(s, pos) == uni::kReplacement);
    REQUIRE(pos == 1);  // resynchronize one byte at a time
  }
  REQUIRE(uni::is_valid_utf8(std::string("a\0b", 3)));  // NUL is fine
  REQUIRE(uni::is_valid_utf8("한국어 text 😀"));
}

TEST_CASE("decoding garbage never reads past the buffer or stalls", "[unicode]") {
  std::mt19937_64 rng(99);
  for (int it = 0; it < 300; ++it) {
    std::string s;
    const std::size_t n = rng() % 40;
    for (std::size_t i = 0; i < n; ++i) s += static_cast<char>(rng() & 0xFF);
    std::size_t pos = 0;
    std::size_t steps = 0;
    while (pos < s.size()) {
      const std::size_t before = pos;
      uni::decode(s, pos);
      REQUIRE(pos > before);
      REQUIRE(pos <= s.size());
      REQUIRE(++steps <= s.size());
    }
  }
}

TEST_CASE("hangul composition rebuilds every precomposed syllable", "[unicode]") {
  // Decompose each syllable arithmetically, then ask nfc() to put it back.
  for (char32_t s = 0xAC00; s <= 0xD7A3; ++s) {
    const char32_t idx = s - 0xAC00;
    const char32_t l = 0x1100 + idx / (21 * 28);
    const char32_t v = 0x1161 + (idx % (21 * 28)) / 28;
    const char32_t t = idx % 28;
    std::string decomposed;
    uni::append(decomposed, l);
    uni::append(decomposed, v);
    if (t != 0) uni::append(decomposed, 0x11A7 + t);
    REQUIRE(uni::nfc(decomposed) == uni::encode(s));
  }
}

TEST_CASE("hangul composition of specific names", "[unicode]") {
  // 한 U+D55C and 하 U+D558 from their jamo.
  REQUIRE(uni::nfc("한") == "한");
  REQUIRE(uni::nfc("하") == "하");
  // 한국어 decomposed -> precomposed
  REQUIRE(uni::nfc("한국어") == "한국어");
}

TEST_CASE("nfc leaves non-composable text alone", "[unicode]") {
  REQUIRE(uni::nfc("") == "");
  REQUIRE(uni::nfc("plain ascii") == "plain ascii");
  REQUIRE(uni::nfc("日本語テキスト") == "日本語テキスト");
  REQUIRE(uni::nfc("한국") == "한국");             // already composed
  REQUIRE(uni::nfc("ᅡ") == "ᅡ");         // lone V
  REQUIRE(uni::nfc("ᆫ") == "ᆫ");         // lone T
  REQUIRE(uni::nfc("ᄒᆫ") == "ᄒᆫ");  // L+T does not compose
  // LVT + T must not compose further: 한 + ᆫ stays two code points.
  REQUIRE(uni::nfc("한ᆫ") == "한ᆫ");
  // e + combining acute is outside the algorithmic block: unchanged.
  REQUIRE(uni::nfc("é") == "é");
}

TEST_CASE("nfc is idempotent on random text", "[unicode]") {
  std::mt19937_64 rng(7);
  for (int it = 0; it < 500; ++it) {
    const std::string s = oracle::random_utf8(rng, 96);
    const std::string once = uni::nfc(s);
    REQUIRE(uni::nfc(once) == once);
  }
}

TEST_CASE("grapheme clusters", "[unicode]") {
  REQUIRE(uni::grapheme_count("") == 0);
  REQUIRE(uni::grapheme_count("ab") == 2);
  REQUIRE(uni::grapheme_count("\r\n") == 1);     // CRLF is one cluster
  REQUIRE(uni::grapheme_count("\n\r") == 2);     // but not reversed
  REQUIRE(uni::grapheme_count("á") == 1);  // combining mark attaches
  REQUIRE(uni::grapheme_count("한") == 1);  // L V T
  REQUIRE(uni::grapheme_count("한") == 1);        // LV + T
  REQUIRE(uni::grapheme_count("한국어") == 3);
  REQUIRE(uni::grapheme_count("👍\U0001F3FB") == 1);  // skin tone attaches
  REQUIRE(uni::grapheme_count("👩‍💻") == 1);    // ZWJ chain
  REQUIRE(uni::grapheme_count("a\nb") == 3);

  const auto gs = uni::graphemes("x\r\n한ᆫ!");
  REQUIRE(gs.size() == 4);
  REQUIRE(gs[0] == "x");
  REQUIRE(gs[1] == "\r\n");
  REQUIRE(gs[2] == "한ᆫ");
  REQUIRE(gs[3] == "!");
}

TEST_CASE("graphemes partition the string", "[unicode]") {
  std::mt19937_64 rng(13);
  for (int it = 0; it < 300; ++it) {
    const std::string s = oracle::random_utf8(rng, 80);
    std::string joined;
    for (const auto g : uni::graphemes(s)) joined += g;
    REQUIRE(joined == s);
  }
}

TEST_CASE("ascii helpers", "[unicode]") {
  REQUIRE(uni::trim_ascii("  a b \t\n") == "a b");
  REQUIRE(uni::trim_ascii("") == "");
  REQUIRE(uni::trim_ascii(" \t ") == "");
  REQUIRE(uni::ascii_lower("MiXeD 한국 ABC") == "mixed 한국 abc");
  REQUIRE(uni::code_point_count("한국어") == 3);
  REQUIRE(uni::code_point_count("abc") == 3);
}
