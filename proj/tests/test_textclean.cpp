#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <string>
#include <vector>

#include "kf/textclean.hpp"
#include "support/oracles.hpp"

using namespace kf;

namespace {

Document doc(std::string text) {
  Document d;
  d.id = "t";
  d.source = "test";
  d.text = std::move(text);
  return d;
}

std::vector<RuleKind> rule_list(const CleanOutcome& out) {
  std::vector<RuleKind> rules;
  for (const auto& [r, detail] : out.hits) rules.push_back(r);
  return rules;
}

// Messy web-text generator: words interleaved with markup damage, entity
// soup, repeat spam, and whitespace noise.
std::string random_dirty_text(std::mt19937_64& rng) {
  static const std::vector<std::string> pieces = {
      "안녕하세요",  "블로그",     "포스트",      "hello",      "world",
      "  ",          "\t\t",       " ",           "\n",         "\r\n",
      "<p>",         "</p>",       "<br/>",       "<div class=\"x\">",
      "<div oops",   "&amp;",      "&lt;",        "&nbsp;",     "&#44032;",
      "&#xAC00;",    "&broken",    "{",           "}",          "[[",
      "]]",          "|",          "`",           "ㅋㅋㅋㅋㅋㅋ", "!!!!!!",
      "....",        "😀😀😀😀😀", "한국어 텍스트", "text",      "<!-- c -->",
  };
  std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
  std::uniform_int_distribution<int> n_d(0, 40);
  std::string out;
  const int n = n_d(rng);
  for (int i = 0; i < n; ++i) out += pieces[pick(rng)];
  return out;
}

}  // namespace

TEST_CASE("markup-wrapped exclamation doc routes as short", "[textclean]") {
  const auto out = clean_document(doc("<p>  hi!!!!!  </p>"), CleanConfig{});
  REQUIRE(out.disposition == Disposition::routed_needs_context);
  REQUIRE(out.text == "hi!!!");
  REQUIRE(rule_list(out) == std::vector<RuleKind>{RuleKind::html, RuleKind::spaces,
                                                  RuleKind::repeats, RuleKind::short_text});
}

TEST_CASE("whitespace normalization", "[textclean]") {
  REQUIRE(normalize_whitespace("a  b") == "a b");
  REQUIRE(normalize_whitespace("a \t b") == "a b");
  REQUIRE(normalize_whitespace("a\tb") == "a\tb");  // lone tab is content
  REQUIRE(normalize_whitespace("  a") == "a");
  REQUIRE(normalize_whitespace("a  ") == "a");
  REQUIRE(normalize_whitespace(" a \n b ") == "a\nb");
  REQUIRE(normalize_whitespace("a\n\nb") == "a\n\nb");    // newlines untouched
  REQUIRE(normalize_whitespace("a \r\n b") == "a\r\nb");  // CRLF untouched
  REQUIRE(normalize_whitespace("") == "");
  REQUIRE(normalize_whitespace(" \t ") == "");
}

TEST_CASE("whitespace normalization properties", "[textclean]") {
  std::mt19937_64 rng(31);
  for (int it = 0; it < 1500; ++it) {
    const std::string s = random_dirty_text(rng);
    const std::string n1 = normalize_whitespace(s);
    CAPTURE(s);
    REQUIRE_FALSE(oracle::has_messy_whitespace(n1));
    REQUIRE(normalize_whitespace(n1) == n1);  // idempotent
    REQUIRE(n1.size() <= s.size());
    // line structure preserved exactly
    const auto count = [](std::string_view t, char c) {
      return std::count(t.begin(), t.end(), c);
    };
    REQUIRE(count(n1, '\n') == count(s, '\n'));
    REQUIRE(count(n1, '\r') == count(s, '\r'));
  }
}

TEST_CASE("html stripping removes tags and decodes entities", "[textclean]") {
  REQUIRE(strip_html("<p>hi</p>") == "hi");
  REQUIRE(strip_html("<div class=\"a b\">x</div>") == "x");
  REQUIRE(strip_html("<br/>") == "");
  REQUIRE(strip_html("<!-- note -->") == "");
  REQUIRE(strip_html("a &amp; b") == "a & b");
  REQUIRE(strip_html("&lt;tag&gt;") == "<tag>");
  REQUIRE(strip_html("&quot;q&quot;") == "\"q\"");
  REQUIRE(strip_html("&#44032;") == "가");
  REQUIRE(strip_html("&#xAC00;") == "가");
  REQUIRE(strip_html("&#x10FFFF;") == "\U0010FFFF");
  // not decoded: unknown names, bare '&', out-of-range and surrogate refs
  REQUIRE(strip_html("&nbsp;") == "&nbsp;");
  REQUIRE(strip_html("a & b") == "a & b");
  REQUIRE(strip_html("&#1114112;") == "&#1114112;");
  REQUIRE(strip_html("&#xD800;") == "&#xD800;");
  // unterminated tag stays for the damage detector
  REQUIRE(strip_html("<div oops\nmore") == "<div oops\nmore");
  // '<' before a digit is comparison, not markup
  REQUIRE(strip_html("a < 3 and b > 4") == "a < 3 and b > 4");
  // tags never span lines
  REQUIRE(strip_html("<div\nclass>") == "<div\nclass>");
}

TEST_CASE("nested escaping cleans to a fixed point", "[textclean]") {
  // One strip pass turns "&amp;lt;" into "&lt;"; the document loop must
  // keep going until nothing changes.
  const auto out = clean_document(doc("&amp;amp;lt;b&amp;gt;"), CleanConfig{});
  const auto again = clean_document(doc(out.text), CleanConfig{});
  REQUIRE(again.text == out.text);

  const auto simple = clean_document(doc("&amp;lt;"), CleanConfig{});
  REQUIRE(simple.text == "<");
}

TEST_CASE("clean output is a fixed point on messy input", "[textclean]") {
  std::mt19937_64 rng(37);
  CleanConfig cfg;
  int kept_or_routed = 0;
  for (int it = 0; it < 1500; ++it) {
    const std::string s = random_dirty_text(rng);
    const auto out = clean_document(doc(s), cfg);
    REQUIRE(out.text.size() <= s.size());  // cleaning only shrinks
    if (out.disposition == Disposition::dropped) continue;
    ++kept_or_routed;
    const auto again = clean_document(doc(out.text), cfg);
    CAPTURE(s, out.text);
    REQUIRE(again.text == out.text);
    REQUIRE(again.disposition == out.disposition);
    // no mutating rule may fire the second time
    for (const auto& [r, detail] : again.hits) {
      REQUIRE(r != RuleKind::html);
      REQUIRE(r != RuleKind::spaces);
      REQUIRE(r != RuleKind::repeats);
    }
  }
  REQUIRE(kept_or_routed > 200);  // the generator must exercise this path
}

TEST_CASE("broken markup ratio matches the byte-classification oracle", "[textclean]") {
  std::mt19937_64 rng(41);
  for (int it = 0; it < 2000; ++it) {
    const std::string s = random_dirty_text(rng);
    const auto [flag, ratio] = detect_broken_markup(s, 0.30);
    const double expect = oracle::markup_ratio(s);
    CAPTURE(s);
    REQUIRE(ratio == expect);  // same integer count over same size
    REQUIRE(flag == (expect > 0.30));
  }
  REQUIRE(detect_broken_markup("", 0.3) == std::pair{false, 0.0});
}

TEST_CASE("broken markup on specific shapes", "[textclean]") {
  // all-brace text is pure damage
  const auto [f1, r1] = detect_broken_markup("{{{{", 0.3);
  REQUIRE(f1);
  REQUIRE(r1 == 1.0);
  // intact tags are strip_html's job, not damage
  const auto [f2, r2] = detect_broken_markup("<p>hello there</p>", 0.3);
  REQUIRE_FALSE(f2);
  REQUIRE(r2 == 0.0);
  // unterminated tag counts to end of line
  const auto [f3, r3] = detect_broken_markup("<div oops", 0.3);
  REQUIRE(f3);
  REQUIRE(r3 == 1.0);
  // entity-shaped run counts whole
  const auto [f4, r4] = detect_broken_markup("&nbsp;", 0.3);
  REQUIRE(f4);
  REQUIRE(r4 == 1.0);
  // plain Korean prose is clean
  const auto [f5, r5] = detect_broken_markup("오늘 날씨가 좋아서 산책을 했다.", 0.3);
  REQUIRE_FALSE(f5);
  REQUIRE(r5 == 0.0);
}

TEST_CASE("repeat collapsing truncates grapheme runs", "[textclean]") {
  REQUIRE(collapse_repeats("ㅋㅋㅋㅋㅋㅋ", 3) == "ㅋㅋㅋ");
  REQUIRE(collapse_repeats("!!!!!!", 3) == "!!!");
  REQUIRE(collapse_repeats("aaab", 3) == "aaab");
  REQUIRE(collapse_repeats("aaaab", 3) == "aaab");
  REQUIRE(collapse_repeats("abab", 3) == "abab");  // alternation is not a run
  REQUIRE(collapse_repeats("", 3) == "");
  REQUIRE(collapse_repeats("ㅋㅋ", 3) == "ㅋㅋ");
  // run counting is per grapheme cluster, not per code point
  REQUIRE(collapse_repeats("👍🏻👍🏻👍🏻👍🏻", 2) == "👍🏻👍🏻");
  REQUIRE(collapse_repeats("áááá", 3) == "ááá");
  // newline runs are grapheme runs too
  REQUIRE(collapse_repeats("a\n\n\n\n\nb", 3) == "a\n\n\nb");
  REQUIRE(collapse_repeats("x\r\n\r\n\r\n\r\ny", 2) == "x\r\n\r\ny");
}

TEST_CASE("repeat collapsing properties", "[textclean]") {
  std::mt19937_64 rng(43);
  for (int it = 0; it < 1000; ++it) {
    const std::string s = oracle::random_utf8(rng, 60) + "ㅋㅋㅋㅋㅋ";
    for (const std::size_t max_run : {1u, 2u, 3u, 5u}) {
      const std::string c = collapse_repeats(s, max_run);
      CAPTURE(s, max_run);
      REQUIRE(oracle::longest_grapheme_run(c) <= max_run);
      REQUIRE(collapse_repeats(c, max_run) == c);
      if (oracle::longest_grapheme_run(s) <= max_run) REQUIRE(c == s);
    }
  }
}

TEST_CASE("short detection counts graphemes not bytes", "[textclean]") {
  // 63 Hangul syllables: 189 bytes but still short at min_chars 64.
  std::string s63;
  for (int i = 0; i < 63; ++i) s63 += "한";
  REQUIRE(is_too_short(s63, 64));
  REQUIRE_FALSE(is_too_short(s63 + "국", 64));
  // decomposed jamo cluster counts once
  std::string jamo;
  for (int i = 0; i < 64; ++i) jamo += "한";
  REQUIRE_FALSE(is_too_short(jamo, 64));
  REQUIRE(is_too_short(jamo, 65));
}

TEST_CASE("dispositions and rule hits", "[textclean]") {
  CleanConfig cfg;

  SECTION("empty and whitespace-only docs are dropped") {
    auto out = clean_document(doc(""), cfg);
    REQUIRE(out.disposition == Disposition::dropped);
    REQUIRE(rule_list(out) == std::vector<RuleKind>{RuleKind::empty});
    REQUIRE(out.text.empty());

    out = clean_document(doc("  \t  "), cfg);
    REQUIRE(out.disposition == Disposition::dropped);
    REQUIRE(rule_list(out) == std::vector<RuleKind>{RuleKind::spaces, RuleKind::empty});
  }

  SECTION("markup damage is dropped with the ratio recorded") {
    const auto out = clean_document(doc("{{{[[[|||]]]}}}"), cfg);
    REQUIRE(out.disposition == Disposition::dropped);
    REQUIRE(rule_list(out) == std::vector<RuleKind>{RuleKind::broken_markup});
    REQUIRE(out.hits[0].second.find("markup ratio") == 0);
  }

  SECTION("clean long docs are kept with no hits") {
    static const char* cycle[] = {"가", "나", "다", "라", "마"};
    std::string body;
    for (int i = 0; i < 70; ++i) body += cycle[i % 5];
    const auto out = clean_document(doc(body), cfg);
    REQUIRE(out.disposition == Disposition::kept);
    REQUIRE(out.hits.empty());
    REQUIRE(out.text == body);
  }

  SECTION("drop_short switches routing to dropping") {
    CleanConfig strict = cfg;
    strict.drop_short = true;
    const auto out = clean_document(doc("short one"), strict);
    REQUIRE(out.disposition == Disposition::dropped);
    REQUIRE(out.text.empty());
    REQUIRE(rule_list(out) == std::vector<RuleKind>{RuleKind::short_text});
  }

  SECTION("filters can be switched off") {
    CleanConfig off = cfg;
    off.strip_tags = false;
    off.collapse_spaces = false;
    std::string body = "a  b <p>kept</p> ";
    for (int i = 0; i < 64; ++i) body += (i % 2) ? "나" : "가";
    const auto out = clean_document(doc(body), off);
    REQUIRE(out.disposition == Disposition::kept);
    REQUIRE(out.text == body);
    REQUIRE(out.hits.empty());
  }
}

TEST_CASE("each rule records one hit even across fixpoint rounds", "[textclean]") {
  // Every round of this input changes something; the html hit must still
  // appear exactly once.
  const auto out = clean_document(doc("&amp;amp;amp;lt;x&amp;amp;gt;  <p>y</p>"), CleanConfig{});
  int html_hits = 0;
  for (const auto& [r, d] : out.hits)
    if (r == RuleKind::html) ++html_hits;
  REQUIRE(html_hits == 1);
}
