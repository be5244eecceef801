#include <doctest.h>

#include <random>

#include "ragbench/corpus.hpp"
#include "ragbench/text.hpp"

using namespace ragbench;

namespace {

std::string cp(char32_t c) { return text::utf8_encode(c); }

/// Generator for stress strings: Persian letters, Arabic yeh/kaf, ZWNJ,
/// assorted whitespace and control characters.
std::string random_noisy_string(std::mt19937_64& rng, std::size_t len) {
  static const std::vector<char32_t> pool = {
      U'a',   U'b',    0x0633, 0x0644, 0x0645, 0x06CC, 0x064A, 0x0643, 0x06A9,
      0x200C, 0x200C,  U' ',   U' ',   U'\t',  U'\n',  0x00A0, 0x0001, 0x007F,
      0x2003, 0x060C,  U'1',   0x06F3};
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::string out;
  for (std::size_t i = 0; i < len; ++i) out += cp(pool[pick(rng)]);
  return out;
}

}  // namespace

TEST_SUITE("normalize") {

TEST_CASE("arabic yeh and kaf fold to persian forms, whitespace collapses") {
  // "سلام  دنيا" with Arabic yeh (U+064A) and a double space.
  const std::string input =
      cp(0x0633) + cp(0x0644) + cp(0x0627) + cp(0x0645) + "  " + cp(0x062F) + cp(0x0646) +
      cp(0x064A) + cp(0x0627);
  // Expected: same letters, single space, yeh mapped to U+06CC.
  const std::string expected =
      cp(0x0633) + cp(0x0644) + cp(0x0627) + cp(0x0645) + " " + cp(0x062F) + cp(0x0646) +
      cp(0x06CC) + cp(0x0627);
  CHECK(normalize_text(input) == expected);

  const std::string kaf_input = cp(0x0643) + cp(0x062A) + cp(0x0627) + cp(0x0628);
  const std::string kaf_expected = cp(0x06A9) + cp(0x062A) + cp(0x0627) + cp(0x0628);
  CHECK(normalize_text(kaf_input) == kaf_expected);
}

TEST_CASE("empty input and plain ascii are unchanged") {
  CHECK(normalize_text("") == "");
  CHECK(normalize_text("abc") == "abc");
  CHECK(normalize_text("hello world") == "hello world");
}

TEST_CASE("zwnj runs collapse to one, single zwnj survives") {
  const std::string kitab = cp(0x06A9) + cp(0x062A) + cp(0x0627) + cp(0x0628);
  const std::string ha = cp(0x0647) + cp(0x0627);
  CHECK(normalize_text(kitab + cp(0x200C) + ha) == kitab + cp(0x200C) + ha);
  CHECK(normalize_text(kitab + cp(0x200C) + cp(0x200C) + cp(0x200C) + ha) ==
        kitab + cp(0x200C) + ha);
}

TEST_CASE("control characters are removed, result is trimmed") {
  CHECK(normalize_text("a\x01\x02z") == "az");
  CHECK(normalize_text("  padded \t\n") == "padded");
  CHECK(normalize_text("\x07") == "");
  CHECK(normalize_text(std::string("a") + cp(0x0088) + "b") == "ab");  // C1 control
  CHECK(normalize_text(std::string("a") + cp(0x0085) + "b") == "a b");  // NEL is whitespace
}

TEST_CASE("nbsp and unicode space separators collapse like ascii spaces") {
  CHECK(normalize_text(std::string("a") + cp(0x00A0) + cp(0x2003) + "b") == "a b");
}

TEST_CASE("idempotence over random noisy strings") {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 500; ++i) {
    const std::string s = random_noisy_string(rng, 1 + i % 40);
    const std::string once = normalize_text(s);
    CHECK(normalize_text(once) == once);
  }
}

TEST_CASE("fnv1a64 is stable") {
  // Frozen reference value of the standard FNV-1a 64 test vector.
  CHECK(text::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(text::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(text::fnv1a64("hello") == text::fnv1a64("hello"));
  CHECK(text::fnv1a64("hello") != text::fnv1a64("hellp"));
}

TEST_CASE("utf8 round trip") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const std::string s = random_noisy_string(rng, 1 + i % 30);
    CHECK(text::utf8_encode(text::utf8_decode(s)) == s);
  }
}

}  // TEST_SUITE
