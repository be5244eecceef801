#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ragbench::text {

/// Decodes UTF-8 into code points. Invalid byte sequences decode to U+FFFD,
/// one replacement per offending byte, so the function is total.
std::vector<char32_t> utf8_decode(std::string_view s);

/// Encodes code points back to UTF-8.
std::string utf8_encode(const std::vector<char32_t>& cps);

std::string utf8_encode(char32_t cp);

/// Space separators: ASCII whitespace plus the Unicode Zs block
/// (NBSP, en/em spaces, narrow NBSP, ideographic space).
bool is_space(char32_t cp);

/// C0/C1 control characters and DEL, excluding the ones classified as
/// whitespace above.
bool is_control(char32_t cp);

/// Terminal punctuation treated as its own token by the word tokenizer.
/// Covers ASCII punctuation and the Arabic-script marks common in Persian
/// text (،  ؛  ؟  « »  ٪) plus general dashes/quotes/ellipsis.
bool is_punctuation(char32_t cp);

inline constexpr char32_t kZwnj = 0x200C;        // zero-width non-joiner
inline constexpr char32_t kArabicYeh = 0x064A;   // ي
inline constexpr char32_t kPersianYeh = 0x06CC;  // ی
inline constexpr char32_t kArabicKaf = 0x0643;   // ك
inline constexpr char32_t kPersianKaf = 0x06A9;  // ک

/// Canonical text form used everywhere retrieval compares strings:
/// Arabic yeh/kaf folded to their Persian forms, ZWNJ runs collapsed to one,
/// whitespace runs collapsed to a single space, control characters dropped,
/// result trimmed. Idempotent.
std::string normalize(std::string_view raw);

/// 64-bit FNV-1a. Stable across platforms; used for dedup hashing and the
/// deterministic embedding double.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace ragbench::text
