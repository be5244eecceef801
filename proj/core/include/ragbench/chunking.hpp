#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "ragbench/types.hpp"

namespace ragbench {

/// Token counting strategy. Word mode approximates Unicode word boundaries:
/// letters/digits joined by ZWNJ form one token, punctuation marks stand
/// alone. Character mode treats every code point as a token. Both are
/// deterministic for a given input.
struct TokenizerSpec {
  enum class Kind { unicode_words, characters };
  Kind kind = Kind::unicode_words;
};

/// Byte range of one token within the original string.
struct TokenSpan {
  std::size_t begin = 0;  // byte offset
  std::size_t end = 0;
};

std::vector<TokenSpan> tokenize(std::string_view text, const TokenizerSpec& spec);

std::size_t count_tokens(std::string_view text, const TokenizerSpec& spec);

/// Sliding-window segmentation: windows start at 0, size-overlap,
/// 2(size-overlap), ... and stop once a window reaches the last token.
/// Every token lands in at least one chunk; the final chunk may be short.
/// Chunk text is the exact substring spanning its tokens.
std::vector<Chunk> chunk_document(const Document& doc, std::size_t size, std::size_t overlap,
                                  const TokenizerSpec& spec = {});

}  // namespace ragbench
