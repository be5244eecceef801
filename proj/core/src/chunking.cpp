#include "ragbench/chunking.hpp"

#include "ragbench/error.hpp"
#include "ragbench/text.hpp"

namespace ragbench {

namespace {

std::size_t utf8_len(char32_t cp) {
  if (cp < 0x80) return 1;
  if (cp < 0x800) return 2;
  if (cp < 0x10000) return 3;
  return 4;
}

bool joins_words(char32_t cp) { return cp == text::kZwnj; }

bool is_word_cp(char32_t cp) {
  if (cp < 0x80) return (cp >= '0' && cp <= '9') || (cp >= 'A' && cp <= 'Z') ||
                        (cp >= 'a' && cp <= 'z') || cp == '_';
  return !text::is_space(cp) && !text::is_control(cp) && !text::is_punctuation(cp);
}

}  // namespace

std::vector<TokenSpan> tokenize(std::string_view s, const TokenizerSpec& spec) {
  const auto cps = text::utf8_decode(s);
  std::vector<TokenSpan> spans;

  if (spec.kind == TokenizerSpec::Kind::characters) {
    std::size_t byte = 0;
    for (char32_t cp : cps) {
      const std::size_t len = utf8_len(cp);
      spans.push_back({byte, byte + len});
      byte += len;
    }
    return spans;
  }

  std::size_t byte = 0;
  std::size_t i = 0;
  while (i < cps.size()) {
    const char32_t cp = cps[i];
    const std::size_t len = utf8_len(cp);
    if (text::is_space(cp) || text::is_control(cp)) {
      byte += len;
      ++i;
      continue;
    }
    if (is_word_cp(cp) || joins_words(cp)) {
      const std::size_t start = byte;
      while (i < cps.size() && (is_word_cp(cps[i]) || joins_words(cps[i]))) {
        byte += utf8_len(cps[i]);
        ++i;
      }
      spans.push_back({start, byte});
    } else {
      spans.push_back({byte, byte + len});  // punctuation token
      byte += len;
      ++i;
    }
  }
  return spans;
}

std::size_t count_tokens(std::string_view text, const TokenizerSpec& spec) {
  return tokenize(text, spec).size();
}

std::vector<Chunk> chunk_document(const Document& doc, std::size_t size, std::size_t overlap,
                                  const TokenizerSpec& spec) {
  if (size == 0) throw Error(ErrorCode::InvalidChunkParams, "chunk size must be positive");
  if (overlap >= size)
    throw Error(ErrorCode::InvalidChunkParams, "overlap must be smaller than size");

  const auto spans = tokenize(doc.text, spec);
  const std::size_t total = spans.size();
  std::vector<Chunk> chunks;
  if (total == 0) return chunks;

  const std::size_t step = size - overlap;
  for (std::size_t start = 0; start < total; start += step) {
    const std::size_t end = std::min(start + size, total);
    Chunk c;
    c.doc_id = doc.id;
    c.index = chunks.size();
    c.id = doc.id + "#" + std::to_string(c.index);
    c.token_start = start;
    c.token_end = end;
    c.text = doc.text.substr(spans[start].begin, spans[end - 1].end - spans[start].begin);
    chunks.push_back(std::move(c));
    if (end == total) break;  // reached the last token; later starts add nothing
  }
  return chunks;
}

}  // namespace ragbench
