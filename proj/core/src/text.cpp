#include "ragbench/text.hpp"

#include "ragbench/error.hpp"

namespace ragbench {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::InvalidChunkParams: return "InvalidChunkParams";
    case ErrorCode::ProviderError: return "ProviderError";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::EmptyCompletion: return "EmptyCompletion";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MalformedModelOutput: return "MalformedModelOutput";
    case ErrorCode::MalformedJudgeOutput: return "MalformedJudgeOutput";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::CorruptIndex: return "CorruptIndex";
    case ErrorCode::AllMasked: return "AllMasked";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DivergenceDetected: return "DivergenceDetected";
    case ErrorCode::AllItemsFailed: return "AllItemsFailed";
    case ErrorCode::Precondition: return "Precondition";
  }
  return "Error";
}

}  // namespace ragbench

namespace ragbench::text {

std::vector<char32_t> utf8_decode(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    char32_t cp = 0;
    std::size_t len = 0;
    if (b0 < 0x80) {
      cp = b0;
      len = 1;
    } else if ((b0 & 0xE0) == 0xC0) {
      cp = b0 & 0x1F;
      len = 2;
    } else if ((b0 & 0xF0) == 0xE0) {
      cp = b0 & 0x0F;
      len = 3;
    } else if ((b0 & 0xF8) == 0xF0) {
      cp = b0 & 0x07;
      len = 4;
    } else {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    if (i + len > s.size()) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    bool ok = true;
    for (std::size_t j = 1; j < len; ++j) {
      const auto bj = static_cast<unsigned char>(s[i + j]);
      if ((bj & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (bj & 0x3F);
    }
    if (!ok || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string utf8_encode(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
  return out;
}

std::string utf8_encode(const std::vector<char32_t>& cps) {
  std::string out;
  out.reserve(cps.size() * 2);
  for (char32_t cp : cps) out += utf8_encode(cp);
  return out;
}

bool is_space(char32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
    case 0x20: case 0x85: case 0xA0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

bool is_control(char32_t cp) {
  if (is_space(cp)) return false;
  return cp < 0x20 || cp == 0x7F || (cp >= 0x80 && cp <= 0x9F);
}

bool is_punctuation(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
           (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
  }
  switch (cp) {
    case 0x00AB: case 0x00BB:        // « »
    case 0x060C: case 0x061B: case 0x061F:  // ، ؛ ؟
    case 0x066A: case 0x066B: case 0x066C: case 0x066D:
    case 0x06D4:                     // Arabic full stop
    case 0x2026:                     // …
    case 0xFD3E: case 0xFD3F:
      return true;
    default:
      return (cp >= 0x2010 && cp <= 0x2027) || (cp >= 0x2E00 && cp <= 0x2E7F);
  }
}

std::string normalize(std::string_view raw) {
  const auto cps = utf8_decode(raw);
  std::vector<char32_t> out;
  out.reserve(cps.size());
  bool pending_space = false;
  for (char32_t cp : cps) {
    if (cp == kArabicYeh) cp = kPersianYeh;
    else if (cp == kArabicKaf) cp = kPersianKaf;

    if (is_control(cp)) continue;
    if (is_space(cp)) {
      pending_space = !out.empty();  // leading whitespace trims away
      continue;
    }
    if (pending_space) {
      out.push_back(U' ');
      pending_space = false;
    }
    if (cp == kZwnj && !out.empty() && out.back() == kZwnj) continue;
    out.push_back(cp);
  }
  return utf8_encode(out);  // trailing run was never flushed, so already trimmed
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace ragbench::text
