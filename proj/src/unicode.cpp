#include "termpref/unicode.hpp"

#include <stdexcept>
#include <string>

namespace termpref::uni {

namespace {

[[noreturn]] void bad_utf8(std::size_t offset, const char* what) {
  throw std::runtime_error("invalid UTF-8 at byte " + std::to_string(offset) +
                           ": " + what);
}

}  // namespace

std::u32string decode_utf8(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const unsigned char lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (lead < 0x80) {
      out.push_back(lead);
      ++i;
      continue;
    } else if ((lead & 0xE0) == 0xC0) {
      len = 2;
      cp = lead & 0x1F;
    } else if ((lead & 0xF0) == 0xE0) {
      len = 3;
      cp = lead & 0x0F;
    } else if ((lead & 0xF8) == 0xF0) {
      len = 4;
      cp = lead & 0x07;
    } else {
      bad_utf8(i, "stray continuation or invalid lead byte");
    }
    if (i + len > text.size()) bad_utf8(i, "truncated sequence");
    for (std::size_t k = 1; k < len; ++k) {
      const unsigned char c = static_cast<unsigned char>(text[i + k]);
      if ((c & 0xC0) != 0x80) bad_utf8(i, "missing continuation byte");
      cp = (cp << 6) | (c & 0x3F);
    }
    static constexpr char32_t kMinForLen[5] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < kMinForLen[len]) bad_utf8(i, "overlong encoding");
    if (cp >= 0xD800 && cp <= 0xDFFF) bad_utf8(i, "surrogate code point");
    if (cp > 0x10FFFF) bad_utf8(i, "code point out of range");
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string encode_utf8(std::u32string_view scalars) {
  std::string out;
  out.reserve(scalars.size());
  for (char32_t cp : scalars) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

char32_t fold_scalar(char32_t c) noexcept {
  if (c < 0x80) return (c >= U'A' && c <= U'Z') ? c + 0x20 : c;
  // Latin-1 capitals, skipping the multiplication sign.
  if (c >= 0x00C0 && c <= 0x00DE && c != 0x00D7) return c + 0x20;
  // Latin Extended-A pairs. U+0130 (dotted capital I) has no simple fold.
  if (c >= 0x0100 && c <= 0x0137) return (c % 2 == 0 && c != 0x0130) ? c + 1 : c;
  if (c >= 0x0139 && c <= 0x0148) return (c % 2 == 1) ? c + 1 : c;
  if (c >= 0x014A && c <= 0x0177) return (c % 2 == 0) ? c + 1 : c;
  if (c == 0x0178) return 0x00FF;  // Y with diaeresis
  if (c >= 0x0179 && c <= 0x017E) return (c % 2 == 1) ? c + 1 : c;
  if (c == 0x017F) return 0x0073;  // long s
  if (c == 0x1E9E) return 0x00DF;  // capital sharp s
  if (c >= 0x0391 && c <= 0x03A9 && c != 0x03A2) return c + 0x20;
  if (c >= 0x0410 && c <= 0x042F) return c + 0x20;
  if (c >= 0x0400 && c <= 0x040F) return c + 0x50;
  return c;
}

std::u32string fold(std::u32string_view scalars) {
  std::u32string out(scalars);
  for (char32_t& c : out) c = fold_scalar(c);
  return out;
}

std::string fold(std::string_view text) {
  return encode_utf8(fold(decode_utf8(text)));
}

bool is_space(char32_t c) noexcept {
  switch (c) {
    case U' ':
    case U'\t':
    case U'\n':
    case U'\r':
    case U'\f':
    case U'\v':
    case 0x00A0:   // no-break space
    case 0x2028:   // line separator
    case 0x2029:   // paragraph separator
    case 0x3000:   // ideographic space
      return true;
    default:
      return false;
  }
}

}  // namespace termpref::uni
