#include "termpref/tokenize.hpp"

#include "termpref/unicode.hpp"

namespace termpref {

std::vector<Token> whitespace_tokens(std::string_view text) {
  const std::u32string scalars = uni::decode_utf8(text);
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < scalars.size()) {
    while (i < scalars.size() && uni::is_space(scalars[i])) ++i;
    if (i >= scalars.size()) break;
    const std::size_t start = i;
    while (i < scalars.size() && !uni::is_space(scalars[i])) ++i;
    out.push_back(Token{
        uni::encode_utf8(std::u32string_view(scalars).substr(start, i - start)),
        start, i});
  }
  return out;
}

std::vector<Token> character_tokens(std::string_view text) {
  const std::u32string scalars = uni::decode_utf8(text);
  std::vector<Token> out;
  out.reserve(scalars.size());
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    out.push_back(
        Token{uni::encode_utf8(std::u32string_view(&scalars[i], 1)), i, i + 1});
  }
  return out;
}

}  // namespace termpref
