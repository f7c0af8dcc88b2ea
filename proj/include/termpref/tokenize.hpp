#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace termpref {

// A token together with its character span in the source text. Offsets count
// Unicode scalar values, not bytes, matching the span convention used by the
// fuzzy matcher.
struct Token {
  std::string text;
  std::size_t start = 0;  // inclusive
  std::size_t end = 0;    // exclusive
};

using Tokenizer = std::function<std::vector<Token>(std::string_view)>;

// Splits on Unicode whitespace; tokens carry their original spans.
std::vector<Token> whitespace_tokens(std::string_view text);

// One token per Unicode scalar value.
std::vector<Token> character_tokens(std::string_view text);

}  // namespace termpref
