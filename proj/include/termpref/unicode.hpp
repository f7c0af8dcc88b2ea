#pragma once

#include <string>
#include <string_view>

namespace termpref::uni {

// Decodes UTF-8 into Unicode scalar values. Throws std::runtime_error on
// malformed input (truncated or overlong sequences, surrogates, values past
// U+10FFFF), naming the byte offset of the offending sequence.
std::u32string decode_utf8(std::string_view text);

std::string encode_utf8(std::u32string_view scalars);

// Simple one-to-one case folding. Covers ASCII, Latin-1, Latin Extended-A,
// Greek and Cyrillic letters; every other scalar folds to itself. Folding is
// length-preserving, so offsets into a folded string line up with offsets
// into the original.
char32_t fold_scalar(char32_t c) noexcept;
std::u32string fold(std::u32string_view scalars);
std::string fold(std::string_view text);

bool is_space(char32_t c) noexcept;

}  // namespace termpref::uni
