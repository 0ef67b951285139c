#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "deidkit/errors.hpp"

// UTF-8 helpers. All character offsets in this library count Unicode code
// points, not bytes, so corpus parsing and surface rewriting need an exact,
// strict decoder. Overlong encodings, surrogates, and truncated sequences are
// rejected rather than patched over.

namespace deidkit::utf8 {

// Decodes strict UTF-8. Throws Error on malformed input.
std::u32string decode(std::string_view bytes);

// Encodes code points back to UTF-8. Throws Error on values above U+10FFFF
// or in the surrogate range.
std::string encode(std::u32string_view points);

// Number of code points in a valid UTF-8 string.
std::size_t count_points(std::string_view bytes);

// True when the byte sequence is valid UTF-8.
bool is_valid(std::string_view bytes);

}  // namespace deidkit::utf8
