#pragma once

#include <cstddef>
#include <string>
#include <vector>

// Word tokenization with exact character offsets. Offsets count Unicode code
// points in the source text, matching the span offsets used by the corpus
// format. The rules are simple on purpose: split on ASCII whitespace, then
// peel leading and trailing ASCII punctuation off each chunk as single
// one-character tokens. No sentence splitting.

namespace deidkit {

struct Token {
    std::string surface;   // UTF-8 bytes of the token
    std::size_t start = 0; // code point offset, inclusive
    std::size_t end = 0;   // code point offset, exclusive
};

bool operator==(const Token& a, const Token& b);

// Tokenizes UTF-8 text. Total: never throws on any valid UTF-8 input.
std::vector<Token> tokenize(const std::string& text);

// Same, on already-decoded code points.
std::vector<Token> tokenize(const std::u32string& text);

}  // namespace deidkit
