#include "deidkit/tokenize.hpp"

#include "deidkit/utf8.hpp"

namespace deidkit {

namespace {

bool is_ascii_space(char32_t c) {
    return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' ||
           c == U'\v';
}

bool is_ascii_punct(char32_t c) {
    if (c > 0x7F) return false;
    const char ch = static_cast<char>(c);
    return (ch >= '!' && ch <= '/') || (ch >= ':' && ch <= '@') ||
           (ch >= '[' && ch <= '`') || (ch >= '{' && ch <= '~');
}

void emit(std::vector<Token>& out, const std::u32string& text, std::size_t start,
          std::size_t end) {
    if (start >= end) return;
    out.push_back(Token{utf8::encode(std::u32string_view(text).substr(start, end - start)),
                        start, end});
}

// Splits one whitespace-free chunk [start,end) into leading punctuation
// characters, a core, and trailing punctuation characters.
void split_chunk(std::vector<Token>& out, const std::u32string& text,
                 std::size_t start, std::size_t end) {
    std::size_t lo = start;
    std::size_t hi = end;
    std::size_t head = lo;
    while (head < hi && is_ascii_punct(text[head])) ++head;
    std::size_t tail = hi;
    while (tail > head && is_ascii_punct(text[tail - 1])) --tail;
    for (std::size_t i = lo; i < head; ++i) emit(out, text, i, i + 1);
    emit(out, text, head, tail);
    for (std::size_t i = tail; i < hi; ++i) emit(out, text, i, i + 1);
}

}  // namespace

bool operator==(const Token& a, const Token& b) {
    return a.surface == b.surface && a.start == b.start && a.end == b.end;
}

std::vector<Token> tokenize(const std::u32string& text) {
    std::vector<Token> out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        while (i < n && is_ascii_space(text[i])) ++i;
        std::size_t j = i;
        while (j < n && !is_ascii_space(text[j])) ++j;
        if (j > i) split_chunk(out, text, i, j);
        i = j;
    }
    return out;
}

std::vector<Token> tokenize(const std::string& text) {
    return tokenize(utf8::decode(text));
}

}  // namespace deidkit
