#include "deidkit/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "deidkit/errors.hpp"
#include "deidkit/utf8.hpp"

namespace deidkit {

namespace {

const char* const kSpecials[5] = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};

std::string byte_unit(unsigned byte) {
    static const char* kHex = "0123456789ABCDEF";
    std::string s = "<0x00>";
    s[3] = kHex[(byte >> 4) & 0xF];
    s[4] = kHex[byte & 0xF];
    return s;
}

// Byte length of the UTF-8 sequence starting at word[i]; 1 on malformed
// input so encoding still always advances.
std::size_t sequence_length(std::string_view word, std::size_t i) {
    const auto b = static_cast<unsigned char>(word[i]);
    std::size_t len = 1;
    if ((b & 0xE0) == 0xC0) len = 2;
    else if ((b & 0xF0) == 0xE0) len = 3;
    else if ((b & 0xF8) == 0xF0) len = 4;
    if (i + len > word.size()) len = 1;
    return len;
}

}  // namespace

SubwordVocab SubwordVocab::build(const std::vector<std::string>& surfaces,
                                 std::size_t vocab_size, std::size_t min_freq) {
    if (vocab_size < kMinSize) {
        throw ConfigError("vocab_size must be at least " + std::to_string(kMinSize) +
                          " (specials plus byte units), got " + std::to_string(vocab_size));
    }

    // std::map keeps candidates in lexicographic order, which makes the
    // frequency sort's tie-break deterministic without a second key lookup.
    std::map<std::string, std::size_t> freq;
    for (const std::string& surface : surfaces) {
        if (!surface.empty()) ++freq[surface];
    }

    std::vector<std::pair<std::string, std::size_t>> candidates;
    candidates.reserve(freq.size());
    for (auto& [surface, count] : freq) {
        if (count >= min_freq) candidates.emplace_back(surface, count);
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });

    SubwordVocab vocab;
    vocab.tokens_.reserve(std::min(vocab_size, kMinSize + candidates.size()));
    for (const char* special : kSpecials) vocab.tokens_.emplace_back(special);
    for (unsigned b = 0; b < 256; ++b) vocab.tokens_.push_back(byte_unit(b));
    for (const auto& [surface, count] : candidates) {
        if (vocab.tokens_.size() >= vocab_size) break;
        vocab.tokens_.push_back(surface);
    }
    vocab.index_tokens();
    return vocab;
}

SubwordVocab SubwordVocab::from_tokens(std::vector<std::string> tokens) {
    if (tokens.size() < kMinSize) {
        throw ValidationError("vocabulary has fewer than " + std::to_string(kMinSize) +
                              " tokens");
    }
    for (int i = 0; i < 5; ++i) {
        if (tokens[static_cast<std::size_t>(i)] != kSpecials[i]) {
            throw ValidationError("vocabulary id " + std::to_string(i) + " must be " +
                                  kSpecials[i]);
        }
    }
    for (unsigned b = 0; b < 256; ++b) {
        if (tokens[kFirstByteId + b] != byte_unit(b)) {
            throw ValidationError("vocabulary id " + std::to_string(kFirstByteId + b) +
                                  " must be the byte unit " + byte_unit(b));
        }
    }
    SubwordVocab vocab;
    vocab.tokens_ = std::move(tokens);
    vocab.index_tokens();
    return vocab;
}

void SubwordVocab::index_tokens() {
    index_.clear();
    max_unit_length_ = 0;
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        const auto [it, inserted] = index_.emplace(tokens_[i], static_cast<int>(i));
        if (!inserted) {
            throw ValidationError("duplicate vocabulary token: " + tokens_[i]);
        }
        if (i >= kMinSize) max_unit_length_ = std::max(max_unit_length_, tokens_[i].size());
    }
}

const std::string& SubwordVocab::token(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
        throw InputError("vocabulary id out of range: " + std::to_string(id));
    }
    return tokens_[static_cast<std::size_t>(id)];
}

std::optional<int> SubwordVocab::id_of(std::string_view token) const {
    const auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::vector<int> SubwordVocab::encode_word(std::string_view word) const {
    std::vector<int> ids;
    std::size_t i = 0;
    while (i < word.size()) {
        // Longest unit that prefixes the rest of the word.
        int matched = -1;
        std::size_t matched_len = 0;
        const std::size_t cap = std::min(max_unit_length_, word.size() - i);
        for (std::size_t len = cap; len >= 1; --len) {
            const auto it = index_.find(std::string(word.substr(i, len)));
            if (it != index_.end() && it->second >= static_cast<int>(kMinSize)) {
                matched = it->second;
                matched_len = len;
                break;
            }
        }
        if (matched >= 0) {
            ids.push_back(matched);
            i += matched_len;
            continue;
        }
        // Byte fallback for the next code point.
        const std::size_t len = sequence_length(word, i);
        for (std::size_t k = 0; k < len; ++k) {
            ids.push_back(kFirstByteId + static_cast<unsigned char>(word[i + k]));
        }
        i += len;
    }
    return ids;
}

void SubwordVocab::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    for (const std::string& token : tokens_) out << token << '\n';
}

SubwordVocab SubwordVocab::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        tokens.push_back(line);
    }
    // A trailing newline produces no extra element with getline, but guard
    // against an accidental final blank line anyway.
    while (!tokens.empty() && tokens.back().empty()) tokens.pop_back();
    return from_tokens(std::move(tokens));
}

}  // namespace deidkit
