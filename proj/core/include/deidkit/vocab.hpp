#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

// Subword vocabulary built from corpus token surfaces. Layout is fixed:
// ids 0..4 are the special tokens, ids 5..260 are the 256 byte-fallback
// units "<0x00>".."<0xFF>", and ids 261 and up are whole-surface units
// ordered by descending frequency (ties broken lexicographically). Encoding
// a word is greedy longest-prefix matching over the units; anything left
// unmatched falls back to the UTF-8 bytes of its next code point, so every
// string is encodable and [UNK] is never produced by encoding.

namespace deidkit {

class SubwordVocab {
  public:
    static constexpr int kPadId = 0;
    static constexpr int kUnkId = 1;
    static constexpr int kClsId = 2;
    static constexpr int kSepId = 3;
    static constexpr int kMaskId = 4;
    static constexpr int kFirstByteId = 5;
    static constexpr std::size_t kMinSize = 5 + 256;  // specials + byte units

    // Counts whole token surfaces, keeps those with frequency >= min_freq,
    // and fills the table up to vocab_size. Throws ConfigError when
    // vocab_size cannot hold the specials and byte units.
    static SubwordVocab build(const std::vector<std::string>& surfaces,
                              std::size_t vocab_size, std::size_t min_freq = 1);

    // Restores a vocabulary from an explicit token list (line order = id).
    // Throws ValidationError when the fixed prefix is malformed.
    static SubwordVocab from_tokens(std::vector<std::string> tokens);

    std::size_t size() const { return tokens_.size(); }
    const std::string& token(int id) const;
    std::optional<int> id_of(std::string_view token) const;

    // Subword ids for one word. Non-empty for non-empty input; never fails.
    std::vector<int> encode_word(std::string_view word) const;

    // One token per line, line number = id.
    void save(const std::filesystem::path& path) const;
    static SubwordVocab load(const std::filesystem::path& path);

  private:
    SubwordVocab() = default;
    void index_tokens();

    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
    std::size_t max_unit_length_ = 0;
};

}  // namespace deidkit
