#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "deidkit/align.hpp"
#include "deidkit/vocab.hpp"

// Model-input encoding. A labeled token sequence becomes one or more
// fixed-length windows of subword ids: [CLS] subwords [SEP] padding. Long
// documents are chunked at word boundaries with roughly half-window overlap.
// Labels ride on the first subword of each word; every other position holds
// the ignore sentinel and is excluded from loss and evaluation.

namespace deidkit {

inline constexpr int kIgnoreLabel = -100;
inline constexpr int kNoWord = -1;

struct SubwordEncoding {
    std::string doc_id;
    int window_index = 0;
    std::vector<int> input_ids;
    std::vector<int> word_index;      // source word per subword, kNoWord on specials/padding
    std::vector<int> label_ids;       // tag id on first subwords, kIgnoreLabel elsewhere
    std::vector<int> attention_mask;  // 1 on real positions, 0 on padding
};

bool operator==(const SubwordEncoding& a, const SubwordEncoding& b);

// Encodes one document into windows. Throws ConfigError when max_len < 8.
// Guarantees: all four vectors have length max_len exactly; every word of
// the sequence appears as a first subword in at least one window; a single
// word longer than the subword budget is truncated to fit.
std::vector<SubwordEncoding> encode(const TokenSequence& seq, const SubwordVocab& vocab,
                                    std::size_t max_len);

// Position of a word's first subword in its preferred window. When windows
// overlap, the word prefers the window where it sits farthest from the edge
// of the real (unpadded) content; earlier window on ties.
struct WordSlot {
    int window = -1;    // index into the encode() result
    int position = -1;  // subword position within that window
};

// One slot per word of the original sequence. Throws InputError if some word
// never appears as a first subword (which encode() never produces).
std::vector<WordSlot> first_subword_slots(const std::vector<SubwordEncoding>& windows,
                                          std::size_t n_words);

// Line-delimited serialization of encoded windows, one JSON record per line.
void write_encoded_jsonl(const std::vector<SubwordEncoding>& windows, std::ostream& out);
std::vector<SubwordEncoding> read_encoded_jsonl(std::istream& in);

}  // namespace deidkit
