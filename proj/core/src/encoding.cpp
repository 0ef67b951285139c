#include "deidkit/encoding.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "deidkit/errors.hpp"

namespace deidkit {

bool operator==(const SubwordEncoding& a, const SubwordEncoding& b) {
    return a.doc_id == b.doc_id && a.window_index == b.window_index &&
           a.input_ids == b.input_ids && a.word_index == b.word_index &&
           a.label_ids == b.label_ids && a.attention_mask == b.attention_mask;
}

std::vector<SubwordEncoding> encode(const TokenSequence& seq, const SubwordVocab& vocab,
                                    std::size_t max_len) {
    if (max_len < 8) {
        throw ConfigError("max_len must be at least 8, got " + std::to_string(max_len));
    }
    if (seq.tokens.size() != seq.labels.size()) {
        throw InputError("token/label length mismatch in document " + seq.doc_id);
    }

    const std::size_t budget = max_len - 2;       // room between [CLS] and [SEP]
    const std::size_t stride_budget = max_len / 2;  // max overlap carried into the next window
    const std::size_t n_words = seq.tokens.size();

    std::vector<std::vector<int>> subs(n_words);
    for (std::size_t w = 0; w < n_words; ++w) {
        subs[w] = vocab.encode_word(seq.tokens[w].surface);
        if (subs[w].size() > budget) subs[w].resize(budget);
    }

    // Prefix sums of subword counts for O(1) range sizes.
    std::vector<std::size_t> prefix(n_words + 1, 0);
    for (std::size_t w = 0; w < n_words; ++w) prefix[w + 1] = prefix[w] + subs[w].size();
    const auto range_count = [&](std::size_t lo, std::size_t hi) {
        return prefix[hi] - prefix[lo];
    };

    std::vector<SubwordEncoding> windows;
    std::size_t a = 0;
    while (a < n_words) {
        std::size_t b = a;
        while (b < n_words && range_count(a, b + 1) <= budget) ++b;

        SubwordEncoding enc;
        enc.doc_id = seq.doc_id;
        enc.window_index = static_cast<int>(windows.size());
        enc.input_ids.reserve(max_len);
        enc.input_ids.push_back(SubwordVocab::kClsId);
        enc.word_index.push_back(kNoWord);
        enc.label_ids.push_back(kIgnoreLabel);
        for (std::size_t w = a; w < b; ++w) {
            for (std::size_t k = 0; k < subs[w].size(); ++k) {
                enc.input_ids.push_back(subs[w][k]);
                enc.word_index.push_back(static_cast<int>(w));
                enc.label_ids.push_back(k == 0 ? seq.labels[w] : kIgnoreLabel);
            }
        }
        enc.input_ids.push_back(SubwordVocab::kSepId);
        enc.word_index.push_back(kNoWord);
        enc.label_ids.push_back(kIgnoreLabel);
        enc.attention_mask.assign(enc.input_ids.size(), 1);
        while (enc.input_ids.size() < max_len) {
            enc.input_ids.push_back(SubwordVocab::kPadId);
            enc.word_index.push_back(kNoWord);
            enc.label_ids.push_back(kIgnoreLabel);
            enc.attention_mask.push_back(0);
        }
        windows.push_back(std::move(enc));

        if (b == n_words) break;
        // Start the next window far enough in that the carried-over suffix
        // fits the overlap budget, but always make progress.
        std::size_t next = a + 1;
        while (next < b && range_count(next, b) > stride_budget) ++next;
        a = next;
    }
    return windows;
}

std::vector<WordSlot> first_subword_slots(const std::vector<SubwordEncoding>& windows,
                                          std::size_t n_words) {
    std::vector<WordSlot> slots(n_words);
    std::vector<int> best_distance(n_words, -1);
    for (std::size_t win = 0; win < windows.size(); ++win) {
        const SubwordEncoding& enc = windows[win];
        int real_len = 0;
        for (int m : enc.attention_mask) real_len += m;
        for (std::size_t p = 0; p < enc.input_ids.size(); ++p) {
            if (enc.label_ids[p] == kIgnoreLabel) continue;
            const int w = enc.word_index[p];
            if (w < 0 || static_cast<std::size_t>(w) >= n_words) {
                throw InputError("word index out of range in encoded window");
            }
            const int pos = static_cast<int>(p);
            const int distance = std::min(pos, real_len - 1 - pos);
            if (distance > best_distance[static_cast<std::size_t>(w)]) {
                best_distance[static_cast<std::size_t>(w)] = distance;
                slots[static_cast<std::size_t>(w)] =
                    WordSlot{static_cast<int>(win), pos};
            }
        }
    }
    for (std::size_t w = 0; w < n_words; ++w) {
        if (slots[w].window < 0) {
            throw InputError("word " + std::to_string(w) +
                             " has no first-subword position in any window");
        }
    }
    return slots;
}

void write_encoded_jsonl(const std::vector<SubwordEncoding>& windows, std::ostream& out) {
    for (const SubwordEncoding& enc : windows) {
        nlohmann::json record{
            {"doc_id", enc.doc_id},
            {"window_index", enc.window_index},
            {"input_ids", enc.input_ids},
            {"word_index", enc.word_index},
            {"label_ids", enc.label_ids},
            {"attention_mask", enc.attention_mask},
        };
        out << record.dump() << '\n';
    }
}

std::vector<SubwordEncoding> read_encoded_jsonl(std::istream& in) {
    std::vector<SubwordEncoding> windows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("bad encoded record: ") + e.what(), line_no, 1);
        }
        try {
            SubwordEncoding enc;
            enc.doc_id = record.at("doc_id").get<std::string>();
            enc.window_index = record.at("window_index").get<int>();
            enc.input_ids = record.at("input_ids").get<std::vector<int>>();
            enc.word_index = record.at("word_index").get<std::vector<int>>();
            enc.label_ids = record.at("label_ids").get<std::vector<int>>();
            enc.attention_mask = record.at("attention_mask").get<std::vector<int>>();
            const std::size_t n = enc.input_ids.size();
            if (enc.word_index.size() != n || enc.label_ids.size() != n ||
                enc.attention_mask.size() != n) {
                throw ParseError("encoded record fields differ in length", line_no, 1);
            }
            windows.push_back(std::move(enc));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("bad encoded record: ") + e.what(), line_no, 1);
        }
    }
    return windows;
}

}  // namespace deidkit
