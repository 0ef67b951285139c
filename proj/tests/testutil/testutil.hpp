#pragma once

// Reference implementations for oracle-style tests. Everything here is
// written the slow, obvious way (scalar loops, recounting from scratch) so a
// disagreement with the library points at the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "deidkit/corpus.hpp"
#include "deidkit/model.hpp"
#include "deidkit/tags.hpp"

namespace testutil {

// Scaled dot-product attention as four nested scalar loops.
// q: n x d, k/v: m x d. mask[j] == 0 hides key column j.
struct NaiveAttention {
    deidkit::Matrix<double> probs;   // n x m
    deidkit::Matrix<double> output;  // n x d
};

inline NaiveAttention naive_attention(const deidkit::Matrix<double>& q,
                                      const deidkit::Matrix<double>& k,
                                      const deidkit::Matrix<double>& v,
                                      const std::vector<int>& mask) {
    const auto n = q.rows();
    const auto m = k.rows();
    const auto d = q.cols();
    NaiveAttention result;
    result.probs.setZero(n, m);
    result.output.setZero(n, d);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (Eigen::Index i = 0; i < n; ++i) {
        // raw scores, with masked columns forced to -infinity
        std::vector<double> scores(static_cast<std::size_t>(m));
        double best = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < m; ++j) {
            double dot = 0.0;
            for (Eigen::Index c = 0; c < d; ++c) dot += q(i, c) * k(j, c);
            dot *= scale;
            if (mask[static_cast<std::size_t>(j)] == 0) {
                dot = -std::numeric_limits<double>::infinity();
            }
            scores[static_cast<std::size_t>(j)] = dot;
            best = std::max(best, dot);
        }
        double denom = 0.0;
        for (Eigen::Index j = 0; j < m; ++j) {
            denom += std::exp(scores[static_cast<std::size_t>(j)] - best);
        }
        for (Eigen::Index j = 0; j < m; ++j) {
            result.probs(i, j) = std::exp(scores[static_cast<std::size_t>(j)] - best) / denom;
        }
        for (Eigen::Index c = 0; c < d; ++c) {
            double acc = 0.0;
            for (Eigen::Index j = 0; j < m; ++j) acc += result.probs(i, j) * v(j, c);
            result.output(i, c) = acc;
        }
    }
    return result;
}

// Confusion recount from scratch: tallies of (gold, predicted) class pairs
// plus the derived micro metrics, all as plain loops over plain ints.
struct RecountResult {
    std::array<std::array<long, deidkit::kNumClasses>, deidkit::kNumClasses> pairs{};
    long correct = 0;
    long total = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0;
};

inline RecountResult recount(const std::vector<std::vector<deidkit::ClassId>>& gold,
                             const std::vector<std::vector<deidkit::ClassId>>& pred) {
    RecountResult r;
    for (std::size_t d = 0; d < gold.size(); ++d) {
        for (std::size_t i = 0; i < gold[d].size(); ++i) {
            const int g = gold[d][i];
            const int p = pred[d][i];
            r.pairs[static_cast<std::size_t>(g)][static_cast<std::size_t>(p)] += 1;
            r.total += 1;
            if (g == p) r.correct += 1;
        }
    }
    long tp_sum = 0, fp_sum = 0, fn_sum = 0;
    for (int c = 0; c < deidkit::kNumPhiClasses; ++c) {
        for (int o = 0; o < deidkit::kNumClasses; ++o) {
            if (o == c) {
                tp_sum += r.pairs[static_cast<std::size_t>(c)][static_cast<std::size_t>(o)];
            } else {
                fn_sum += r.pairs[static_cast<std::size_t>(c)][static_cast<std::size_t>(o)];
                fp_sum += r.pairs[static_cast<std::size_t>(o)][static_cast<std::size_t>(c)];
            }
        }
    }
    // A pair (gold=phi_a, pred=phi_b) was counted once as fn of a and once as
    // fp of b by the loop above only when the other index is also a PHI
    // class; pairs where the other side is Non-PHI came in once. Both match
    // the per-class definition: fn = gold c predicted anything else, fp =
    // predicted c on anything else.
    r.precision = tp_sum + fp_sum == 0 ? 0.0
                                       : static_cast<double>(tp_sum) /
                                             static_cast<double>(tp_sum + fp_sum);
    r.recall = tp_sum + fn_sum == 0 ? 0.0
                                    : static_cast<double>(tp_sum) /
                                          static_cast<double>(tp_sum + fn_sum);
    r.f1 = r.precision + r.recall == 0.0
               ? 0.0
               : 2.0 * r.precision * r.recall / (r.precision + r.recall);
    r.accuracy = r.total == 0 ? 0.0
                              : static_cast<double>(r.correct) / static_cast<double>(r.total);
    return r;
}

// Independent sliding-window plan: given the subword count of every word and
// the window budget, lists the first word of each window the same way a
// person would step through the document by hand.
inline std::vector<std::size_t> reference_window_starts(const std::vector<std::size_t>& counts,
                                                        std::size_t max_len) {
    const std::size_t budget = max_len - 2;
    const std::size_t stride_budget = max_len / 2;
    std::vector<std::size_t> starts;
    std::size_t begin = 0;
    while (begin < counts.size()) {
        starts.push_back(begin);
        // extend the window greedily
        std::size_t used = 0;
        std::size_t end = begin;
        while (end < counts.size()) {
            const std::size_t need = std::min(counts[end], budget);
            if (used + need > budget) break;
            used += need;
            ++end;
        }
        if (end >= counts.size()) break;
        // next window starts at the first word whose suffix inside the
        // current window fits the stride budget, moving at least one word
        std::size_t next = begin + 1;
        while (next < end) {
            std::size_t suffix = 0;
            for (std::size_t w = next; w < end; ++w) suffix += std::min(counts[w], budget);
            if (suffix <= stride_budget) break;
            ++next;
        }
        begin = next;
    }
    return starts;
}

// Tokenizer reference: a character-class state machine over code points,
// structured differently from the production splitter.
struct SimpleToken {
    std::string surface;
    std::size_t start = 0;
    std::size_t end = 0;
};

inline bool ref_is_space(char32_t c) {
    return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v';
}

inline bool ref_is_punct(char32_t c) {
    static const std::u32string kPunct = U"!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";
    return kPunct.find(c) != std::u32string::npos;
}

std::vector<SimpleToken> reference_tokenize(const std::u32string& text);

// Random BIO-valid label sequence over n tokens, as tag ids.
std::vector<deidkit::TagId> random_bio_labels(std::uint64_t seed, std::size_t n);

}  // namespace testutil
