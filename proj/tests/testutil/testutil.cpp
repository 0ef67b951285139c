#include "testutil.hpp"

#include "deidkit/rng.hpp"
#include "deidkit/utf8.hpp"

namespace testutil {

std::vector<SimpleToken> reference_tokenize(const std::u32string& text) {
    std::vector<SimpleToken> tokens;
    const auto emit = [&](std::size_t from, std::size_t to) {
        if (from >= to) return;
        SimpleToken t;
        t.surface = deidkit::utf8::encode(std::u32string_view(text).substr(from, to - from));
        t.start = from;
        t.end = to;
        tokens.push_back(std::move(t));
    };
    std::size_t i = 0;
    while (i < text.size()) {
        if (ref_is_space(text[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < text.size() && !ref_is_space(text[j])) ++j;
        std::size_t a = i;
        while (a < j && ref_is_punct(text[a])) {
            emit(a, a + 1);
            ++a;
        }
        std::size_t b = j;
        while (b > a && ref_is_punct(text[b - 1])) --b;
        emit(a, b);
        for (std::size_t p = b; p < j; ++p) emit(p, p + 1);
        i = j;
    }
    return tokens;
}

std::vector<deidkit::TagId> random_bio_labels(std::uint64_t seed, std::size_t n) {
    deidkit::Rng rng(seed);
    std::vector<deidkit::TagId> labels;
    labels.reserve(n);
    while (labels.size() < n) {
        if (rng.uniform() < 0.7) {
            labels.push_back(deidkit::kOutsideTag);
            continue;
        }
        // begin a random entity, then possibly continue it
        const deidkit::TagId begin = static_cast<deidkit::TagId>(rng.uniform_below(22));
        labels.push_back(begin);
        const auto inside = deidkit::inside_tag(deidkit::collapse_tag(begin));
        if (!inside.has_value()) continue;
        while (labels.size() < n && rng.uniform() < 0.4) {
            labels.push_back(*inside);
        }
    }
    return labels;
}

}  // namespace testutil
