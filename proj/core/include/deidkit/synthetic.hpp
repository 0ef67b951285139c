#pragma once

#include <cstdint>
#include <vector>

#include "deidkit/corpus.hpp"
#include "deidkit/tags.hpp"

// Synthetic note generator. The real corpus is access-controlled, so all
// desk-scale runs use generated documents that are format-identical: note-like
// text with entity fills whose gold spans are exact by construction and land
// on token boundaries. Classes that the tag scheme cannot begin (STREET) are
// rejected, since no generated span of that class could ever survive
// alignment.

namespace deidkit {

struct SyntheticOptions {
    // Entity classes to draw from. Every listed class is guaranteed to appear
    // at least once across the corpus. Empty list is a config error.
    std::vector<ClassId> class_mix;
    // Approximate share of entity-bearing sentences; tuned so the entity
    // token fraction lands near 3.5 percent.
    double phi_sentence_rate = 0.40;
};

// All generatable classes: the 22 classes with a begin tag.
std::vector<ClassId> default_class_mix();

// Deterministic for fixed (n_docs, seed, options). Document ids are
// "synth-0000", "synth-0001", ... Throws ConfigError on n_docs == 0, an empty
// class mix, or a class without a begin tag.
std::vector<AnnotatedDocument> generate_synthetic_corpus(std::size_t n_docs,
                                                         std::uint64_t seed,
                                                         const SyntheticOptions& options);

}  // namespace deidkit
