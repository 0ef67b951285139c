#pragma once

#include <string>
#include <vector>

#include "deidkit/corpus.hpp"
#include "deidkit/tags.hpp"
#include "deidkit/tokenize.hpp"

// Projection of character-level entity spans onto word tokens as BIO labels.
// Documents whose annotations cannot be represented in the tag scheme are
// reported dropped rather than silently mangled: a span boundary falling
// strictly inside a token, a multi-token span for a class with no inside
// tag, a span for a class with no begin tag, or a span covering no token.

namespace deidkit {

struct TokenSequence {
    std::string doc_id;
    std::vector<Token> tokens;
    std::vector<TagId> labels;  // same length as tokens
};

enum class AlignmentStatus { aligned, dropped };

struct AlignmentReport {
    std::string doc_id;
    AlignmentStatus status = AlignmentStatus::aligned;
    // One human-readable reason per failed span, indexed "span k: ...".
    std::vector<std::string> reasons;
};

struct AlignResult {
    TokenSequence sequence;
    AlignmentReport report;
};

// Tokenizes the document and labels each token. On failure the report lists
// every offending span and the sequence carries all-outside labels.
AlignResult align(const AnnotatedDocument& doc);

// Pointwise collapse of a label sequence to class ids.
std::vector<ClassId> collapse_bio(const std::vector<TagId>& labels);

// Inverse of labeling: contiguous B-X (I-X)* runs back to character spans
// using token offsets. Input must be BIO-valid.
std::vector<PhiSpan> recover_spans(const TokenSequence& seq, const std::string& text);

}  // namespace deidkit
