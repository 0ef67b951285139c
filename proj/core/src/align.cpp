#include "deidkit/align.hpp"

#include "deidkit/errors.hpp"
#include "deidkit/utf8.hpp"

namespace deidkit {

namespace {

std::string span_label(std::size_t index, const PhiSpan& span) {
    return "span " + std::to_string(index) + " [" + std::to_string(span.start) + "," +
           std::to_string(span.end) + ") " + class_name(span.cls);
}

}  // namespace

AlignResult align(const AnnotatedDocument& doc) {
    AlignResult result;
    result.sequence.doc_id = doc.doc_id;
    result.report.doc_id = doc.doc_id;
    result.sequence.tokens = tokenize(doc.text);
    result.sequence.labels.assign(result.sequence.tokens.size(), kOutsideTag);

    const std::vector<Token>& tokens = result.sequence.tokens;
    std::vector<TagId> labels(tokens.size(), kOutsideTag);

    for (std::size_t s = 0; s < doc.spans.size(); ++s) {
        const PhiSpan& span = doc.spans[s];

        // Collect the tokens the span intersects.
        std::vector<std::size_t> hit;
        bool boundary_inside_token = false;
        for (std::size_t t = 0; t < tokens.size(); ++t) {
            const Token& tok = tokens[t];
            if (tok.end <= span.start) continue;
            if (tok.start >= span.end) break;
            hit.push_back(t);
            if (span.start > tok.start && span.start < tok.end) boundary_inside_token = true;
            if (span.end > tok.start && span.end < tok.end) boundary_inside_token = true;
        }

        if (hit.empty()) {
            result.report.reasons.push_back(span_label(s, span) + ": covers no token");
            continue;
        }
        if (boundary_inside_token) {
            result.report.reasons.push_back(span_label(s, span) +
                                            ": boundary falls inside a token");
            continue;
        }
        const auto begin = begin_tag(span.cls);
        if (!begin.has_value()) {
            result.report.reasons.push_back(span_label(s, span) +
                                            ": class has no begin tag in the scheme");
            continue;
        }
        const auto inside = inside_tag(span.cls);
        if (hit.size() > 1 && !inside.has_value()) {
            result.report.reasons.push_back(
                span_label(s, span) + ": multi-token span but class has no inside tag");
            continue;
        }
        labels[hit.front()] = *begin;
        for (std::size_t k = 1; k < hit.size(); ++k) labels[hit[k]] = *inside;
    }

    if (result.report.reasons.empty()) {
        result.report.status = AlignmentStatus::aligned;
        result.sequence.labels = std::move(labels);
    } else {
        result.report.status = AlignmentStatus::dropped;
        // labels stay all-outside; a dropped document must not leak partial
        // annotations into training data.
    }
    return result;
}

std::vector<ClassId> collapse_bio(const std::vector<TagId>& labels) {
    std::vector<ClassId> out;
    out.reserve(labels.size());
    for (TagId tag : labels) out.push_back(collapse_tag(tag));
    return out;
}

std::vector<PhiSpan> recover_spans(const TokenSequence& seq, const std::string& text) {
    if (seq.tokens.size() != seq.labels.size()) {
        throw InputError("token/label length mismatch");
    }
    if (!is_valid_bio_sequence(seq.labels)) {
        throw ValidationError("label sequence is not BIO-valid");
    }
    const std::u32string points = utf8::decode(text);
    std::vector<PhiSpan> spans;
    std::size_t i = 0;
    while (i < seq.labels.size()) {
        if (!is_begin_tag(seq.labels[i])) {
            ++i;
            continue;
        }
        const ClassId cls = collapse_tag(seq.labels[i]);
        std::size_t j = i + 1;
        while (j < seq.labels.size() && is_inside_tag(seq.labels[j]) &&
               collapse_tag(seq.labels[j]) == cls) {
            ++j;
        }
        PhiSpan span;
        span.start = seq.tokens[i].start;
        span.end = seq.tokens[j - 1].end;
        span.cls = cls;
        if (span.end > points.size()) {
            throw InputError("token offsets exceed the provided text");
        }
        span.surface =
            utf8::encode(std::u32string_view(points).substr(span.start, span.end - span.start));
        spans.push_back(std::move(span));
        i = j;
    }
    return spans;
}

}  // namespace deidkit
