#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "deidkit/tags.hpp"

// Annotated-corpus model and serialization. Documents live one per XML file:
// the note text in a CDATA section under TEXT, the entity annotations as
// empty elements under TAGS carrying id/start/end/text/TYPE attributes.
// All offsets count Unicode code points of the text payload.

namespace deidkit {

struct PhiSpan {
    std::size_t start = 0;  // inclusive
    std::size_t end = 0;    // exclusive
    ClassId cls = 0;
    std::string surface;    // UTF-8 copy of text[start,end)
};

bool operator==(const PhiSpan& a, const PhiSpan& b);

struct AnnotatedDocument {
    std::string doc_id;
    std::string text;  // UTF-8
    std::vector<PhiSpan> spans;  // sorted by start, non-overlapping
};

bool operator==(const AnnotatedDocument& a, const AnnotatedDocument& b);

struct ParseOptions {
    // Overlapping annotation pairs are an error by default. With
    // keep_longest, the longer span of each overlapping pair is retained
    // (earlier span on equal length) instead of failing.
    bool keep_longest = false;
};

// Parses one document from i2b2-style XML. Throws ParseError (with line and
// column) on malformed markup, ValidationError on span inconsistencies.
AnnotatedDocument parse_document(const std::string& xml, const ParseOptions& options = {});

// Serializes a document such that parse_document(write_document(doc)) == doc.
std::string write_document(const AnnotatedDocument& doc);

// Directory helpers: one "<doc_id>.xml" per document.
std::vector<AnnotatedDocument> load_corpus_dir(const std::filesystem::path& dir,
                                               const ParseOptions& options = {});
void save_corpus_dir(const std::vector<AnnotatedDocument>& docs,
                     const std::filesystem::path& dir);

struct SplitRatios {
    double train = 0.50;
    double validation = 0.10;
    double test = 0.40;
};

struct CorpusSplit {
    std::vector<std::string> train;
    std::vector<std::string> validation;
    std::vector<std::string> test;
    std::uint64_t seed = 0;
    SplitRatios ratios;
};

// Randomly partitions document ids. Sizes are floor(train_ratio*n) and
// floor(validation_ratio*n); the remaining documents go to test, which is
// what makes 10 docs at 0.5/0.1/0.4 come out as 5/1/4. Deterministic for a
// fixed seed. Throws ConfigError on bad ratios or fewer than 3 documents.
CorpusSplit split_corpus(const std::vector<std::string>& doc_ids,
                         const SplitRatios& ratios, std::uint64_t seed);
CorpusSplit split_corpus(const std::vector<AnnotatedDocument>& docs,
                         const SplitRatios& ratios, std::uint64_t seed);

// Split manifest: one "doc_id<TAB>subset" line per document, subsets named
// train / validation / test. The reader skips blank lines and lines starting
// with '#', so tools may prepend provenance headers (seed, ratios).
void write_split_manifest(const CorpusSplit& split, std::ostream& out);
void write_split_manifest(const CorpusSplit& split, const std::filesystem::path& path);
CorpusSplit read_split_manifest(std::istream& in);
CorpusSplit read_split_manifest(const std::filesystem::path& path);

struct ClassCountRow {
    ClassId cls = 0;
    std::size_t tokens = 0;
    double percent = 0.0;
};

struct CorpusStatistics {
    std::vector<ClassCountRow> rows;  // kNumClasses rows in class-id order
    std::size_t total_tokens = 0;
    std::size_t aligned_documents = 0;
    std::size_t dropped_documents = 0;
};

// Token-level class counts over the documents that align cleanly. Percentages
// are of the total token count and sum to 100.
CorpusStatistics corpus_statistics(const std::vector<AnnotatedDocument>& docs);

// Renders the statistics as an aligned text table.
std::string render_statistics(const CorpusStatistics& stats);

}  // namespace deidkit
