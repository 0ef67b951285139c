#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "deidkit/encoding.hpp"
#include "deidkit/model.hpp"
#include "deidkit/tags.hpp"

// Token-level scoring over collapsed classes. Overall precision, recall, and
// F1 micro-average the entity classes: true/false positives and negatives are
// summed across all of them, and the non-entity class contributes only to
// accuracy. Every metric is a plain ratio of those integer counts, which is
// what makes the brute-force recount oracle an exact comparison.

namespace deidkit {

struct ConfusionCounts {
    std::array<std::int64_t, kNumClasses> tp{};
    std::array<std::int64_t, kNumClasses> fp{};
    std::array<std::int64_t, kNumClasses> fn{};
    std::int64_t correct = 0;
    std::int64_t total = 0;
};

bool operator==(const ConfusionCounts& a, const ConfusionCounts& b);

struct ClassMetrics {
    ClassId cls = 0;
    std::int64_t support = 0;    // gold tokens: tp + fn
    std::int64_t predicted = 0;  // tp + fp
    std::int64_t tp = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

bool operator==(const ClassMetrics& a, const ClassMetrics& b);

struct EvalReport {
    std::string split_name;
    std::string model_name;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0;
    std::int64_t correct = 0;
    std::int64_t total = 0;
    // One row per class with gold or predicted tokens, in class-id order.
    std::vector<ClassMetrics> rows;
};

bool operator==(const EvalReport& a, const EvalReport& b);

// Tallies one (gold, pred) pairing. Throws InputError on shape mismatch or
// out-of-range class ids.
ConfusionCounts count_confusion(const std::vector<std::vector<ClassId>>& gold,
                                const std::vector<std::vector<ClassId>>& pred);

EvalReport report_from_counts(const ConfusionCounts& counts, std::string split_name,
                              std::string model_name);

// count_confusion + report_from_counts in one step.
EvalReport score(const std::vector<std::vector<ClassId>>& gold,
                 const std::vector<std::vector<ClassId>>& pred,
                 std::string split_name = "", std::string model_name = "");

// Per-word predicted tags from per-window logits: argmax over the logits row
// at each word's first subword, taken in the window where the word sits most
// interior. windows/logits must correspond one to one.
template <typename T>
std::vector<TagId> word_tag_predictions(const std::vector<SubwordEncoding>& windows,
                                        const std::vector<Matrix<T>>& logits,
                                        std::size_t n_words);

enum class ReportFormat { table_text, delimited, bar_data };

// table_text: aligned columns, four decimal places. delimited: tab-separated
// with full-precision numbers so a re-parse reproduces the report exactly.
// bar_data: one "model<TAB>class<TAB>f1" line per entity class row.
std::string render_report(const EvalReport& report, ReportFormat format);

// Inverse of render_report(..., delimited).
EvalReport parse_delimited_report(std::istream& in);

}  // namespace deidkit
