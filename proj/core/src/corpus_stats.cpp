#include <iomanip>
#include <sstream>

#include "deidkit/align.hpp"
#include "deidkit/corpus.hpp"

namespace deidkit {

CorpusStatistics corpus_statistics(const std::vector<AnnotatedDocument>& docs) {
    CorpusStatistics stats;
    stats.rows.resize(kNumClasses);
    for (int c = 0; c < kNumClasses; ++c) stats.rows[static_cast<std::size_t>(c)].cls = c;

    for (const AnnotatedDocument& doc : docs) {
        const AlignResult result = align(doc);
        if (result.report.status == AlignmentStatus::dropped) {
            ++stats.dropped_documents;
            continue;
        }
        ++stats.aligned_documents;
        for (TagId tag : result.sequence.labels) {
            ++stats.rows[static_cast<std::size_t>(collapse_tag(tag))].tokens;
            ++stats.total_tokens;
        }
    }

    for (ClassCountRow& row : stats.rows) {
        row.percent = stats.total_tokens == 0
                          ? 0.0
                          : 100.0 * static_cast<double>(row.tokens) /
                                static_cast<double>(stats.total_tokens);
    }
    return stats;
}

std::string render_statistics(const CorpusStatistics& stats) {
    std::ostringstream out;
    out << "class              tokens   percent\n";
    out << "-----------------  -------  -------\n";
    for (const ClassCountRow& row : stats.rows) {
        out << std::left << std::setw(17) << class_name(row.cls) << "  " << std::right
            << std::setw(7) << row.tokens << "  " << std::setw(6) << std::fixed
            << std::setprecision(2) << row.percent << "%\n";
    }
    out << "total tokens: " << stats.total_tokens << "\n";
    out << "documents aligned: " << stats.aligned_documents
        << ", dropped: " << stats.dropped_documents << "\n";
    return out.str();
}

}  // namespace deidkit
