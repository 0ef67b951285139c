#include "deidkit/eval.hpp"

#include <charconv>
#include <iomanip>
#include <istream>
#include <sstream>

#include "deidkit/errors.hpp"

namespace deidkit {

namespace {

double ratio(std::int64_t num, std::int64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double f1_of(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

// Full-precision text for exact round-trips through the delimited format.
std::string full_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value,
                                         std::chars_format::general, 17);
    return std::string(buf, ptr);
}

double parse_double(const std::string& text, int line_no) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ParseError("bad number '" + text + "'", line_no, 1);
    }
    return value;
}

std::int64_t parse_int(const std::string& text, int line_no) {
    std::int64_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ParseError("bad integer '" + text + "'", line_no, 1);
    }
    return value;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t from = 0;
    for (;;) {
        const std::size_t tab = line.find('\t', from);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(from));
            return fields;
        }
        fields.push_back(line.substr(from, tab - from));
        from = tab + 1;
    }
}

}  // namespace

bool operator==(const ConfusionCounts& a, const ConfusionCounts& b) {
    return a.tp == b.tp && a.fp == b.fp && a.fn == b.fn && a.correct == b.correct &&
           a.total == b.total;
}

bool operator==(const ClassMetrics& a, const ClassMetrics& b) {
    return a.cls == b.cls && a.support == b.support && a.predicted == b.predicted &&
           a.tp == b.tp && a.precision == b.precision && a.recall == b.recall &&
           a.f1 == b.f1;
}

bool operator==(const EvalReport& a, const EvalReport& b) {
    return a.split_name == b.split_name && a.model_name == b.model_name &&
           a.precision == b.precision && a.recall == b.recall && a.f1 == b.f1 &&
           a.accuracy == b.accuracy && a.correct == b.correct && a.total == b.total &&
           a.rows == b.rows;
}

ConfusionCounts count_confusion(const std::vector<std::vector<ClassId>>& gold,
                                const std::vector<std::vector<ClassId>>& pred) {
    if (gold.size() != pred.size()) {
        throw InputError("gold and predicted label lists differ in document count");
    }
    ConfusionCounts counts;
    for (std::size_t d = 0; d < gold.size(); ++d) {
        if (gold[d].size() != pred[d].size()) {
            throw InputError("gold and predicted label lists differ in length at document " +
                             std::to_string(d));
        }
        for (std::size_t i = 0; i < gold[d].size(); ++i) {
            const ClassId g = gold[d][i];
            const ClassId p = pred[d][i];
            if (g < 0 || g >= kNumClasses || p < 0 || p >= kNumClasses) {
                throw InputError("class id out of range in label lists");
            }
            ++counts.total;
            if (g == p) {
                ++counts.correct;
                ++counts.tp[static_cast<std::size_t>(g)];
            } else {
                ++counts.fn[static_cast<std::size_t>(g)];
                ++counts.fp[static_cast<std::size_t>(p)];
            }
        }
    }
    return counts;
}

EvalReport report_from_counts(const ConfusionCounts& counts, std::string split_name,
                              std::string model_name) {
    EvalReport report;
    report.split_name = std::move(split_name);
    report.model_name = std::move(model_name);
    report.correct = counts.correct;
    report.total = counts.total;
    report.accuracy = ratio(counts.correct, counts.total);

    std::int64_t tp_sum = 0;
    std::int64_t pred_sum = 0;
    std::int64_t gold_sum = 0;
    for (int c = 0; c < kNumClasses; ++c) {
        const auto idx = static_cast<std::size_t>(c);
        const std::int64_t tp = counts.tp[idx];
        const std::int64_t fp = counts.fp[idx];
        const std::int64_t fn = counts.fn[idx];
        if (c != kNonPhiClass) {
            tp_sum += tp;
            pred_sum += tp + fp;
            gold_sum += tp + fn;
        }
        if (tp + fp + fn == 0) continue;
        ClassMetrics row;
        row.cls = c;
        row.support = tp + fn;
        row.predicted = tp + fp;
        row.tp = tp;
        row.precision = ratio(tp, tp + fp);
        row.recall = ratio(tp, tp + fn);
        row.f1 = f1_of(row.precision, row.recall);
        report.rows.push_back(row);
    }
    report.precision = ratio(tp_sum, pred_sum);
    report.recall = ratio(tp_sum, gold_sum);
    report.f1 = f1_of(report.precision, report.recall);
    return report;
}

EvalReport score(const std::vector<std::vector<ClassId>>& gold,
                 const std::vector<std::vector<ClassId>>& pred, std::string split_name,
                 std::string model_name) {
    return report_from_counts(count_confusion(gold, pred), std::move(split_name),
                              std::move(model_name));
}

template <typename T>
std::vector<TagId> word_tag_predictions(const std::vector<SubwordEncoding>& windows,
                                        const std::vector<Matrix<T>>& logits,
                                        std::size_t n_words) {
    if (windows.size() != logits.size()) {
        throw InputError("window and logits counts differ");
    }
    const std::vector<WordSlot> slots = first_subword_slots(windows, n_words);
    std::vector<TagId> predictions(n_words, kOutsideTag);
    for (std::size_t w = 0; w < n_words; ++w) {
        const WordSlot& slot = slots[w];
        const Matrix<T>& l = logits[static_cast<std::size_t>(slot.window)];
        if (slot.position >= l.rows()) {
            throw InputError("logits shorter than window at word " + std::to_string(w));
        }
        Eigen::Index best = 0;
        l.row(slot.position).maxCoeff(&best);
        predictions[w] = static_cast<TagId>(best);
    }
    return predictions;
}

template std::vector<TagId> word_tag_predictions(const std::vector<SubwordEncoding>&,
                                                 const std::vector<Matrix<float>>&,
                                                 std::size_t);
template std::vector<TagId> word_tag_predictions(const std::vector<SubwordEncoding>&,
                                                 const std::vector<Matrix<double>>&,
                                                 std::size_t);

std::string render_report(const EvalReport& report, ReportFormat format) {
    std::ostringstream out;
    switch (format) {
        case ReportFormat::table_text: {
            out << "split: " << report.split_name << "  model: " << report.model_name
                << "\n\n";
            out << std::fixed << std::setprecision(4);
            out << "overall  precision " << report.precision << "  recall " << report.recall
                << "  f1 " << report.f1 << "  accuracy " << report.accuracy << "\n\n";
            out << "class              support  precision  recall    f1\n";
            out << "-----------------  -------  ---------  ------  ------\n";
            for (const ClassMetrics& row : report.rows) {
                out << std::left << std::setw(17) << class_name(row.cls) << "  " << std::right
                    << std::setw(7) << row.support << "  " << std::setw(9) << row.precision
                    << "  " << std::setw(6) << row.recall << "  " << std::setw(6) << row.f1
                    << "\n";
            }
            return out.str();
        }
        case ReportFormat::delimited: {
            out << "split\t" << report.split_name << "\n";
            out << "model\t" << report.model_name << "\n";
            out << "overall\t" << full_double(report.precision) << "\t"
                << full_double(report.recall) << "\t" << full_double(report.f1) << "\t"
                << full_double(report.accuracy) << "\n";
            out << "counts\t" << report.correct << "\t" << report.total << "\n";
            for (const ClassMetrics& row : report.rows) {
                out << "class\t" << class_name(row.cls) << "\t" << row.support << "\t"
                    << row.predicted << "\t" << row.tp << "\t" << full_double(row.precision)
                    << "\t" << full_double(row.recall) << "\t" << full_double(row.f1) << "\n";
            }
            return out.str();
        }
        case ReportFormat::bar_data: {
            out << std::fixed << std::setprecision(4);
            for (const ClassMetrics& row : report.rows) {
                if (row.cls == kNonPhiClass) continue;
                out << report.model_name << "\t" << class_name(row.cls) << "\t" << row.f1
                    << "\n";
            }
            return out.str();
        }
    }
    throw ConfigError("unknown report format");
}

EvalReport parse_delimited_report(std::istream& in) {
    EvalReport report;
    std::string line;
    int line_no = 0;
    bool saw_overall = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_tabs(line);
        const std::string& kind = fields[0];
        if (kind == "split" && fields.size() == 2) {
            report.split_name = fields[1];
        } else if (kind == "model" && fields.size() == 2) {
            report.model_name = fields[1];
        } else if (kind == "overall" && fields.size() == 5) {
            report.precision = parse_double(fields[1], line_no);
            report.recall = parse_double(fields[2], line_no);
            report.f1 = parse_double(fields[3], line_no);
            report.accuracy = parse_double(fields[4], line_no);
            saw_overall = true;
        } else if (kind == "counts" && fields.size() == 3) {
            report.correct = parse_int(fields[1], line_no);
            report.total = parse_int(fields[2], line_no);
        } else if (kind == "class" && fields.size() == 8) {
            ClassMetrics row;
            row.cls = class_from_name(fields[1]);
            row.support = parse_int(fields[2], line_no);
            row.predicted = parse_int(fields[3], line_no);
            row.tp = parse_int(fields[4], line_no);
            row.precision = parse_double(fields[5], line_no);
            row.recall = parse_double(fields[6], line_no);
            row.f1 = parse_double(fields[7], line_no);
            report.rows.push_back(row);
        } else {
            throw ParseError("unrecognized report line", line_no, 1);
        }
    }
    if (!saw_overall) {
        throw ParseError("report has no overall line", line_no, 1);
    }
    return report;
}

}  // namespace deidkit
