#include "deidkit/pipeline.hpp"

#include <unordered_set>

namespace deidkit {

std::vector<SubwordEncoding> EncodedDataset::all_windows() const {
    std::vector<SubwordEncoding> windows;
    for (const EncodedDocument& doc : docs) {
        windows.insert(windows.end(), doc.windows.begin(), doc.windows.end());
    }
    return windows;
}

SubwordVocab build_corpus_vocab(const std::vector<AnnotatedDocument>& docs,
                                std::size_t vocab_size, std::size_t min_freq) {
    std::vector<std::string> surfaces;
    for (const AnnotatedDocument& doc : docs) {
        for (const Token& token : tokenize(doc.text)) surfaces.push_back(token.surface);
    }
    return SubwordVocab::build(surfaces, vocab_size, min_freq);
}

EncodedDataset encode_corpus(const std::vector<AnnotatedDocument>& docs,
                             const SubwordVocab& vocab, std::size_t max_len) {
    EncodedDataset dataset;
    for (const AnnotatedDocument& doc : docs) {
        AlignResult aligned = align(doc);
        if (aligned.report.status == AlignmentStatus::dropped) {
            ++dataset.dropped_documents;
            continue;
        }
        EncodedDocument encoded;
        encoded.windows = encode(aligned.sequence, vocab, max_len);
        encoded.sequence = std::move(aligned.sequence);
        dataset.docs.push_back(std::move(encoded));
    }
    return dataset;
}

std::vector<AnnotatedDocument> filter_documents(const std::vector<AnnotatedDocument>& docs,
                                                const std::vector<std::string>& ids) {
    std::unordered_set<std::string> wanted(ids.begin(), ids.end());
    std::vector<AnnotatedDocument> out;
    for (const AnnotatedDocument& doc : docs) {
        if (wanted.count(doc.doc_id) > 0) out.push_back(doc);
    }
    return out;
}

template <typename T>
std::vector<TagId> predict_word_tags(const TaggerModel<T>& model,
                                     const EncodedDocument& doc) {
    std::vector<Matrix<T>> logits;
    logits.reserve(doc.windows.size());
    for (const SubwordEncoding& window : doc.windows) {
        logits.push_back(
            forward(model, window.input_ids, window.attention_mask).logits);
    }
    return word_tag_predictions(doc.windows, logits, doc.sequence.tokens.size());
}

template <typename T>
std::vector<ClassId> predict_word_classes(const TaggerModel<T>& model,
                                          const EncodedDocument& doc) {
    return collapse_bio(predict_word_tags(model, doc));
}

template <typename T>
EvalReport evaluate_model(const TaggerModel<T>& model, const EncodedDataset& dataset,
                          std::string split_name, std::string model_name) {
    std::vector<std::vector<ClassId>> gold;
    std::vector<std::vector<ClassId>> pred;
    gold.reserve(dataset.docs.size());
    pred.reserve(dataset.docs.size());
    for (const EncodedDocument& doc : dataset.docs) {
        gold.push_back(collapse_bio(doc.sequence.labels));
        pred.push_back(predict_word_classes(model, doc));
    }
    return score(gold, pred, std::move(split_name), std::move(model_name));
}

ValidationMetrics metrics_from_report(const EvalReport& report) {
    ValidationMetrics metrics;
    metrics.precision = report.precision;
    metrics.recall = report.recall;
    metrics.f1 = report.f1;
    metrics.accuracy = report.accuracy;
    return metrics;
}

template std::vector<TagId> predict_word_tags(const TaggerModel<float>&,
                                              const EncodedDocument&);
template std::vector<TagId> predict_word_tags(const TaggerModel<double>&,
                                              const EncodedDocument&);
template std::vector<ClassId> predict_word_classes(const TaggerModel<float>&,
                                                   const EncodedDocument&);
template std::vector<ClassId> predict_word_classes(const TaggerModel<double>&,
                                                   const EncodedDocument&);
template EvalReport evaluate_model(const TaggerModel<float>&, const EncodedDataset&,
                                   std::string, std::string);
template EvalReport evaluate_model(const TaggerModel<double>&, const EncodedDataset&,
                                   std::string, std::string);

}  // namespace deidkit
