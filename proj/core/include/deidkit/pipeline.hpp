#pragma once

#include <string>
#include <vector>

#include "deidkit/align.hpp"
#include "deidkit/corpus.hpp"
#include "deidkit/encoding.hpp"
#include "deidkit/eval.hpp"
#include "deidkit/model.hpp"
#include "deidkit/train.hpp"
#include "deidkit/vocab.hpp"

// End-to-end plumbing shared by the command line tool and the test
// harnesses: corpus -> aligned token sequences -> encoded windows -> model
// predictions -> scored reports.

namespace deidkit {

struct EncodedDocument {
    TokenSequence sequence;  // tokens with gold labels
    std::vector<SubwordEncoding> windows;
};

struct EncodedDataset {
    std::vector<EncodedDocument> docs;
    std::size_t dropped_documents = 0;

    // Windows of every document pooled, for batch training.
    std::vector<SubwordEncoding> all_windows() const;
};

// Vocabulary over the token surfaces of the given documents.
SubwordVocab build_corpus_vocab(const std::vector<AnnotatedDocument>& docs,
                                std::size_t vocab_size, std::size_t min_freq = 1);

// Aligns and encodes every document; documents that fail alignment are
// counted and left out.
EncodedDataset encode_corpus(const std::vector<AnnotatedDocument>& docs,
                             const SubwordVocab& vocab, std::size_t max_len);

// Keeps the documents whose ids appear in the given list, in corpus order.
std::vector<AnnotatedDocument> filter_documents(const std::vector<AnnotatedDocument>& docs,
                                                const std::vector<std::string>& ids);

// Per-word predicted tags for one encoded document (eval mode).
template <typename T>
std::vector<TagId> predict_word_tags(const TaggerModel<T>& model,
                                     const EncodedDocument& doc);

// Collapsed per-word classes.
template <typename T>
std::vector<ClassId> predict_word_classes(const TaggerModel<T>& model,
                                          const EncodedDocument& doc);

// Scores the model against the gold labels of every document.
template <typename T>
EvalReport evaluate_model(const TaggerModel<T>& model, const EncodedDataset& dataset,
                          std::string split_name, std::string model_name);

ValidationMetrics metrics_from_report(const EvalReport& report);

}  // namespace deidkit
