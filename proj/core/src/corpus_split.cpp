#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "deidkit/corpus.hpp"
#include "deidkit/errors.hpp"
#include "deidkit/rng.hpp"

namespace deidkit {

namespace {

void check_ratios(const SplitRatios& r) {
    if (r.train <= 0.0 || r.validation <= 0.0 || r.test <= 0.0) {
        throw ConfigError("split ratios must all be positive");
    }
    if (std::abs(r.train + r.validation + r.test - 1.0) > 1e-9) {
        throw ConfigError("split ratios must sum to 1");
    }
}

}  // namespace

CorpusSplit split_corpus(const std::vector<std::string>& doc_ids,
                         const SplitRatios& ratios, std::uint64_t seed) {
    check_ratios(ratios);
    if (doc_ids.size() < 3) {
        throw ConfigError("need at least 3 documents to split, got " +
                          std::to_string(doc_ids.size()));
    }
    std::set<std::string> unique(doc_ids.begin(), doc_ids.end());
    if (unique.size() != doc_ids.size()) {
        throw ConfigError("duplicate document ids in split input");
    }

    std::vector<std::string> shuffled = doc_ids;
    Rng rng(seed);
    rng.shuffle(shuffled);

    const std::size_t n = shuffled.size();
    const auto n_train = static_cast<std::size_t>(std::floor(ratios.train * static_cast<double>(n)));
    const auto n_val = static_cast<std::size_t>(std::floor(ratios.validation * static_cast<double>(n)));

    CorpusSplit split;
    split.seed = seed;
    split.ratios = ratios;
    split.train.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.validation.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_train),
                            shuffled.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    split.test.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_train + n_val),
                      shuffled.end());
    return split;
}

CorpusSplit split_corpus(const std::vector<AnnotatedDocument>& docs,
                         const SplitRatios& ratios, std::uint64_t seed) {
    std::vector<std::string> ids;
    ids.reserve(docs.size());
    for (const AnnotatedDocument& doc : docs) ids.push_back(doc.doc_id);
    return split_corpus(ids, ratios, seed);
}

void write_split_manifest(const CorpusSplit& split, std::ostream& out) {
    for (const std::string& id : split.train) out << id << "\ttrain\n";
    for (const std::string& id : split.validation) out << id << "\tvalidation\n";
    for (const std::string& id : split.test) out << id << "\ttest\n";
}

void write_split_manifest(const CorpusSplit& split, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    write_split_manifest(split, out);
}

CorpusSplit read_split_manifest(std::istream& in) {
    CorpusSplit split;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;  // '#' starts a header comment
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos || tab == 0) {
            throw ParseError("split manifest line is not 'doc_id<TAB>subset'", line_no, 1);
        }
        const std::string id = line.substr(0, tab);
        const std::string subset = line.substr(tab + 1);
        if (subset == "train") {
            split.train.push_back(id);
        } else if (subset == "validation") {
            split.validation.push_back(id);
        } else if (subset == "test") {
            split.test.push_back(id);
        } else {
            throw ParseError("unknown subset '" + subset + "'", line_no,
                             static_cast<int>(tab) + 2);
        }
    }
    const double n = static_cast<double>(split.train.size() + split.validation.size() +
                                         split.test.size());
    if (n > 0) {
        split.ratios.train = static_cast<double>(split.train.size()) / n;
        split.ratios.validation = static_cast<double>(split.validation.size()) / n;
        split.ratios.test = static_cast<double>(split.test.size()) / n;
    }
    return split;
}

CorpusSplit read_split_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    return read_split_manifest(in);
}

}  // namespace deidkit
