// deidkit: command line front end for the de-identification pipeline.
//
// One binary, subcommand style. Exit codes: 0 success, 2 usage errors
// (unknown subcommand, bad flags), 1 data errors (malformed corpus, shape
// mismatches, failed runs), always with a one-line diagnostic on stderr.
// Every stochastic stage derives from the --seed flag of its invocation, and
// that seed is recorded in the artifacts the stage writes.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "deidkit/align.hpp"
#include "deidkit/checkpoint.hpp"
#include "deidkit/corpus.hpp"
#include "deidkit/encoding.hpp"
#include "deidkit/errors.hpp"
#include "deidkit/eval.hpp"
#include "deidkit/model.hpp"
#include "deidkit/pipeline.hpp"
#include "deidkit/redact.hpp"
#include "deidkit/synthetic.hpp"
#include "deidkit/tags.hpp"
#include "deidkit/tokenize.hpp"
#include "deidkit/train.hpp"
#include "deidkit/vocab.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Shared plumbing

std::vector<deidkit::AnnotatedDocument> load_docs(const std::string& dir, bool keep_longest) {
    deidkit::ParseOptions options;
    options.keep_longest = keep_longest;
    return deidkit::load_corpus_dir(dir, options);
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw deidkit::InputError("cannot write " + path.string());
    out << content;
    if (!out) throw deidkit::InputError("short write to " + path.string());
}

// Documents belonging to one subset of a split; "all" keeps everything.
std::vector<deidkit::AnnotatedDocument> pick_subset(
    const std::vector<deidkit::AnnotatedDocument>& docs, const deidkit::CorpusSplit& split,
    const std::string& subset) {
    if (subset == "all") return docs;
    const std::vector<std::string>* ids = nullptr;
    if (subset == "train") ids = &split.train;
    else if (subset == "validation") ids = &split.validation;
    else if (subset == "test") ids = &split.test;
    else throw deidkit::ConfigError("unknown subset '" + subset + "'");
    return deidkit::filter_documents(docs, *ids);
}

json config_to_json(const deidkit::ModelConfig& c) {
    return json{{"vocab_size", c.vocab_size},
                {"max_positions", c.max_positions},
                {"type_vocab", c.type_vocab},
                {"embedding_dim", c.embedding_dim},
                {"hidden_dim", c.hidden_dim},
                {"num_layers", c.num_layers},
                {"num_heads", c.num_heads},
                {"ffn_dim", c.ffn_dim},
                {"dropout", c.dropout},
                {"share_layers", c.share_layers},
                {"factorized_embedding", c.factorized_embedding},
                {"num_labels", c.num_labels}};
}

// ---------------------------------------------------------------------------
// Model geometry flags shared by train and sweep. Checkpoint-consuming
// commands (eval, deid) read the geometry from the file instead.

struct ModelFlags {
    int hidden = 32;
    int layers = 2;
    int heads = 2;
    int ffn = 64;
    int embedding = 0;  // 0 means "same as hidden"
    double dropout = 0.0;
    bool share_layers = false;
    bool factorized = false;
};

void attach_model_flags(CLI::App* cmd, ModelFlags& mf) {
    cmd->add_option("--hidden", mf.hidden, "Hidden width");
    cmd->add_option("--layers", mf.layers, "Encoder layers");
    cmd->add_option("--heads", mf.heads, "Attention heads");
    cmd->add_option("--ffn", mf.ffn, "Feed-forward width");
    cmd->add_option("--embedding", mf.embedding,
                    "Embedding width (factorized models only; defaults to hidden width)");
    cmd->add_option("--dropout", mf.dropout, "Dropout probability");
    cmd->add_flag("--share-layers", mf.share_layers, "One parameter set for all layers");
    cmd->add_flag("--factorized", mf.factorized, "Factorized embedding with a trained mapping");
}

deidkit::ModelConfig make_config(const ModelFlags& mf, int vocab_size, int max_len) {
    deidkit::ModelConfig cfg;
    cfg.vocab_size = vocab_size;
    cfg.max_positions = max_len;
    cfg.type_vocab = 1;
    cfg.hidden_dim = mf.hidden;
    cfg.embedding_dim = mf.factorized && mf.embedding > 0 ? mf.embedding : mf.hidden;
    cfg.num_layers = mf.layers;
    cfg.num_heads = mf.heads;
    cfg.ffn_dim = mf.ffn;
    cfg.dropout = mf.dropout;
    cfg.share_layers = mf.share_layers;
    cfg.factorized_embedding = mf.factorized;
    cfg.validate();
    return cfg;
}

// ---------------------------------------------------------------------------
// Declarative config file: one "key = value" per line, '#' comments, lists
// comma-separated. Flags mirror the keys and win over the file.

std::map<std::string, std::string> read_config_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw deidkit::InputError("cannot read config " + path.string());
    std::map<std::string, std::string> kv;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        if (trim(line).empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw deidkit::ParseError("config line is not 'key = value'", line_no, 1);
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw deidkit::ParseError("empty config key", line_no, 1);
        kv[key] = value;
    }
    return kv;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        const auto a = item.find_first_not_of(" \t");
        const auto b = item.find_last_not_of(" \t");
        if (a == std::string::npos) continue;
        parts.push_back(item.substr(a, b - a + 1));
    }
    return parts;
}

int to_int(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw deidkit::ConfigError("bad integer for " + what + ": '" + s + "'");
    }
}

double to_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw deidkit::ConfigError("bad number for " + what + ": '" + s + "'");
    }
}

bool to_bool(const std::string& s, const std::string& what) {
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw deidkit::ConfigError("bad boolean for " + what + ": '" + s + "'");
}

// ---------------------------------------------------------------------------
// gen

struct GenArgs {
    std::size_t docs = 0;
    std::string out;
    std::uint64_t seed = 1;
    std::vector<std::string> classes;
    double phi_rate = 0.40;
};

int run_gen(const GenArgs& a) {
    deidkit::SyntheticOptions options;
    options.phi_sentence_rate = a.phi_rate;
    if (a.classes.empty()) {
        options.class_mix = deidkit::default_class_mix();
    } else {
        for (const std::string& name : a.classes) {
            options.class_mix.push_back(deidkit::class_from_name(name));
        }
    }
    const auto docs = deidkit::generate_synthetic_corpus(a.docs, a.seed, options);
    fs::create_directories(a.out);
    deidkit::save_corpus_dir(docs, a.out);

    json meta;
    meta["command"] = "gen";
    meta["documents"] = a.docs;
    meta["seed"] = a.seed;
    meta["phi_sentence_rate"] = options.phi_sentence_rate;
    json mix = json::array();
    for (deidkit::ClassId cls : options.class_mix) mix.push_back(deidkit::class_name(cls));
    meta["class_mix"] = mix;
    write_text_file(fs::path(a.out) / "corpus_meta.json", meta.dump(2) + "\n");

    std::cout << "generated " << docs.size() << " documents in " << a.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// parse

int run_parse(const std::string& corpus, bool keep_longest) {
    const auto docs = load_docs(corpus, keep_longest);
    std::size_t spans = 0;
    for (const auto& d : docs) spans += d.spans.size();
    std::cout << "parsed " << docs.size() << " documents, " << spans << " entity spans\n";
    return 0;
}

// ---------------------------------------------------------------------------
// align

struct AlignArgs {
    std::string corpus;
    bool keep_longest = false;
    std::string out;  // optional directory for token/label files + report
};

int run_align(const AlignArgs& a) {
    const auto docs = load_docs(a.corpus, a.keep_longest);
    const bool emit = !a.out.empty();
    if (emit) fs::create_directories(a.out);

    std::ostringstream report;
    std::size_t aligned = 0;
    std::size_t dropped = 0;
    for (const auto& doc : docs) {
        const deidkit::AlignResult result = deidkit::align(doc);
        if (result.report.status == deidkit::AlignmentStatus::aligned) {
            ++aligned;
            report << doc.doc_id << "\taligned\n";
            if (emit) {
                std::ostringstream rows;
                for (std::size_t i = 0; i < result.sequence.tokens.size(); ++i) {
                    const deidkit::Token& t = result.sequence.tokens[i];
                    rows << t.surface << '\t' << t.start << '\t' << t.end << '\t'
                         << deidkit::tag_name(result.sequence.labels[i]) << '\n';
                }
                write_text_file(fs::path(a.out) / (doc.doc_id + ".tokens.tsv"), rows.str());
            }
        } else {
            ++dropped;
            report << doc.doc_id << "\tdropped";
            for (const std::string& reason : result.report.reasons) report << '\t' << reason;
            report << '\n';
        }
    }
    if (emit) write_text_file(fs::path(a.out) / "alignment_report.tsv", report.str());
    else std::cout << report.str();
    std::cout << "aligned " << aligned << " of " << docs.size() << " documents (" << dropped
              << " dropped)\n";
    return 0;
}

// ---------------------------------------------------------------------------
// stats

int run_stats(const std::string& corpus, bool keep_longest, const std::string& out) {
    const auto docs = load_docs(corpus, keep_longest);
    const std::string table = deidkit::render_statistics(deidkit::corpus_statistics(docs));
    if (out.empty()) std::cout << table;
    else write_text_file(out, table);
    return 0;
}

// ---------------------------------------------------------------------------
// split

struct SplitArgs {
    std::string corpus;
    std::string out;
    double train = 0.50, validation = 0.10, test = 0.40;
    std::uint64_t seed = 1;
    bool keep_longest = false;
};

int run_split(const SplitArgs& a) {
    const auto docs = load_docs(a.corpus, a.keep_longest);
    deidkit::SplitRatios ratios{a.train, a.validation, a.test};
    const deidkit::CorpusSplit split = deidkit::split_corpus(docs, ratios, a.seed);
    std::ofstream out(a.out, std::ios::binary);
    if (!out) throw deidkit::InputError("cannot write " + a.out);
    out << "# seed=" << a.seed << " ratios=" << ratios.train << ',' << ratios.validation << ','
        << ratios.test << "\n";
    deidkit::write_split_manifest(split, out);
    std::cout << "split " << docs.size() << " documents: " << split.train.size() << " train, "
              << split.validation.size() << " validation, " << split.test.size() << " test\n";
    return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
    std::string corpus;
    std::string split;  // optional manifest; trains on its train subset
    std::string out;
    std::string dump_encoded;  // optional JSONL of the training windows
    bool keep_longest = false;
    ModelFlags model;
    int vocab_size = 512;
    int max_len = 64;
    int batch_size = 16;
    int epochs = 8;
    double lr = 0.3;
    double decay = 0.0;
    bool adaptive = false;
    std::uint64_t seed = 1;
};

int run_train(const TrainArgs& a) {
    const auto all_docs = load_docs(a.corpus, a.keep_longest);
    std::vector<deidkit::AnnotatedDocument> train_docs = all_docs;
    std::vector<deidkit::AnnotatedDocument> val_docs;
    if (!a.split.empty()) {
        const deidkit::CorpusSplit split = deidkit::read_split_manifest(fs::path(a.split));
        train_docs = pick_subset(all_docs, split, "train");
        val_docs = pick_subset(all_docs, split, "validation");
    }
    if (train_docs.empty()) throw deidkit::InputError("no training documents");

    fs::create_directories(a.out);
    const deidkit::SubwordVocab vocab = deidkit::build_corpus_vocab(
        train_docs, static_cast<std::size_t>(a.vocab_size));
    vocab.save(fs::path(a.out) / "vocab.txt");

    const auto train_data = deidkit::encode_corpus(train_docs, vocab,
                                                   static_cast<std::size_t>(a.max_len));
    const auto windows = train_data.all_windows();
    if (windows.empty()) throw deidkit::InputError("no trainable windows after alignment");
    if (!a.dump_encoded.empty()) {
        std::ofstream dump(a.dump_encoded, std::ios::binary);
        if (!dump) throw deidkit::InputError("cannot write " + a.dump_encoded);
        deidkit::write_encoded_jsonl(windows, dump);
    }

    const deidkit::ModelConfig cfg =
        make_config(a.model, static_cast<int>(vocab.size()), a.max_len);
    deidkit::TaggerModel<float> model = deidkit::init_model(cfg, a.seed);

    deidkit::HyperParams hp;
    hp.batch_size = a.batch_size;
    hp.num_epochs = a.epochs;
    hp.learning_rate = a.lr;
    hp.weight_decay = a.decay;
    hp.seed = a.seed;
    hp.adaptive_optimizer = a.adaptive;
    hp.validate();

    deidkit::RunRecord record = deidkit::train(model, windows, hp);
    if (record.failed) throw deidkit::RunError("training diverged (non-finite loss)");

    if (!val_docs.empty()) {
        const auto val_data = deidkit::encode_corpus(val_docs, vocab,
                                                     static_cast<std::size_t>(a.max_len));
        const deidkit::EvalReport report =
            deidkit::evaluate_model(model, val_data, "validation", "deidkit");
        record.validation = deidkit::metrics_from_report(report);
    }

    const fs::path ckpt = fs::path(a.out) / "model.ckpt";
    deidkit::save_checkpoint(ckpt, model, a.seed);
    record.checkpoint_path = ckpt.string();

    json run;
    run["seed"] = a.seed;
    run["model"] = config_to_json(cfg);
    run["record"] = json::parse(deidkit::run_record_to_json(record));
    write_text_file(fs::path(a.out) / "run.json", run.dump(2) + "\n");

    std::cout << "trained " << a.epochs << " epochs over " << windows.size() << " windows; final loss "
              << (record.epoch_losses.empty() ? 0.0 : record.epoch_losses.back());
    if (!val_docs.empty()) std::cout << "; validation F1 " << record.validation.f1;
    std::cout << "; checkpoint " << ckpt.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
    std::string config;  // optional declarative file; flags win
    std::string corpus;
    std::string split;
    std::string out;
    std::vector<int> epochs;
    std::vector<double> lrs;
    std::vector<double> decays;
    int batch_size = -1;
    int vocab_size = -1;
    int max_len = -1;
    std::uint64_t seed = 1;
    bool seed_given = false;
    int jobs = 1;
    bool keep_longest = false;
    ModelFlags model;
    // which model flags were given explicitly, so config values can fill the rest
    bool hidden_given = false, layers_given = false, heads_given = false, ffn_given = false,
         embedding_given = false, dropout_given = false, share_given = false,
         factorized_given = false;
};

int run_sweep(SweepArgs a) {
    // Layer the config file under the flags.
    if (!a.config.empty()) {
        const auto kv = read_config_file(a.config);
        const auto str = [&](const char* key) -> std::optional<std::string> {
            const auto it = kv.find(key);
            if (it == kv.end()) return std::nullopt;
            return it->second;
        };
        if (a.corpus.empty()) {
            if (const auto v = str("corpus_dir")) a.corpus = *v;
        }
        if (a.split.empty()) {
            if (const auto v = str("split_manifest")) a.split = *v;
        }
        if (a.out.empty()) {
            if (const auto v = str("out_dir")) a.out = *v;
        }
        if (a.epochs.empty()) {
            if (const auto v = str("epochs")) {
                for (const auto& s : split_list(*v)) a.epochs.push_back(to_int(s, "epochs"));
            }
        }
        if (a.lrs.empty()) {
            if (const auto v = str("learning_rates")) {
                for (const auto& s : split_list(*v)) a.lrs.push_back(to_double(s, "learning_rates"));
            }
        }
        if (a.decays.empty()) {
            if (const auto v = str("weight_decays")) {
                for (const auto& s : split_list(*v)) a.decays.push_back(to_double(s, "weight_decays"));
            }
        }
        if (a.batch_size < 0) {
            if (const auto v = str("batch_size")) a.batch_size = to_int(*v, "batch_size");
        }
        if (a.vocab_size < 0) {
            if (const auto v = str("vocab_size")) a.vocab_size = to_int(*v, "vocab_size");
        }
        if (a.max_len < 0) {
            if (const auto v = str("max_len")) a.max_len = to_int(*v, "max_len");
        }
        if (!a.seed_given) {
            if (const auto v = str("seed")) a.seed = static_cast<std::uint64_t>(
                std::stoull(*v));
        }
        if (const auto v = str("jobs"); v && a.jobs == 1) a.jobs = to_int(*v, "jobs");
        if (!a.hidden_given) {
            if (const auto v = str("hidden_dim")) a.model.hidden = to_int(*v, "hidden_dim");
        }
        if (!a.layers_given) {
            if (const auto v = str("num_layers")) a.model.layers = to_int(*v, "num_layers");
        }
        if (!a.heads_given) {
            if (const auto v = str("num_heads")) a.model.heads = to_int(*v, "num_heads");
        }
        if (!a.ffn_given) {
            if (const auto v = str("ffn_dim")) a.model.ffn = to_int(*v, "ffn_dim");
        }
        if (!a.embedding_given) {
            if (const auto v = str("embedding_dim")) a.model.embedding = to_int(*v, "embedding_dim");
        }
        if (!a.dropout_given) {
            if (const auto v = str("dropout")) a.model.dropout = to_double(*v, "dropout");
        }
        if (!a.share_given) {
            if (const auto v = str("share_layers")) a.model.share_layers = to_bool(*v, "share_layers");
        }
        if (!a.factorized_given) {
            if (const auto v = str("factorized_embedding")) {
                a.model.factorized = to_bool(*v, "factorized_embedding");
            }
        }
    }
    if (a.corpus.empty()) throw deidkit::ConfigError("sweep needs a corpus (--corpus or corpus_dir)");
    if (a.out.empty()) throw deidkit::ConfigError("sweep needs an output directory (--out or out_dir)");
    if (a.batch_size < 0) a.batch_size = deidkit::SweepGrid::defaults().batch_size;
    if (a.vocab_size < 0) a.vocab_size = 512;
    if (a.max_len < 0) a.max_len = 64;

    deidkit::SweepGrid grid = deidkit::SweepGrid::defaults();
    if (!a.epochs.empty()) grid.epochs = a.epochs;
    if (!a.lrs.empty()) grid.learning_rates = a.lrs;
    if (!a.decays.empty()) grid.weight_decays = a.decays;
    grid.batch_size = a.batch_size;
    grid.validate();

    fs::create_directories(a.out);
    const auto all_docs = load_docs(a.corpus, a.keep_longest);

    deidkit::CorpusSplit split;
    if (a.split.empty()) {
        // No manifest given: derive one from the root seed and record it.
        split = deidkit::split_corpus(all_docs, deidkit::SplitRatios{}, a.seed);
        const fs::path path = fs::path(a.out) / "split.tsv";
        std::ofstream out(path, std::ios::binary);
        if (!out) throw deidkit::InputError("cannot write " + path.string());
        out << "# seed=" << a.seed << " ratios=0.5,0.1,0.4\n";
        deidkit::write_split_manifest(split, out);
    } else {
        split = deidkit::read_split_manifest(fs::path(a.split));
    }
    const auto train_docs = pick_subset(all_docs, split, "train");
    const auto val_docs = pick_subset(all_docs, split, "validation");
    if (train_docs.empty()) throw deidkit::InputError("no training documents in split");
    if (val_docs.empty()) throw deidkit::InputError("no validation documents in split");

    const deidkit::SubwordVocab vocab = deidkit::build_corpus_vocab(
        train_docs, static_cast<std::size_t>(a.vocab_size));
    vocab.save(fs::path(a.out) / "vocab.txt");

    const auto train_data = deidkit::encode_corpus(train_docs, vocab,
                                                   static_cast<std::size_t>(a.max_len));
    const auto train_windows = train_data.all_windows();
    if (train_windows.empty()) throw deidkit::InputError("no trainable windows after alignment");
    const auto val_data = deidkit::encode_corpus(val_docs, vocab,
                                                 static_cast<std::size_t>(a.max_len));

    const deidkit::ModelConfig cfg =
        make_config(a.model, static_cast<int>(vocab.size()), a.max_len);

    json meta;
    meta["command"] = "sweep";
    meta["seed"] = a.seed;
    meta["corpus_dir"] = a.corpus;
    meta["model"] = config_to_json(cfg);
    meta["grid"] = json{{"epochs", grid.epochs},
                        {"learning_rates", grid.learning_rates},
                        {"weight_decays", grid.weight_decays},
                        {"batch_size", grid.batch_size}};
    write_text_file(fs::path(a.out) / "sweep_meta.json", meta.dump(2) + "\n");

    const auto points = deidkit::grid_points(grid, a.seed);
    const fs::path out_dir = a.out;
    const auto runner = [&](const deidkit::GridPoint& point) -> deidkit::RunRecord {
        deidkit::TaggerModel<float> model = deidkit::init_model(cfg, point.hp.seed);
        deidkit::RunRecord record = deidkit::train(model, train_windows, point.hp);
        record.grid_index = point.index;
        if (!record.failed) {
            const deidkit::EvalReport report =
                deidkit::evaluate_model(model, val_data, "validation", "deidkit");
            record.validation = deidkit::metrics_from_report(report);
            char name[32];
            std::snprintf(name, sizeof name, "ckpt_%03zu.bin", point.index);
            const fs::path ckpt = out_dir / name;
            deidkit::save_checkpoint(ckpt, model, point.hp.seed);
            record.checkpoint_path = ckpt.string();
        }
        return record;
    };

    const deidkit::SweepResult result =
        deidkit::sweep(points, runner, out_dir / "ledger.jsonl", a.jobs);

    const deidkit::RunRecord& best = result.records[result.best_index];
    json best_json;
    best_json["grid_index"] = best.grid_index;
    best_json["checkpoint"] = best.checkpoint_path;
    best_json["record"] = json::parse(deidkit::run_record_to_json(best));
    write_text_file(out_dir / "best.json", best_json.dump(2) + "\n");

    std::cout << "sweep finished: " << result.records.size() << " grid points; best index "
              << best.grid_index << " (epochs " << best.hp.num_epochs << ", lr "
              << best.hp.learning_rate << ", decay " << best.hp.weight_decay
              << ") validation F1 " << best.validation.f1 << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
    std::string corpus;
    std::string split;   // optional manifest
    std::string subset = "all";
    std::string checkpoint;
    std::string vocab;
    std::string out;       // optional delimited report
    std::string bars;      // optional bar-chart data
    std::string name = "deidkit";
    bool keep_longest = false;
};

deidkit::SubwordVocab load_vocab_for(const std::string& path, const deidkit::ModelConfig& cfg) {
    deidkit::SubwordVocab vocab = deidkit::SubwordVocab::load(path);
    if (static_cast<int>(vocab.size()) != cfg.vocab_size) {
        throw deidkit::ConfigError("vocabulary has " + std::to_string(vocab.size()) +
                                   " entries but the checkpoint expects " +
                                   std::to_string(cfg.vocab_size));
    }
    return vocab;
}

int run_eval(const EvalArgs& a) {
    const deidkit::CheckpointData ckpt = deidkit::load_checkpoint(a.checkpoint);
    const deidkit::SubwordVocab vocab = load_vocab_for(a.vocab, ckpt.model.config);

    auto docs = load_docs(a.corpus, a.keep_longest);
    std::string split_name = a.subset;
    if (!a.split.empty()) {
        const deidkit::CorpusSplit split = deidkit::read_split_manifest(fs::path(a.split));
        docs = pick_subset(docs, split, a.subset);
    } else if (a.subset != "all") {
        throw deidkit::ConfigError("--subset needs --split");
    }
    if (docs.empty()) throw deidkit::InputError("no documents to evaluate");

    const auto data = deidkit::encode_corpus(
        docs, vocab, static_cast<std::size_t>(ckpt.model.config.max_positions));
    if (data.docs.empty()) throw deidkit::InputError("no aligned documents to evaluate");

    const deidkit::EvalReport report =
        deidkit::evaluate_model(ckpt.model, data, split_name, a.name);
    std::cout << deidkit::render_report(report, deidkit::ReportFormat::table_text);
    if (data.dropped_documents > 0) {
        std::cout << "(" << data.dropped_documents << " documents dropped by alignment)\n";
    }
    if (!a.out.empty()) {
        write_text_file(a.out, deidkit::render_report(report, deidkit::ReportFormat::delimited));
    }
    if (!a.bars.empty()) {
        write_text_file(a.bars, deidkit::render_report(report, deidkit::ReportFormat::bar_data));
    }
    return 0;
}

// ---------------------------------------------------------------------------
// deid

struct DeidArgs {
    std::string corpus;
    std::string checkpoint;
    std::string vocab;
    std::string out;
    std::string mode = "tag";
    std::string glyph = "*";
    std::string tag_template = "[{class}]";
    bool keep_longest = false;
};

int run_deid(const DeidArgs& a) {
    const deidkit::CheckpointData ckpt = deidkit::load_checkpoint(a.checkpoint);
    const deidkit::SubwordVocab vocab = load_vocab_for(a.vocab, ckpt.model.config);

    deidkit::DeidPolicy policy;
    if (a.mode == "tag") policy.mode = deidkit::DeidMode::tag_insert;
    else if (a.mode == "redact") policy.mode = deidkit::DeidMode::redact;
    else throw deidkit::ConfigError("unknown mode '" + a.mode + "' (tag or redact)");
    policy.glyph = a.glyph;
    policy.tag_template = a.tag_template;
    policy.validate();

    const auto docs = load_docs(a.corpus, a.keep_longest);
    fs::create_directories(a.out);

    const std::size_t max_len = static_cast<std::size_t>(ckpt.model.config.max_positions);
    std::size_t replaced = 0;
    for (const auto& doc : docs) {
        // Gold spans are not consulted here; the model decides what to hide.
        deidkit::EncodedDocument enc;
        enc.sequence.doc_id = doc.doc_id;
        enc.sequence.tokens = deidkit::tokenize(doc.text);
        enc.sequence.labels.assign(enc.sequence.tokens.size(), deidkit::kOutsideTag);
        enc.windows = deidkit::encode(enc.sequence, vocab, max_len);
        const std::vector<deidkit::ClassId> classes =
            deidkit::predict_word_classes(ckpt.model, enc);
        const deidkit::DeidResult result =
            deidkit::apply_policy(doc.text, enc.sequence.tokens, classes, policy);
        replaced += result.manifest.size();
        write_text_file(fs::path(a.out) / (doc.doc_id + ".txt"), result.text);
        write_text_file(fs::path(a.out) / (doc.doc_id + ".manifest.tsv"),
                        deidkit::render_manifest(result.manifest));
    }
    std::cout << "de-identified " << docs.size() << " documents (" << replaced
              << " replacements) into " << a.out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"clinical text de-identification toolkit"};
    app.require_subcommand(1);

    GenArgs gen;
    CLI::App* cmd_gen = app.add_subcommand("gen", "Generate a synthetic annotated corpus");
    cmd_gen->add_option("--docs", gen.docs, "Number of documents")->required();
    cmd_gen->add_option("--out", gen.out, "Output directory")->required();
    cmd_gen->add_option("--seed", gen.seed, "Root seed");
    cmd_gen->add_option("--classes", gen.classes,
                        "Entity classes to draw from (default: every generatable class)")
        ->delimiter(',');
    cmd_gen->add_option("--phi-rate", gen.phi_rate, "Share of entity-bearing sentences");

    std::string parse_corpus;
    bool parse_keep_longest = false;
    CLI::App* cmd_parse = app.add_subcommand("parse", "Validate an annotated corpus");
    cmd_parse->add_option("--corpus", parse_corpus, "Corpus directory")->required();
    cmd_parse->add_flag("--keep-longest", parse_keep_longest,
                        "Resolve overlapping annotations by keeping the longer span");

    AlignArgs al;
    CLI::App* cmd_align = app.add_subcommand("align", "Project entity spans onto token labels");
    cmd_align->add_option("--corpus", al.corpus, "Corpus directory")->required();
    cmd_align->add_option("--out", al.out, "Directory for token/label files and the report");
    cmd_align->add_flag("--keep-longest", al.keep_longest,
                        "Resolve overlapping annotations by keeping the longer span");

    std::string stats_corpus, stats_out;
    bool stats_keep_longest = false;
    CLI::App* cmd_stats = app.add_subcommand("stats", "Token-level class counts");
    cmd_stats->add_option("--corpus", stats_corpus, "Corpus directory")->required();
    cmd_stats->add_option("--out", stats_out, "Write the table here instead of stdout");
    cmd_stats->add_flag("--keep-longest", stats_keep_longest,
                        "Resolve overlapping annotations by keeping the longer span");

    SplitArgs sp;
    CLI::App* cmd_split = app.add_subcommand("split", "Partition a corpus into train/validation/test");
    cmd_split->add_option("--corpus", sp.corpus, "Corpus directory")->required();
    cmd_split->add_option("--out", sp.out, "Manifest path")->required();
    cmd_split->add_option("--train", sp.train, "Train ratio");
    cmd_split->add_option("--val", sp.validation, "Validation ratio");
    cmd_split->add_option("--test", sp.test, "Test ratio");
    cmd_split->add_option("--seed", sp.seed, "Root seed");
    cmd_split->add_flag("--keep-longest", sp.keep_longest,
                        "Resolve overlapping annotations by keeping the longer span");

    TrainArgs tr;
    CLI::App* cmd_train = app.add_subcommand("train", "Train a tagger on an annotated corpus");
    cmd_train->add_option("--corpus", tr.corpus, "Corpus directory")->required();
    cmd_train->add_option("--split", tr.split, "Split manifest (train subset is used)");
    cmd_train->add_option("--out", tr.out, "Output directory")->required();
    cmd_train->add_option("--dump-encoded", tr.dump_encoded,
                          "Also write the encoded training windows as JSONL");
    cmd_train->add_flag("--keep-longest", tr.keep_longest,
                        "Resolve overlapping annotations by keeping the longer span");
    attach_model_flags(cmd_train, tr.model);
    cmd_train->add_option("--vocab-size", tr.vocab_size, "Subword vocabulary budget");
    cmd_train->add_option("--max-len", tr.max_len, "Window length in subwords");
    cmd_train->add_option("--batch-size", tr.batch_size, "Windows per optimizer step");
    cmd_train->add_option("--epochs", tr.epochs, "Training epochs");
    cmd_train->add_option("--lr", tr.lr, "Learning rate");
    cmd_train->add_option("--decay", tr.decay, "Decoupled weight decay");
    cmd_train->add_flag("--adam", tr.adaptive, "Use the adaptive optimizer");
    cmd_train->add_option("--seed", tr.seed, "Root seed");

    SweepArgs sw;
    CLI::App* cmd_sweep = app.add_subcommand("sweep", "Grid search over training hyperparameters");
    cmd_sweep->add_option("--config", sw.config, "Declarative config file (flags win)");
    cmd_sweep->add_option("--corpus", sw.corpus, "Corpus directory");
    cmd_sweep->add_option("--split", sw.split, "Split manifest");
    cmd_sweep->add_option("--out", sw.out, "Output directory");
    cmd_sweep->add_option("--epochs", sw.epochs, "Epoch grid")->delimiter(',');
    cmd_sweep->add_option("--lrs", sw.lrs, "Learning-rate grid")->delimiter(',');
    cmd_sweep->add_option("--decays", sw.decays, "Weight-decay grid")->delimiter(',');
    cmd_sweep->add_option("--batch-size", sw.batch_size, "Windows per optimizer step");
    cmd_sweep->add_option("--vocab-size", sw.vocab_size, "Subword vocabulary budget");
    cmd_sweep->add_option("--max-len", sw.max_len, "Window length in subwords");
    CLI::Option* sw_seed = cmd_sweep->add_option("--seed", sw.seed, "Root seed");
    cmd_sweep->add_option("--jobs", sw.jobs, "Worker threads");
    cmd_sweep->add_flag("--keep-longest", sw.keep_longest,
                        "Resolve overlapping annotations by keeping the longer span");
    attach_model_flags(cmd_sweep, sw.model);

    EvalArgs ev;
    CLI::App* cmd_eval = app.add_subcommand("eval", "Score a checkpoint against gold annotations");
    cmd_eval->add_option("--corpus", ev.corpus, "Corpus directory")->required();
    cmd_eval->add_option("--split", ev.split, "Split manifest");
    cmd_eval->add_option("--subset", ev.subset, "train, validation, test, or all");
    cmd_eval->add_option("--checkpoint", ev.checkpoint, "Model checkpoint")->required();
    cmd_eval->add_option("--vocab", ev.vocab, "Vocabulary file")->required();
    cmd_eval->add_option("--out", ev.out, "Write the delimited report here");
    cmd_eval->add_option("--bars", ev.bars, "Write per-class F1 bar data here");
    cmd_eval->add_option("--name", ev.name, "Model name used in the report");
    cmd_eval->add_flag("--keep-longest", ev.keep_longest,
                       "Resolve overlapping annotations by keeping the longer span");

    DeidArgs de;
    CLI::App* cmd_deid = app.add_subcommand("deid", "Rewrite documents with entities hidden");
    cmd_deid->add_option("--corpus", de.corpus, "Corpus directory")->required();
    cmd_deid->add_option("--checkpoint", de.checkpoint, "Model checkpoint")->required();
    cmd_deid->add_option("--vocab", de.vocab, "Vocabulary file")->required();
    cmd_deid->add_option("--out", de.out, "Output directory")->required();
    cmd_deid->add_option("--mode", de.mode, "tag (insert class markers) or redact (mask glyphs)");
    cmd_deid->add_option("--glyph", de.glyph, "Mask glyph for redact mode");
    cmd_deid->add_option("--template", de.tag_template, "Marker template for tag mode");
    cmd_deid->add_flag("--keep-longest", de.keep_longest,
                       "Resolve overlapping annotations by keeping the longer span");

    try {
        app.parse(argc, argv);
        sw.seed_given = sw_seed->count() > 0;
        sw.hidden_given = cmd_sweep->count("--hidden") > 0;
        sw.layers_given = cmd_sweep->count("--layers") > 0;
        sw.heads_given = cmd_sweep->count("--heads") > 0;
        sw.ffn_given = cmd_sweep->count("--ffn") > 0;
        sw.embedding_given = cmd_sweep->count("--embedding") > 0;
        sw.dropout_given = cmd_sweep->count("--dropout") > 0;
        sw.share_given = cmd_sweep->count("--share-layers") > 0;
        sw.factorized_given = cmd_sweep->count("--factorized") > 0;

        if (cmd_gen->parsed()) return run_gen(gen);
        if (cmd_parse->parsed()) return run_parse(parse_corpus, parse_keep_longest);
        if (cmd_align->parsed()) return run_align(al);
        if (cmd_stats->parsed()) return run_stats(stats_corpus, stats_keep_longest, stats_out);
        if (cmd_split->parsed()) return run_split(sp);
        if (cmd_train->parsed()) return run_train(tr);
        if (cmd_sweep->parsed()) return run_sweep(sw);
        if (cmd_eval->parsed()) return run_eval(ev);
        if (cmd_deid->parsed()) return run_deid(de);
        std::cerr << "usage error: no subcommand\n";
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const deidkit::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
