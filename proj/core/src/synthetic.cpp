#include "deidkit/synthetic.hpp"

#include <array>
#include <cstdio>
#include <map>
#include <string>

#include "deidkit/errors.hpp"
#include "deidkit/rng.hpp"

namespace deidkit {

namespace {

// Everything emitted here is ASCII, so code point offsets equal byte offsets
// and the builder can track positions with plain string lengths.

const std::vector<std::string>& filler_words() {
    static const std::vector<std::string> kWords = {
        "patient",  "presents",  "with",    "stable",   "chronic",  "symptoms",
        "and",      "denies",    "acute",   "distress", "on",       "exam",
        "today",    "the",       "review",  "of",       "systems",  "was",
        "negative", "for",       "fever",   "chills",   "nausea",   "vomiting",
        "continue", "current",   "therapy", "as",       "directed", "follow",
        "up",       "in",        "clinic",  "weeks",    "labs",     "ordered",
        "pending",  "results",   "blood",   "pressure", "well",     "controlled",
        "no",       "new",       "medication", "changes", "tolerating", "diet",
        "ambulating", "without", "assistance", "plan",  "discussed", "at",
        "length",   "medications", "reconciled", "discharge", "home", "condition",
    };
    return kWords;
}

// Doctor and patient names come from disjoint pools. If the two classes
// shared surnames, a note saying "dr Voss" and another saying "patient Voss"
// would hand the tagger an unwinnable token, and a smoke corpus should be
// learnable by construction.
const std::vector<std::string>& doctor_first_names() {
    static const std::vector<std::string> kNames = {
        "Imogen", "Ravi",  "Beatriz", "Stellan", "Chiara", "Declan",
        "Yuki",   "Amara", "Tobias",  "Ingrid",  "Mateo",  "Freya",
    };
    return kNames;
}

const std::vector<std::string>& doctor_last_names() {
    static const std::vector<std::string> kNames = {
        "Voss",    "Calloway", "Okonkwo", "Lindqvist", "Marchetti", "Abernathy",
        "Takeda",  "Oyelaran", "Brandt",  "Castellanos", "Whitfield", "Norgaard",
    };
    return kNames;
}

const std::vector<std::string>& patient_first_names() {
    static const std::vector<std::string> kNames = {
        "John", "Mary", "Ahmed", "Elena", "Marcus", "Priya",
        "Wei",  "Sofia", "Liam", "Nora",  "Victor", "Grace",
    };
    return kNames;
}

const std::vector<std::string>& patient_last_names() {
    static const std::vector<std::string> kNames = {
        "Smith", "Clark", "Nguyen", "Garcia", "Okafor", "Petrov",
        "Hansen", "Ito",  "Weaver", "Donnelly", "Reyes", "Kaplan",
    };
    return kNames;
}

// Identifier-like fills are drawn from small fixed pools rather than fresh
// random digits. A held-out document then reuses surface forms the training
// split has seen, which keeps a desk-scale corpus learnable; classes with
// colliding shapes (phone vs fax) sit in disjoint number ranges.
std::vector<std::string> numbered_pool(const std::string& prefix, int lo, int count,
                                       const std::string& suffix = "") {
    std::vector<std::string> pool;
    pool.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        pool.push_back(prefix + std::to_string(lo + i) + suffix);
    }
    return pool;
}

std::string lowercase(std::string s) {
    for (char& c : s) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return s;
}

std::string pick(Rng& rng, const std::vector<std::string>& pool) {
    return pool[static_cast<std::size_t>(rng.uniform_below(pool.size()))];
}

// Entity surface generator. Multi-word fills are only produced for classes
// whose inside tag exists; the five single-token-only classes always come
// back as one token.
std::string make_fill(Rng& rng, ClassId cls) {
    const std::string& name = class_name(cls);
    if (name == "AGE") {
        // Disjoint from the day-of-month set so a bare two-digit token is
        // never ambiguous between AGE and the middle of a date.
        static const std::vector<std::string> kAges = {"31", "44", "52", "67", "73", "88"};
        return pick(rng, kAges);
    }
    if (name == "BIOID") {
        static const auto kPool = numbered_pool("BX70", 100, 6);
        return pick(rng, kPool);
    }
    if (name == "CITY") {
        static const std::vector<std::string> kCities = {
            "Springfield", "Riverton", "New Harbor", "Lakewood", "Port Ellis", "Brookfield"};
        return pick(rng, kCities);
    }
    if (name == "COUNTRY") {
        static const std::vector<std::string> kCountries = {
            "Australia", "Canada", "New Zealand", "Ireland", "Costa Rica", "Japan"};
        return pick(rng, kCountries);
    }
    if (name == "DATE") {
        if (rng.uniform() < 0.5) {
            // Pooled ISO dates; a fresh random date would be a new token type
            // every time.
            static const auto kIso = [] {
                std::vector<std::string> pool;
                for (int i = 0; i < 6; ++i) {
                    char buf[16];
                    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", 2021 + i % 4,
                                  1 + (i * 5) % 12, 1 + (i * 7) % 28);
                    pool.emplace_back(buf);
                }
                return pool;
            }();
            return pick(rng, kIso);
        }
        static const std::vector<std::string> kMonths = {
            "January", "March", "May", "July", "September", "November"};
        static const std::vector<std::string> kDays = {"2", "5", "9", "13", "17", "24"};
        static const std::vector<std::string> kYears = {"2021", "2022", "2023", "2024"};
        return pick(rng, kMonths) + " " + pick(rng, kDays) + " " + pick(rng, kYears);
    }
    if (name == "DEVICE") {
        static const auto kPool = numbered_pool("PM", 5200, 6, "X");
        return pick(rng, kPool);
    }
    if (name == "DOCTOR") {
        return pick(rng, doctor_first_names()) + " " + pick(rng, doctor_last_names());
    }
    if (name == "PATIENT") {
        return pick(rng, patient_first_names()) + " " + pick(rng, patient_last_names());
    }
    if (name == "EMAIL") {
        static const auto kPool = [] {
            std::vector<std::string> pool;
            const auto& lasts = patient_last_names();
            for (std::size_t i = 0; i < 6; ++i) {
                pool.push_back(lowercase(lasts[i]) + "74@example.org");
            }
            return pool;
        }();
        return pick(rng, kPool);
    }
    if (name == "FAX") {
        static const auto kPool = numbered_pool("555-98", 10, 6);
        return pick(rng, kPool);
    }
    if (name == "HEALTHPLAN") {
        static const auto kNumbers = numbered_pool("", 201000, 6);
        if (rng.uniform() < 0.5) return "HP-" + pick(rng, kNumbers);
        return "Plan " + pick(rng, kNumbers);
    }
    if (name == "HOSPITAL") {
        static const std::vector<std::string> kHospitals = {
            "Mercy General Hospital", "Saint Anne Medical Center", "Northside Clinic",
            "Valley Memorial", "Harbor View Hospital"};
        return pick(rng, kHospitals);
    }
    if (name == "IDNUM") {
        static const auto kPool = numbered_pool("83-4", 10, 6, "-21");
        return pick(rng, kPool);
    }
    if (name == "LOCATION-OTHER") {
        static const std::vector<std::string> kPlaces = {
            "East Annex", "West Wing", "Ward C", "Unit B", "North Pavilion"};
        return pick(rng, kPlaces);
    }
    if (name == "MEDICALRECORD") {
        static const auto kPool = numbered_pool("47110", 10, 6);
        return pick(rng, kPool);
    }
    if (name == "ORGANIZATION") {
        static const std::vector<std::string> kOrgs = {
            "Acme Logistics", "Braxton Foods", "Citywide Transit", "Delta Mills",
            "Evergreen Labs"};
        return pick(rng, kOrgs);
    }
    if (name == "PHONE") {
        static const auto kPool = numbered_pool("555-01", 30, 6);
        return pick(rng, kPool);
    }
    if (name == "PROFESSION") {
        static const std::vector<std::string> kJobs = {
            "truck driver", "school teacher", "electrician", "nurse", "carpenter",
            "software engineer"};
        return pick(rng, kJobs);
    }
    if (name == "STATE") {
        static const std::vector<std::string> kStates = {
            "Ohio", "Vermont", "New Mexico", "Oregon", "Maine", "North Dakota"};
        return pick(rng, kStates);
    }
    if (name == "URL") {
        static const auto kPool = [] {
            std::vector<std::string> pool;
            const auto& lasts = doctor_last_names();
            for (std::size_t i = 0; i < 6; ++i) {
                pool.push_back("www." + lowercase(lasts[i]) + "clinic.example.org");
            }
            return pool;
        }();
        return pick(rng, kPool);
    }
    if (name == "USERNAME") {
        static const auto kPool = [] {
            const auto& firsts = patient_first_names();
            const auto& lasts = patient_last_names();
            std::vector<std::string> pool;
            for (std::size_t i = 0; i < 6; ++i) {
                pool.push_back(lowercase(firsts[i].substr(0, 1) + lasts[i]) + "50");
            }
            return pool;
        }();
        return pick(rng, kPool);
    }
    if (name == "ZIP") {
        static const auto kPool = numbered_pool("021", 40, 6);
        return pick(rng, kPool);
    }
    throw ConfigError("no generator for class " + name);
}

class DocBuilder {
  public:
    void add_word(const std::string& word) {
        if (!text_.empty() && !at_line_start_) text_ += ' ';
        text_ += word;
        at_line_start_ = false;
    }

    // Appends the fill as spaced words and records its exact span.
    void add_entity(const std::string& fill, ClassId cls) {
        if (!text_.empty() && !at_line_start_) text_ += ' ';
        const std::size_t start = text_.size();
        text_ += fill;
        spans_.push_back(PhiSpan{start, text_.size(), cls, fill});
        at_line_start_ = false;
    }

    void end_sentence(bool newline) {
        text_ += '.';
        if (newline) {
            text_ += '\n';
            at_line_start_ = true;
        }
    }

    AnnotatedDocument finish(std::string doc_id) {
        AnnotatedDocument doc;
        doc.doc_id = std::move(doc_id);
        doc.text = std::move(text_);
        doc.spans = std::move(spans_);
        return doc;
    }

  private:
    std::string text_;
    std::vector<PhiSpan> spans_;
    bool at_line_start_ = true;
};

void add_filler_words(DocBuilder& builder, Rng& rng, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) builder.add_word(pick(rng, filler_words()));
}

// Lead-in vocabulary placed right before a fill, the way notes flag their
// fields ("fax 555-0199", "mrn 4711003"). Several classes share identical
// number shapes, so without these cues they would be inseparable even for a
// perfect model.
const std::vector<std::string>& cue_words(ClassId cls) {
    static const std::vector<std::string> kNone = {};
    static const std::map<std::string, std::vector<std::string>> kCues = {
        {"AGE", {"age", "aged"}},
        {"BIOID", {"specimen", "assay"}},
        {"CITY", {"in", "near", "from"}},
        {"COUNTRY", {"in", "visited", "from"}},
        {"DATE", {"on", "since", "dated"}},
        {"DEVICE", {"device", "implant"}},
        {"DOCTOR", {"dr", "physician", "attending"}},
        {"EMAIL", {"email", "mailto"}},
        {"FAX", {"fax", "faxed"}},
        {"HEALTHPLAN", {"coverage", "insurer"}},
        {"HOSPITAL", {"at", "transferred"}},
        {"IDNUM", {"id", "case"}},
        {"LOCATION-OTHER", {"located", "room"}},
        {"MEDICALRECORD", {"mrn", "record"}},
        {"ORGANIZATION", {"employer", "company"}},
        {"PATIENT", {"patient", "mr", "ms"}},
        {"PHONE", {"phone", "call", "tel"}},
        {"PROFESSION", {"works", "occupation"}},
        {"STATE", {"state", "moved"}},
        {"URL", {"visit", "website"}},
        {"USERNAME", {"user", "login"}},
        {"ZIP", {"zip", "postal"}},
    };
    const auto it = kCues.find(class_name(cls));
    return it == kCues.end() ? kNone : it->second;
}

void add_sentence(DocBuilder& builder, Rng& rng, ClassId phi_cls, bool has_phi) {
    add_filler_words(builder, rng, 5 + rng.uniform_below(5));
    if (has_phi) {
        const std::vector<std::string>& cues = cue_words(phi_cls);
        if (!cues.empty()) builder.add_word(pick(rng, cues));
        builder.add_entity(make_fill(rng, phi_cls), phi_cls);
        add_filler_words(builder, rng, 5 + rng.uniform_below(5));
    } else {
        add_filler_words(builder, rng, 3 + rng.uniform_below(5));
    }
    builder.end_sentence(rng.uniform() < 0.5);
}

}  // namespace

std::vector<ClassId> default_class_mix() {
    std::vector<ClassId> mix;
    for (int c = 0; c < kNumPhiClasses; ++c) {
        if (begin_tag(c).has_value()) mix.push_back(c);
    }
    return mix;
}

std::vector<AnnotatedDocument> generate_synthetic_corpus(std::size_t n_docs,
                                                         std::uint64_t seed,
                                                         const SyntheticOptions& options) {
    if (n_docs == 0) throw ConfigError("n_docs must be at least 1");
    if (options.class_mix.empty()) throw ConfigError("class mix must not be empty");
    for (ClassId cls : options.class_mix) {
        if (cls < 0 || cls >= kNumPhiClasses) {
            throw ConfigError("class id out of range in class mix: " + std::to_string(cls));
        }
        if (!begin_tag(cls).has_value()) {
            throw ConfigError("class " + class_name(cls) +
                              " has no begin tag and cannot be generated");
        }
    }

    const std::vector<ClassId>& mix = options.class_mix;
    std::vector<AnnotatedDocument> docs;
    docs.reserve(n_docs);

    for (std::size_t d = 0; d < n_docs; ++d) {
        Rng rng(derive_seed(seed, d));
        DocBuilder builder;

        // Round-robin coverage: document d owes an appearance of every class
        // whose index is congruent to d modulo n_docs.
        std::vector<ClassId> owed;
        for (std::size_t j = d; j < mix.size(); j += n_docs) owed.push_back(mix[j]);

        const std::size_t n_sentences = 9 + rng.uniform_below(6) + owed.size();
        std::size_t owed_next = 0;
        for (std::size_t s = 0; s < n_sentences; ++s) {
            if (owed_next < owed.size()) {
                add_sentence(builder, rng, owed[owed_next++], true);
            } else {
                const bool has_phi = rng.uniform() < options.phi_sentence_rate;
                const ClassId cls = mix[static_cast<std::size_t>(rng.uniform_below(mix.size()))];
                add_sentence(builder, rng, cls, has_phi);
            }
        }

        char id[32];
        std::snprintf(id, sizeof(id), "synth-%04zu", d);
        docs.push_back(builder.finish(id));
    }
    return docs;
}

}  // namespace deidkit
