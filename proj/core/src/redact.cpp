#include "deidkit/redact.hpp"

#include <sstream>

#include "deidkit/errors.hpp"
#include "deidkit/utf8.hpp"

namespace deidkit {

namespace {

std::string expand_template(const std::string& tag_template, const std::string& cls) {
    std::string out;
    std::size_t from = 0;
    for (;;) {
        const std::size_t hit = tag_template.find("{class}", from);
        if (hit == std::string::npos) {
            out.append(tag_template, from, tag_template.size() - from);
            return out;
        }
        out.append(tag_template, from, hit - from);
        out += cls;
        from = hit + 7;
    }
}

}  // namespace

void DeidPolicy::validate() const {
    if (mode == DeidMode::redact && glyph.empty()) {
        throw ConfigError("redact mode needs a non-empty glyph");
    }
    if (mode == DeidMode::tag_insert &&
        tag_template.find("{class}") == std::string::npos) {
        throw ConfigError("tag template must contain the {class} placeholder");
    }
}

bool operator==(const ManifestEntry& a, const ManifestEntry& b) {
    return a.start == b.start && a.end == b.end && a.cls == b.cls &&
           a.original == b.original && a.replacement == b.replacement;
}

DeidResult apply_policy(const std::string& text, const std::vector<Token>& tokens,
                        const std::vector<ClassId>& word_classes,
                        const DeidPolicy& policy) {
    policy.validate();
    if (tokens.size() != word_classes.size()) {
        throw InputError("token and label counts differ");
    }
    for (ClassId cls : word_classes) {
        if (cls < 0 || cls >= kNumClasses) {
            throw InputError("class id out of range: " + std::to_string(cls));
        }
    }

    const std::u32string points = utf8::decode(text);
    DeidResult result;
    std::u32string out;
    std::size_t copied_to = 0;  // code point offset of the first uncopied char

    std::size_t i = 0;
    while (i < tokens.size()) {
        if (word_classes[i] == kNonPhiClass) {
            ++i;
            continue;
        }
        const ClassId cls = word_classes[i];
        std::size_t j = i;
        while (j + 1 < tokens.size() && word_classes[j + 1] == cls) ++j;

        const std::size_t start = tokens[i].start;
        const std::size_t end = tokens[j].end;
        if (end > points.size() || start < copied_to) {
            throw InputError("token offsets are not sorted within the text");
        }
        out += points.substr(copied_to, start - copied_to);

        ManifestEntry entry;
        entry.start = start;
        entry.end = end;
        entry.cls = cls;
        entry.original = utf8::encode(points.substr(start, end - start));
        if (policy.mode == DeidMode::redact) {
            const std::u32string glyph = utf8::decode(policy.glyph);
            std::u32string replacement;
            for (std::size_t k = start; k < end; ++k) replacement += glyph;
            entry.replacement = utf8::encode(replacement);
            out += replacement;
        } else {
            entry.replacement = expand_template(policy.tag_template, class_name(cls));
            out += utf8::decode(entry.replacement);
        }
        result.manifest.push_back(std::move(entry));
        copied_to = end;
        i = j + 1;
    }
    out += points.substr(copied_to);
    result.text = utf8::encode(out);
    return result;
}

std::string restore_original(const std::string& deid_text,
                             const std::vector<ManifestEntry>& manifest) {
    const std::u32string deid = utf8::decode(deid_text);
    std::u32string out;
    std::size_t deid_pos = 0;
    std::size_t orig_pos = 0;
    for (const ManifestEntry& entry : manifest) {
        if (entry.start < orig_pos) {
            throw ValidationError("manifest entries overlap or are out of order");
        }
        const std::size_t verbatim = entry.start - orig_pos;
        if (deid_pos + verbatim > deid.size()) {
            throw ValidationError("de-identified text shorter than the manifest implies");
        }
        out += deid.substr(deid_pos, verbatim);
        deid_pos += verbatim;

        const std::u32string replacement = utf8::decode(entry.replacement);
        if (deid.substr(deid_pos, replacement.size()) != replacement) {
            throw ValidationError(
                "replacement text at offset " + std::to_string(deid_pos) +
                " does not match the manifest");
        }
        deid_pos += replacement.size();
        out += utf8::decode(entry.original);
        orig_pos = entry.end;
    }
    out += deid.substr(deid_pos);
    return utf8::encode(out);
}

std::string render_manifest(const std::vector<ManifestEntry>& manifest) {
    std::ostringstream out;
    for (const ManifestEntry& entry : manifest) {
        out << entry.start << '\t' << entry.end << '\t' << class_name(entry.cls) << '\t'
            << entry.replacement << '\n';
    }
    return out.str();
}

}  // namespace deidkit
