#pragma once

#include <string>
#include <vector>

#include "deidkit/tags.hpp"
#include "deidkit/tokenize.hpp"

// De-identified output. Maximal runs of adjacent tokens sharing an entity
// class are replaced as one unit, covering everything from the first token's
// start to the last token's end. Non-entity text is preserved byte for byte.
// The manifest records each replacement with the original surface, so a
// processed document can be restored exactly, and so a surrogate generator
// could later swap in realistic fills instead.

namespace deidkit {

enum class DeidMode { redact, tag_insert };

struct DeidPolicy {
    DeidMode mode = DeidMode::tag_insert;
    // redact mode: this glyph repeats once per original code point, keeping
    // the visual length of the note.
    std::string glyph = "*";
    // tag_insert mode: "{class}" expands to the entity class name.
    std::string tag_template = "[{class}]";

    void validate() const;  // throws ConfigError
};

struct ManifestEntry {
    std::size_t start = 0;  // code point offsets into the original text
    std::size_t end = 0;
    ClassId cls = 0;
    std::string original;
    std::string replacement;
};

bool operator==(const ManifestEntry& a, const ManifestEntry& b);

struct DeidResult {
    std::string text;
    std::vector<ManifestEntry> manifest;  // ordered by start
};

// Replaces predicted entity runs in the text. word_classes holds one
// collapsed class per token. Throws InputError on a length mismatch.
DeidResult apply_policy(const std::string& text, const std::vector<Token>& tokens,
                        const std::vector<ClassId>& word_classes, const DeidPolicy& policy);

// Exact inverse: re-inserts the recorded originals. Throws ValidationError
// when the text does not contain the recorded replacements where the
// manifest says they are.
std::string restore_original(const std::string& deid_text,
                             const std::vector<ManifestEntry>& manifest);

// Manifest file: one "start<TAB>end<TAB>class<TAB>replacement" line per
// entry. The original surface is deliberately NOT written; a de-identified
// artifact must not carry the text it removed.
std::string render_manifest(const std::vector<ManifestEntry>& manifest);

}  // namespace deidkit
