#include "deidkit/tags.hpp"

#include <unordered_map>

#include "deidkit/errors.hpp"

namespace deidkit {

namespace {

// Fixed tables. Begin tags 0..21, inside tags 22..39, outside tag 40. The
// class list puts STREET last among entity classes because it has no begin
// tag and would otherwise break the parallel ordering with begin tag ids.
const std::vector<std::string>& tag_table() {
    static const std::vector<std::string> kTags = {
        "B-AGE",
        "B-BIOID",
        "B-CITY",
        "B-COUNTRY",
        "B-DATE",
        "B-DEVICE",
        "B-DOCTOR",
        "B-EMAIL",
        "B-FAX",
        "B-HEALTHPLAN",
        "B-HOSPITAL",
        "B-IDNUM",
        "B-LOCATION-OTHER",
        "B-MEDICALRECORD",
        "B-ORGANIZATION",
        "B-PATIENT",
        "B-PHONE",
        "B-PROFESSION",
        "B-STATE",
        "B-URL",
        "B-USERNAME",
        "B-ZIP",
        "I-AGE",
        "I-CITY",
        "I-COUNTRY",
        "I-DATE",
        "I-DOCTOR",
        "I-FAX",
        "I-HEALTHPLAN",
        "I-HOSPITAL",
        "I-IDNUM",
        "I-LOCATION-OTHER",
        "I-MEDICALRECORD",
        "I-ORGANIZATION",
        "I-PATIENT",
        "I-PHONE",
        "I-PROFESSION",
        "I-STATE",
        "I-STREET",
        "I-URL",
        "O",
    };
    return kTags;
}

const std::vector<std::string>& class_table() {
    static const std::vector<std::string> kClasses = {
        "AGE",
        "BIOID",
        "CITY",
        "COUNTRY",
        "DATE",
        "DEVICE",
        "DOCTOR",
        "EMAIL",
        "FAX",
        "HEALTHPLAN",
        "HOSPITAL",
        "IDNUM",
        "LOCATION-OTHER",
        "MEDICALRECORD",
        "ORGANIZATION",
        "PATIENT",
        "PHONE",
        "PROFESSION",
        "STATE",
        "URL",
        "USERNAME",
        "ZIP",
        "STREET",
        "Non-PHI",
    };
    return kClasses;
}

const std::unordered_map<std::string, TagId>& tag_index() {
    static const std::unordered_map<std::string, TagId> kIndex = [] {
        std::unordered_map<std::string, TagId> m;
        const auto& tags = tag_table();
        for (int i = 0; i < static_cast<int>(tags.size()); ++i) m.emplace(tags[i], i);
        return m;
    }();
    return kIndex;
}

const std::unordered_map<std::string, ClassId>& class_index() {
    static const std::unordered_map<std::string, ClassId> kIndex = [] {
        std::unordered_map<std::string, ClassId> m;
        const auto& classes = class_table();
        for (int i = 0; i < static_cast<int>(classes.size()); ++i) m.emplace(classes[i], i);
        return m;
    }();
    return kIndex;
}

// collapse[tag] -> class id, computed from the names once.
const std::array<ClassId, kNumTags>& collapse_table() {
    static const std::array<ClassId, kNumTags> kCollapse = [] {
        std::array<ClassId, kNumTags> t{};
        const auto& tags = tag_table();
        for (int i = 0; i < kNumTags; ++i) {
            const std::string& name = tags[i];
            if (name == "O") {
                t[i] = kNonPhiClass;
            } else {
                t[i] = class_index().at(name.substr(2));
            }
        }
        return t;
    }();
    return kCollapse;
}

}  // namespace

TagId tag_from_name(std::string_view name) {
    auto it = tag_index().find(std::string(name));
    if (it == tag_index().end()) {
        throw ValidationError("unknown tag name: " + std::string(name));
    }
    return it->second;
}

const std::string& tag_name(TagId id) {
    if (id < 0 || id >= kNumTags) {
        throw ValidationError("tag id out of range: " + std::to_string(id));
    }
    return tag_table()[static_cast<std::size_t>(id)];
}

ClassId class_from_name(std::string_view name) {
    auto it = class_index().find(std::string(name));
    if (it == class_index().end()) {
        throw ValidationError("unknown class name: " + std::string(name));
    }
    return it->second;
}

const std::string& class_name(ClassId id) {
    if (id < 0 || id >= kNumClasses) {
        throw ValidationError("class id out of range: " + std::to_string(id));
    }
    return class_table()[static_cast<std::size_t>(id)];
}

ClassId collapse_tag(TagId id) {
    if (id < 0 || id >= kNumTags) {
        throw ValidationError("tag id out of range: " + std::to_string(id));
    }
    return collapse_table()[static_cast<std::size_t>(id)];
}

std::optional<TagId> begin_tag(ClassId cls) {
    if (cls < 0 || cls >= kNumClasses) {
        throw ValidationError("class id out of range: " + std::to_string(cls));
    }
    if (cls == kNonPhiClass) return std::nullopt;
    auto it = tag_index().find("B-" + class_name(cls));
    if (it == tag_index().end()) return std::nullopt;
    return it->second;
}

std::optional<TagId> inside_tag(ClassId cls) {
    if (cls < 0 || cls >= kNumClasses) {
        throw ValidationError("class id out of range: " + std::to_string(cls));
    }
    if (cls == kNonPhiClass) return std::nullopt;
    auto it = tag_index().find("I-" + class_name(cls));
    if (it == tag_index().end()) return std::nullopt;
    return it->second;
}

bool is_begin_tag(TagId id) { return id >= 0 && id < 22; }

bool is_inside_tag(TagId id) { return id >= 22 && id < kOutsideTag; }

const std::vector<std::string>& all_tag_names() { return tag_table(); }

const std::vector<std::string>& all_class_names() { return class_table(); }

bool valid_transition(TagId prev, TagId next) {
    if (!is_inside_tag(next)) return true;
    if (prev == kOutsideTag) return false;
    return collapse_tag(prev) == collapse_tag(next);
}

bool is_valid_bio_sequence(const std::vector<TagId>& tags) {
    for (std::size_t i = 0; i < tags.size(); ++i) {
        const TagId t = tags[i];
        if (t < 0 || t >= kNumTags) return false;
        if (i == 0) {
            if (is_inside_tag(t)) return false;
        } else if (!valid_transition(tags[i - 1], t)) {
            return false;
        }
    }
    return true;
}

}  // namespace deidkit
