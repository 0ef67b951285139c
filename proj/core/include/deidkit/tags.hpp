#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// The label scheme for token tagging. The tag set is a fixed 41-entry table:
// 22 begin tags, 18 inside tags, and the outside tag. It is deliberately
// asymmetric: a handful of classes only ever appear as single tokens and have
// no inside tag, and STREET has an inside tag but no begin tag. Collapsing
// begin/inside pairs yields 23 entity classes plus the non-entity class.

namespace deidkit {

inline constexpr int kNumTags = 41;
inline constexpr int kNumClasses = 24;       // 23 entity classes + non-entity
inline constexpr int kNumPhiClasses = 23;
inline constexpr int kOutsideTag = 40;
inline constexpr int kNonPhiClass = 23;

// Identifier of a tag in [0, kNumTags). Begin tags occupy 0..21 in
// alphabetical class order, inside tags 22..39, and 40 is the outside tag.
using TagId = int;

// Identifier of a collapsed class in [0, kNumClasses). Classes 0..22 are
// entity classes in alphabetical order (STREET last since it has no begin
// tag); 23 is the non-entity class.
using ClassId = int;

// Tag name such as "B-DOCTOR", "I-DATE", or "O". Unknown names throw
// ValidationError.
TagId tag_from_name(std::string_view name);
const std::string& tag_name(TagId id);

// Class name such as "DOCTOR" or "Non-PHI".
ClassId class_from_name(std::string_view name);
const std::string& class_name(ClassId id);

// Collapses a tag to its class: B-X and I-X map to X, O maps to Non-PHI.
ClassId collapse_tag(TagId id);

// Begin/inside tag for a class, when the scheme defines one.
std::optional<TagId> begin_tag(ClassId cls);
std::optional<TagId> inside_tag(ClassId cls);

bool is_begin_tag(TagId id);
bool is_inside_tag(TagId id);

// All 41 tag names in id order.
const std::vector<std::string>& all_tag_names();

// All 24 class names in id order.
const std::vector<std::string>& all_class_names();

// True when `next` may follow `prev` in a well-formed sequence: an inside
// tag requires the previous tag to be the begin or inside tag of the same
// class.
bool valid_transition(TagId prev, TagId next);

// True when every adjacent pair in the sequence is a valid transition and
// the first tag is not an inside tag.
bool is_valid_bio_sequence(const std::vector<TagId>& tags);

}  // namespace deidkit
