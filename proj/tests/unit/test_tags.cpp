#include "deidkit/tags.hpp"

#include <set>
#include <vector>

#include "gtest/gtest.h"

#include "deidkit/errors.hpp"

using namespace deidkit;

TEST(Tags, TableHasFortyOneEntries) {
    EXPECT_EQ(all_tag_names().size(), 41u);
    EXPECT_EQ(kNumTags, 41);
    EXPECT_EQ(all_class_names().size(), 24u);
}

TEST(Tags, BeginInsideOutsideLayout) {
    int begins = 0, insides = 0, outsides = 0;
    for (TagId id = 0; id < kNumTags; ++id) {
        const std::string& name = tag_name(id);
        if (name.rfind("B-", 0) == 0) {
            ++begins;
            EXPECT_TRUE(is_begin_tag(id)) << name;
        } else if (name.rfind("I-", 0) == 0) {
            ++insides;
            EXPECT_TRUE(is_inside_tag(id)) << name;
        } else {
            ++outsides;
            EXPECT_EQ(name, "O");
            EXPECT_EQ(id, kOutsideTag);
        }
    }
    EXPECT_EQ(begins, 22);
    EXPECT_EQ(insides, 18);
    EXPECT_EQ(outsides, 1);
}

TEST(Tags, NamesRoundTripThroughIds) {
    for (TagId id = 0; id < kNumTags; ++id) {
        EXPECT_EQ(tag_from_name(tag_name(id)), id);
    }
    for (ClassId cls = 0; cls < kNumClasses; ++cls) {
        EXPECT_EQ(class_from_name(class_name(cls)), cls);
    }
}

TEST(Tags, UnknownNamesThrow) {
    EXPECT_THROW(tag_from_name("B-NOSUCH"), ValidationError);
    EXPECT_THROW(tag_from_name(""), ValidationError);
    EXPECT_THROW(class_from_name("NOSUCH"), ValidationError);
}

TEST(Tags, BeginTagsAlphabeticalByClass) {
    for (TagId id = 0; id + 1 < 22; ++id) {
        EXPECT_LT(class_name(collapse_tag(id)), class_name(collapse_tag(id + 1)));
    }
}

TEST(Tags, CollapseStripsPrefix) {
    EXPECT_EQ(class_name(collapse_tag(tag_from_name("B-DOCTOR"))), "DOCTOR");
    EXPECT_EQ(class_name(collapse_tag(tag_from_name("I-DOCTOR"))), "DOCTOR");
    EXPECT_EQ(collapse_tag(kOutsideTag), kNonPhiClass);
    // begin and inside of a class collapse to the same id
    for (ClassId cls = 0; cls < kNumPhiClasses; ++cls) {
        const auto b = begin_tag(cls);
        const auto i = inside_tag(cls);
        if (b.has_value()) EXPECT_EQ(collapse_tag(*b), cls);
        if (i.has_value()) EXPECT_EQ(collapse_tag(*i), cls);
    }
}

TEST(Tags, SingleTokenOnlyClassesHaveNoInsideTag) {
    for (const char* name : {"BIOID", "DEVICE", "EMAIL", "USERNAME", "ZIP"}) {
        const ClassId cls = class_from_name(name);
        EXPECT_TRUE(begin_tag(cls).has_value()) << name;
        EXPECT_FALSE(inside_tag(cls).has_value()) << name;
    }
}

TEST(Tags, StreetHasInsideButNoBeginTag) {
    const ClassId street = class_from_name("STREET");
    EXPECT_FALSE(begin_tag(street).has_value());
    ASSERT_TRUE(inside_tag(street).has_value());
    EXPECT_EQ(tag_name(*inside_tag(street)), "I-STREET");
}

TEST(Tags, NonPhiClassHasNoTags) {
    EXPECT_FALSE(begin_tag(kNonPhiClass).has_value());
    EXPECT_FALSE(inside_tag(kNonPhiClass).has_value());
}

TEST(Tags, TransitionRules) {
    const TagId b_date = tag_from_name("B-DATE");
    const TagId i_date = tag_from_name("I-DATE");
    const TagId b_age = tag_from_name("B-AGE");
    const TagId i_city = tag_from_name("I-CITY");
    EXPECT_TRUE(valid_transition(b_date, i_date));
    EXPECT_TRUE(valid_transition(i_date, i_date));
    EXPECT_TRUE(valid_transition(b_date, kOutsideTag));
    EXPECT_TRUE(valid_transition(kOutsideTag, b_date));
    EXPECT_TRUE(valid_transition(b_date, b_age));
    EXPECT_FALSE(valid_transition(kOutsideTag, i_date));
    EXPECT_FALSE(valid_transition(b_age, i_date));
    EXPECT_FALSE(valid_transition(i_date, i_city));
}

TEST(Tags, SequenceValidation) {
    const TagId b_date = tag_from_name("B-DATE");
    const TagId i_date = tag_from_name("I-DATE");
    const TagId o = kOutsideTag;
    EXPECT_TRUE(is_valid_bio_sequence({}));
    EXPECT_TRUE(is_valid_bio_sequence({o, o, o}));
    EXPECT_TRUE(is_valid_bio_sequence({b_date, i_date, i_date, o}));
    EXPECT_FALSE(is_valid_bio_sequence({i_date, o}));
    EXPECT_FALSE(is_valid_bio_sequence({o, i_date}));
    EXPECT_FALSE(is_valid_bio_sequence({b_date, o, i_date}));
}

TEST(Tags, ClassIdsCoverEveryTag) {
    std::set<ClassId> classes;
    for (TagId id = 0; id < kNumTags; ++id) classes.insert(collapse_tag(id));
    // every collapsed id is a valid class and the outside tag maps last
    for (const ClassId cls : classes) {
        ASSERT_GE(cls, 0);
        ASSERT_LT(cls, kNumClasses);
    }
    EXPECT_EQ(classes.size(), 24u);
}
