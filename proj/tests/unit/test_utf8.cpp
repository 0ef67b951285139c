#include "deidkit/utf8.hpp"

#include <string>

#include "gtest/gtest.h"

#include "deidkit/errors.hpp"

namespace utf8 = deidkit::utf8;

TEST(Utf8, AsciiRoundTrip) {
    const std::string text = "hello, world";
    const std::u32string points = utf8::decode(text);
    EXPECT_EQ(points.size(), text.size());
    EXPECT_EQ(utf8::encode(points), text);
}

TEST(Utf8, MultibyteRoundTrip) {
    // two-, three-, and four-byte sequences
    const std::u32string points = U"café 世界 \U0001F600";
    const std::string bytes = utf8::encode(points);
    EXPECT_EQ(utf8::decode(bytes), points);
    EXPECT_GT(bytes.size(), points.size());
}

TEST(Utf8, CountPointsMatchesDecode) {
    const std::string text = utf8::encode(U"aß水\U0001F34C");
    EXPECT_EQ(utf8::count_points(text), 4u);
    EXPECT_EQ(utf8::decode(text).size(), 4u);
}

TEST(Utf8, RejectsLoneContinuationByte) {
    EXPECT_THROW(utf8::decode(std::string("\x80")), deidkit::ParseError);
    EXPECT_FALSE(utf8::is_valid(std::string("\x80")));
}

TEST(Utf8, RejectsTruncatedSequence) {
    // first byte promises three bytes, input ends after two
    EXPECT_THROW(utf8::decode(std::string("\xe4\xb8")), deidkit::ParseError);
}

TEST(Utf8, RejectsOverlongEncoding) {
    // '/' encoded in two bytes
    EXPECT_THROW(utf8::decode(std::string("\xc0\xaf")), deidkit::ParseError);
}

TEST(Utf8, RejectsSurrogateRange) {
    // U+D800 as three bytes
    EXPECT_THROW(utf8::decode(std::string("\xed\xa0\x80")), deidkit::ParseError);
}

TEST(Utf8, RejectsOutOfRangeScalar) {
    // 0x110000, one past the last scalar value
    EXPECT_THROW(utf8::decode(std::string("\xf4\x90\x80\x80")), deidkit::ParseError);
}

TEST(Utf8, RejectsBadLeadByte) {
    EXPECT_THROW(utf8::decode(std::string("\xfe")), deidkit::ParseError);
    EXPECT_THROW(utf8::decode(std::string("\xff")), deidkit::ParseError);
}

TEST(Utf8, EmptyStringIsValid) {
    EXPECT_TRUE(utf8::is_valid(""));
    EXPECT_EQ(utf8::decode("").size(), 0u);
    EXPECT_EQ(utf8::count_points(""), 0u);
}

TEST(Utf8, BoundaryScalars) {
    // the highest scalar in each encoded length class
    const std::u32string points = {0x7F, 0x7FF, 0xFFFF, 0x10FFFF};
    EXPECT_EQ(utf8::decode(utf8::encode(points)), points);
}
