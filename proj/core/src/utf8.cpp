#include "deidkit/utf8.hpp"

namespace deidkit::utf8 {

namespace {

bool is_continuation(unsigned char b) { return (b & 0xC0) == 0x80; }

}  // namespace

std::u32string decode(std::string_view bytes) {
    std::u32string out;
    out.reserve(bytes.size());
    std::size_t i = 0;
    while (i < bytes.size()) {
        const unsigned char b0 = static_cast<unsigned char>(bytes[i]);
        char32_t cp = 0;
        std::size_t len = 0;
        if (b0 < 0x80) {
            cp = b0;
            len = 1;
        } else if ((b0 & 0xE0) == 0xC0) {
            cp = b0 & 0x1F;
            len = 2;
        } else if ((b0 & 0xF0) == 0xE0) {
            cp = b0 & 0x0F;
            len = 3;
        } else if ((b0 & 0xF8) == 0xF0) {
            cp = b0 & 0x07;
            len = 4;
        } else {
            throw Error("invalid UTF-8 lead byte at offset " + std::to_string(i));
        }
        if (i + len > bytes.size()) {
            throw Error("truncated UTF-8 sequence at offset " + std::to_string(i));
        }
        for (std::size_t k = 1; k < len; ++k) {
            const unsigned char bk = static_cast<unsigned char>(bytes[i + k]);
            if (!is_continuation(bk)) {
                throw Error("invalid UTF-8 continuation byte at offset " +
                            std::to_string(i + k));
            }
            cp = (cp << 6) | (bk & 0x3F);
        }
        // Reject overlong forms and out-of-range values.
        static constexpr char32_t kMinForLen[5] = {0, 0, 0x80, 0x800, 0x10000};
        if (len > 1 && cp < kMinForLen[len]) {
            throw Error("overlong UTF-8 sequence at offset " + std::to_string(i));
        }
        if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
            throw Error("UTF-8 sequence decodes outside Unicode scalar range at offset " +
                        std::to_string(i));
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

std::string encode(std::u32string_view points) {
    std::string out;
    out.reserve(points.size());
    for (char32_t cp : points) {
        if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
            throw Error("cannot encode invalid Unicode scalar value");
        }
        if (cp < 0x80) {
            out.push_back(static_cast<char>(cp));
        } else if (cp < 0x800) {
            out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else if (cp < 0x10000) {
            out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else {
            out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        }
    }
    return out;
}

std::size_t count_points(std::string_view bytes) { return decode(bytes).size(); }

bool is_valid(std::string_view bytes) {
    try {
        decode(bytes);
        return true;
    } catch (const Error&) {
        return false;
    }
}

}  // namespace deidkit::utf8
