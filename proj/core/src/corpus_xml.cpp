#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <utility>

#include "deidkit/corpus.hpp"
#include "deidkit/errors.hpp"
#include "deidkit/utf8.hpp"

// Hand-rolled parser for the small XML subset the corpus format uses:
// prolog, comments, one root element, nested elements, attributes, CDATA,
// character data with the five named entities plus numeric references.
// No DTDs, namespaces, or processing instructions beyond the prolog.

namespace deidkit {

namespace {

struct XmlNode {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attrs;
    std::vector<XmlNode> children;
    std::string text;  // character data and CDATA, concatenated
    int line = 0;
    int column = 0;

    const std::string* attr(const std::string& key) const {
        for (const auto& [k, v] : attrs) {
            if (k == key) return &v;
        }
        return nullptr;
    }
};

class Cursor {
  public:
    explicit Cursor(const std::string& s) : s_(s) {}

    bool eof() const { return pos_ >= s_.size(); }
    char peek() const { return s_[pos_]; }
    int line() const { return line_; }
    int column() const { return column_; }

    bool starts_with(std::string_view t) const {
        return s_.compare(pos_, t.size(), t) == 0;
    }

    void advance(std::size_t n = 1) {
        for (std::size_t i = 0; i < n && pos_ < s_.size(); ++i) {
            if (s_[pos_] == '\n') {
                ++line_;
                column_ = 1;
            } else {
                ++column_;
            }
            ++pos_;
        }
    }

    void expect(std::string_view t) {
        if (!starts_with(t)) fail("expected '" + std::string(t) + "'");
        advance(t.size());
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(msg, line_, column_);
    }

    std::size_t pos() const { return pos_; }
    std::string_view slice(std::size_t from, std::size_t to) const {
        return std::string_view(s_).substr(from, to - from);
    }

  private:
    const std::string& s_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int column_ = 1;
};

bool is_xml_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

bool is_name_start(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_' || c == ':';
}

bool is_name_char(char c) {
    return is_name_start(c) || (c >= '0' && c <= '9') || c == '-' || c == '.';
}

void skip_ws(Cursor& cur) {
    while (!cur.eof() && is_xml_ws(cur.peek())) cur.advance();
}

void skip_comment(Cursor& cur) {
    cur.expect("<!--");
    while (!cur.starts_with("-->")) {
        if (cur.eof()) cur.fail("unterminated comment");
        cur.advance();
    }
    cur.advance(3);
}

void skip_misc(Cursor& cur) {
    for (;;) {
        skip_ws(cur);
        if (cur.starts_with("<?")) {
            while (!cur.starts_with("?>")) {
                if (cur.eof()) cur.fail("unterminated processing instruction");
                cur.advance();
            }
            cur.advance(2);
        } else if (cur.starts_with("<!--")) {
            skip_comment(cur);
        } else if (cur.starts_with("<!DOCTYPE")) {
            while (!cur.eof() && cur.peek() != '>') cur.advance();
            if (cur.eof()) cur.fail("unterminated DOCTYPE");
            cur.advance();
        } else {
            return;
        }
    }
}

std::string read_name(Cursor& cur) {
    if (cur.eof() || !is_name_start(cur.peek())) cur.fail("expected a name");
    const std::size_t from = cur.pos();
    while (!cur.eof() && is_name_char(cur.peek())) cur.advance();
    return std::string(cur.slice(from, cur.pos()));
}

// Decodes one entity reference positioned at '&'.
void append_entity(Cursor& cur, std::string& out) {
    cur.expect("&");
    if (cur.starts_with("amp;")) {
        cur.advance(4);
        out.push_back('&');
    } else if (cur.starts_with("lt;")) {
        cur.advance(3);
        out.push_back('<');
    } else if (cur.starts_with("gt;")) {
        cur.advance(3);
        out.push_back('>');
    } else if (cur.starts_with("quot;")) {
        cur.advance(5);
        out.push_back('"');
    } else if (cur.starts_with("apos;")) {
        cur.advance(5);
        out.push_back('\'');
    } else if (cur.starts_with("#")) {
        cur.advance(1);
        int base = 10;
        if (!cur.eof() && (cur.peek() == 'x' || cur.peek() == 'X')) {
            base = 16;
            cur.advance();
        }
        std::uint32_t value = 0;
        bool any = false;
        while (!cur.eof() && cur.peek() != ';') {
            const char c = cur.peek();
            int digit;
            if (c >= '0' && c <= '9') {
                digit = c - '0';
            } else if (base == 16 && c >= 'a' && c <= 'f') {
                digit = c - 'a' + 10;
            } else if (base == 16 && c >= 'A' && c <= 'F') {
                digit = c - 'A' + 10;
            } else {
                cur.fail("bad character reference");
            }
            value = value * static_cast<std::uint32_t>(base) + static_cast<std::uint32_t>(digit);
            if (value > 0x10FFFF) cur.fail("character reference out of range");
            any = true;
            cur.advance();
        }
        if (!any || cur.eof()) cur.fail("unterminated character reference");
        cur.advance();  // ';'
        out += utf8::encode(std::u32string(1, static_cast<char32_t>(value)));
    } else {
        cur.fail("unknown entity reference");
    }
}

std::string read_attr_value(Cursor& cur) {
    if (cur.eof() || (cur.peek() != '"' && cur.peek() != '\'')) {
        cur.fail("expected a quoted attribute value");
    }
    const char quote = cur.peek();
    cur.advance();
    std::string out;
    while (!cur.eof() && cur.peek() != quote) {
        if (cur.peek() == '&') {
            append_entity(cur, out);
        } else if (cur.peek() == '<') {
            cur.fail("'<' not allowed in attribute value");
        } else {
            out.push_back(cur.peek());
            cur.advance();
        }
    }
    if (cur.eof()) cur.fail("unterminated attribute value");
    cur.advance();  // closing quote
    return out;
}

XmlNode parse_element(Cursor& cur) {
    XmlNode node;
    node.line = cur.line();
    node.column = cur.column();
    cur.expect("<");
    node.name = read_name(cur);
    for (;;) {
        skip_ws(cur);
        if (cur.eof()) cur.fail("unterminated element");
        if (cur.starts_with("/>")) {
            cur.advance(2);
            return node;
        }
        if (cur.peek() == '>') {
            cur.advance();
            break;
        }
        std::string key = read_name(cur);
        skip_ws(cur);
        cur.expect("=");
        skip_ws(cur);
        std::string value = read_attr_value(cur);
        for (const auto& [k, v] : node.attrs) {
            if (k == key) cur.fail("duplicate attribute '" + key + "'");
        }
        node.attrs.emplace_back(std::move(key), std::move(value));
    }
    // Content until the matching close tag.
    for (;;) {
        if (cur.eof()) cur.fail("missing closing tag for <" + node.name + ">");
        if (cur.starts_with("</")) {
            cur.advance(2);
            const std::string closing = read_name(cur);
            if (closing != node.name) {
                cur.fail("mismatched closing tag </" + closing + "> for <" + node.name + ">");
            }
            skip_ws(cur);
            cur.expect(">");
            return node;
        }
        if (cur.starts_with("<![CDATA[")) {
            cur.advance(9);
            const std::size_t from = cur.pos();
            while (!cur.starts_with("]]>")) {
                if (cur.eof()) cur.fail("unterminated CDATA section");
                cur.advance();
            }
            node.text += cur.slice(from, cur.pos());
            cur.advance(3);
        } else if (cur.starts_with("<!--")) {
            skip_comment(cur);
        } else if (cur.peek() == '<') {
            node.children.push_back(parse_element(cur));
        } else if (cur.peek() == '&') {
            append_entity(cur, node.text);
        } else {
            node.text.push_back(cur.peek());
            cur.advance();
        }
    }
}

std::size_t parse_offset(const XmlNode& tag, const std::string& tag_id, const std::string& key) {
    const std::string* raw = tag.attr(key);
    if (raw == nullptr) {
        throw ValidationError("tag " + tag_id + ": missing '" + key + "' attribute");
    }
    std::size_t value = 0;
    const char* first = raw->data();
    const char* last = raw->data() + raw->size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
        throw ValidationError("tag " + tag_id + ": '" + key + "' is not a non-negative integer");
    }
    return value;
}

std::size_t span_length(const PhiSpan& s) { return s.end - s.start; }

// Greedy overlap resolution: keep the longer span of each overlapping pair,
// preferring the earlier span on ties.
std::vector<PhiSpan> resolve_overlaps(std::vector<PhiSpan> spans) {
    std::vector<PhiSpan> kept;
    for (PhiSpan& candidate : spans) {
        bool drop_candidate = false;
        while (!kept.empty() && kept.back().end > candidate.start) {
            if (span_length(candidate) > span_length(kept.back())) {
                kept.pop_back();
            } else {
                drop_candidate = true;
                break;
            }
        }
        if (!drop_candidate) kept.push_back(std::move(candidate));
    }
    return kept;
}

std::string escape_attr(const std::string& value) {
    std::string out;
    out.reserve(value.size());
    for (char c : value) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            case '\n': out += "&#10;"; break;
            case '\t': out += "&#9;"; break;
            case '\r': out += "&#13;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string wrap_cdata(const std::string& text) {
    std::string out = "<![CDATA[";
    std::size_t from = 0;
    for (;;) {
        const std::size_t hit = text.find("]]>", from);
        if (hit == std::string::npos) {
            out.append(text, from, text.size() - from);
            break;
        }
        // Split the terminator across two sections.
        out.append(text, from, hit + 2 - from);
        out += "]]><![CDATA[";
        from = hit + 2;
    }
    out += "]]>";
    return out;
}

}  // namespace

bool operator==(const PhiSpan& a, const PhiSpan& b) {
    return a.start == b.start && a.end == b.end && a.cls == b.cls && a.surface == b.surface;
}

bool operator==(const AnnotatedDocument& a, const AnnotatedDocument& b) {
    return a.doc_id == b.doc_id && a.text == b.text && a.spans == b.spans;
}

AnnotatedDocument parse_document(const std::string& xml, const ParseOptions& options) {
    if (!utf8::is_valid(xml)) throw ParseError("input is not valid UTF-8", 1, 1);

    Cursor cur(xml);
    skip_misc(cur);
    if (cur.eof() || cur.peek() != '<') cur.fail("expected a root element");
    XmlNode root = parse_element(cur);
    skip_misc(cur);
    if (!cur.eof()) cur.fail("trailing content after root element");

    const XmlNode* text_node = nullptr;
    const XmlNode* tags_node = nullptr;
    for (const XmlNode& child : root.children) {
        if (child.name == "TEXT") {
            if (text_node != nullptr) {
                throw ParseError("more than one TEXT element", child.line, child.column);
            }
            text_node = &child;
        } else if (child.name == "TAGS") {
            if (tags_node != nullptr) {
                throw ParseError("more than one TAGS element", child.line, child.column);
            }
            tags_node = &child;
        }
    }
    if (text_node == nullptr) {
        throw ParseError("missing TEXT element", root.line, root.column);
    }

    AnnotatedDocument doc;
    if (const std::string* id = root.attr("id")) doc.doc_id = *id;
    doc.text = text_node->text;

    const std::u32string points = utf8::decode(doc.text);

    std::vector<PhiSpan> spans;
    std::vector<std::string> span_ids;
    if (tags_node != nullptr) {
        int index = 0;
        for (const XmlNode& tag : tags_node->children) {
            const std::string* id_attr = tag.attr("id");
            const std::string tag_id =
                id_attr != nullptr ? *id_attr : "#" + std::to_string(index);
            PhiSpan span;
            span.start = parse_offset(tag, tag_id, "start");
            span.end = parse_offset(tag, tag_id, "end");
            const std::string* type = tag.attr("TYPE");
            if (type == nullptr) {
                throw ValidationError("tag " + tag_id + ": missing 'TYPE' attribute");
            }
            span.cls = class_from_name(*type);
            if (span.cls == kNonPhiClass) {
                throw ValidationError("tag " + tag_id + ": TYPE must be an entity class");
            }
            const std::string* surface = tag.attr("text");
            if (surface == nullptr) {
                throw ValidationError("tag " + tag_id + ": missing 'text' attribute");
            }
            if (span.start >= span.end || span.end > points.size()) {
                throw ValidationError(
                    "tag " + tag_id + ": span [" + std::to_string(span.start) + "," +
                    std::to_string(span.end) + ") out of range for a document of length " +
                    std::to_string(points.size()));
            }
            span.surface = utf8::encode(
                std::u32string_view(points).substr(span.start, span.end - span.start));
            if (span.surface != *surface) {
                throw ValidationError("tag " + tag_id +
                                      ": text attribute does not match the document substring");
            }
            spans.push_back(std::move(span));
            span_ids.push_back(tag_id);
            ++index;
        }
    }

    std::vector<std::size_t> order(spans.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (spans[a].start != spans[b].start) return spans[a].start < spans[b].start;
        return spans[a].end > spans[b].end;  // longer first at equal start
    });
    std::vector<PhiSpan> sorted;
    sorted.reserve(spans.size());
    for (std::size_t i : order) sorted.push_back(spans[i]);

    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        if (sorted[i].end > sorted[i + 1].start) {
            if (!options.keep_longest) {
                throw ValidationError("overlapping spans " + span_ids[order[i]] + " and " +
                                      span_ids[order[i + 1]] +
                                      " (re-run with overlap resolution to keep the longer)");
            }
        }
    }
    doc.spans = options.keep_longest ? resolve_overlaps(std::move(sorted)) : std::move(sorted);
    return doc;
}

std::string write_document(const AnnotatedDocument& doc) {
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<deIdi2b2 id=\"" + escape_attr(doc.doc_id) + "\">\n";
    out += "<TEXT>" + wrap_cdata(doc.text) + "</TEXT>\n";
    out += "<TAGS>\n";
    int index = 0;
    for (const PhiSpan& span : doc.spans) {
        const std::string& cls = class_name(span.cls);
        out += "<" + cls + " id=\"P" + std::to_string(index) + "\" start=\"" +
               std::to_string(span.start) + "\" end=\"" + std::to_string(span.end) +
               "\" text=\"" + escape_attr(span.surface) + "\" TYPE=\"" + cls + "\"/>\n";
        ++index;
    }
    out += "</TAGS>\n";
    out += "</deIdi2b2>\n";
    return out;
}

std::vector<AnnotatedDocument> load_corpus_dir(const std::filesystem::path& dir,
                                               const ParseOptions& options) {
    if (!std::filesystem::is_directory(dir)) {
        throw InputError("not a directory: " + dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".xml") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<AnnotatedDocument> docs;
    docs.reserve(files.size());
    for (const auto& file : files) {
        std::ifstream in(file, std::ios::binary);
        if (!in) throw InputError("cannot open " + file.string());
        std::ostringstream buffer;
        buffer << in.rdbuf();
        try {
            AnnotatedDocument doc = parse_document(buffer.str(), options);
            if (doc.doc_id.empty()) doc.doc_id = file.stem().string();
            docs.push_back(std::move(doc));
        } catch (const Error& e) {
            throw InputError(file.string() + ": " + e.what());
        }
    }
    return docs;
}

void save_corpus_dir(const std::vector<AnnotatedDocument>& docs,
                     const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const AnnotatedDocument& doc : docs) {
        if (doc.doc_id.empty()) throw InputError("document without an id cannot be saved");
        const std::filesystem::path file = dir / (doc.doc_id + ".xml");
        std::ofstream out(file, std::ios::binary);
        if (!out) throw InputError("cannot write " + file.string());
        out << write_document(doc);
    }
}

}  // namespace deidkit
