#include "stylemt/textproc.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "stylemt/util/io.hpp"
#include "stylemt/util/utf8.hpp"

namespace stylemt {

namespace {

bool is_ascii_ws(char32_t cp) {
    return cp == U' ' || cp == U'\t' || cp == U'\r' || cp == U'\n' || cp == U'\f' ||
           cp == U'\v';
}

bool is_digit(char32_t cp) { return cp >= U'0' && cp <= U'9'; }

bool is_letter(char32_t cp) {
    return (cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z') || cp >= 0x80;
}

bool is_alnum(char32_t cp) { return is_digit(cp) || is_letter(cp); }

// The fixed normalization table.
const char* map_codepoint(char32_t cp) {
    switch (cp) {
        case 0x201C: case 0x201D: case 0x201E: case 0x00AB: case 0x00BB:
            return "\"";
        case 0x2018: case 0x2019: case 0x201A: case 0x2039: case 0x203A:
            return "'";
        case 0x2012: case 0x2013: case 0x2015:
            return "-";
        case 0x2014:
            return " - ";
        case 0x2026:
            return "...";
        case 0x00A0:
            return " ";
        default:
            return nullptr;
    }
}

char32_t lower_cp(char32_t cp) {
    if (cp >= U'A' && cp <= U'Z') return cp + 0x20;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;  // Latin-1
    return cp;
}

char32_t upper_cp(char32_t cp) {
    if (cp >= U'a' && cp <= U'z') return cp - 0x20;
    if (cp >= 0xE0 && cp <= 0xFE && cp != 0xF7) return cp - 0x20;
    return cp;
}

}  // namespace

bool is_style_tag(const std::string& token) {
    return token == kFormalTag || token == kInformalTag;
}

RawLine normalize(const RawLine& line) {
    std::vector<char32_t> cps;
    try {
        cps = utf8_decode(line.text);
    } catch (const Utf8Error& e) {
        throw TextprocError("line " + std::to_string(line.line_no) + ": " + e.what());
    }
    std::string mapped;
    mapped.reserve(line.text.size());
    for (char32_t cp : cps) {
        if (const char* repl = map_codepoint(cp)) {
            mapped += repl;
        } else {
            utf8_append(mapped, cp);
        }
    }
    // Collapse whitespace and trim (ASCII whitespace only after mapping).
    std::string out;
    out.reserve(mapped.size());
    bool pending_space = false;
    for (char32_t cp : utf8_decode(mapped)) {
        if (is_ascii_ws(cp)) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out.push_back(' ');
            pending_space = false;
            utf8_append(out, cp);
        }
    }
    return RawLine{out, line.line_no};
}

namespace {

void tokenize_chunk(const std::vector<char32_t>& c, TokenSeq& out) {
    std::string core;
    auto flush = [&] {
        if (!core.empty()) {
            out.push_back(core);
            core.clear();
        }
    };
    size_t n = c.size();
    for (size_t i = 0; i < n; ++i) {
        char32_t cp = c[i];
        if (is_alnum(cp)) {
            utf8_append(core, cp);
            continue;
        }
        bool has_prev = i > 0;
        bool has_next = i + 1 < n;
        if ((cp == U'.' || cp == U',' || cp == U':') && has_prev && has_next &&
            is_digit(c[i - 1]) && is_digit(c[i + 1])) {
            utf8_append(core, cp);  // number-internal separator
            continue;
        }
        if (cp == U'-' && has_prev && has_next && is_alnum(c[i - 1]) && is_alnum(c[i + 1])) {
            utf8_append(core, cp);  // hyphenated word
            continue;
        }
        if (cp == U'\'' && has_next && is_letter(c[i + 1])) {
            flush();
            core.push_back('\'');  // contraction: apostrophe opens the token
            continue;
        }
        if (cp == U'.') {
            size_t j = i;
            while (j + 1 < n && c[j + 1] == U'.') ++j;
            flush();
            out.emplace_back(j - i + 1, '.');
            i = j;
            continue;
        }
        flush();
        std::string single;
        utf8_append(single, cp);
        out.push_back(std::move(single));
    }
    flush();
}

}  // namespace

TokenSeq tokenize(const RawLine& line) {
    std::vector<char32_t> cps;
    try {
        cps = utf8_decode(line.text);
    } catch (const Utf8Error& e) {
        throw TextprocError("line " + std::to_string(line.line_no) + ": " + e.what());
    }
    TokenSeq out;
    size_t i = 0;
    while (i < cps.size()) {
        while (i < cps.size() && is_ascii_ws(cps[i])) ++i;
        size_t start = i;
        while (i < cps.size() && !is_ascii_ws(cps[i])) ++i;
        if (i == start) break;
        std::vector<char32_t> chunk(cps.begin() + start, cps.begin() + i);
        std::string chunk_str = utf8_encode(chunk);
        if (is_style_tag(chunk_str)) {
            out.push_back(chunk_str);
        } else {
            tokenize_chunk(chunk, out);
        }
    }
    return out;
}

std::string detokenize(const TokenSeq& tokens) {
    static const std::string left_binding = ",!?;:%";
    std::string out;
    bool suppress_space = false;
    int dquote_parity = 0;
    for (const auto& tok : tokens) {
        bool all_dots = !tok.empty() &&
                        std::all_of(tok.begin(), tok.end(), [](char ch) { return ch == '.'; });
        bool binds_left =
            all_dots || (tok.size() == 1 && left_binding.find(tok[0]) != std::string::npos) ||
            (tok.size() > 1 && tok[0] == '\'') || (tok == ")") || (tok == "]") || (tok == "}");
        bool binds_right = tok == "(" || tok == "[" || tok == "{";
        if (tok == "\"") {
            if (dquote_parity == 0) {  // opening quote
                if (!out.empty() && !suppress_space) out.push_back(' ');
                out += tok;
                suppress_space = true;
            } else {  // closing quote
                out += tok;
                suppress_space = false;
            }
            dquote_parity ^= 1;
            continue;
        }
        if (!out.empty() && !suppress_space && !binds_left) out.push_back(' ');
        out += tok;
        suppress_space = binds_right;
    }
    return out;
}

std::string lowercase(const std::string& token) {
    std::vector<char32_t> cps = utf8_decode(token);
    for (auto& cp : cps) cp = lower_cp(cp);
    return utf8_encode(cps);
}

std::string TruecaseModel::lookup(const std::string& lowercased) const {
    auto it = table_.find(lowercased);
    return it == table_.end() ? std::string() : it->second.surface;
}

void TruecaseModel::observe(const std::string& surface, int64_t count) {
    std::string key = lowercase(surface);
    auto it = table_.find(key);
    if (it == table_.end()) {
        table_[key] = Entry{surface, count};
        return;
    }
    Entry& e = it->second;
    if (count > e.count || (count == e.count && surface < e.surface)) {
        e = Entry{surface, count};
    }
}

std::string TruecaseModel::serialize() const {
    std::string out;
    for (const auto& [key, entry] : table_) {
        out += entry.surface;
        out += '\t';
        out += std::to_string(entry.count);
        out += '\n';
    }
    return out;
}

TruecaseModel TruecaseModel::deserialize(const std::string& text) {
    TruecaseModel model;
    for (const auto& line : split_on(text, '\n')) {
        if (line.empty()) continue;
        auto fields = split_on(line, '\t');
        if (fields.size() != 2)
            throw TextprocError("malformed truecase entry: " + line);
        model.observe(fields[0], std::stoll(fields[1]));
    }
    return model;
}

bool TruecaseModel::same_mapping(const TruecaseModel& other) const {
    if (table_.size() != other.table_.size()) return false;
    auto a = table_.begin();
    auto b = other.table_.begin();
    for (; a != table_.end(); ++a, ++b) {
        if (a->first != b->first || a->second.surface != b->second.surface) return false;
    }
    return true;
}

TruecaseModel truecase_train(const std::vector<TokenSeq>& corpus) {
    // surface counts per lowercased key, sentence-initial tokens excluded
    std::map<std::string, std::map<std::string, int64_t>> counts;
    for (const auto& seq : corpus) {
        size_t i = 0;
        while (i < seq.size() && is_style_tag(seq[i])) ++i;  // tags never counted
        if (i < seq.size()) ++i;                             // skip sentence-initial token
        for (; i < seq.size(); ++i) {
            if (is_style_tag(seq[i])) continue;
            counts[lowercase(seq[i])][seq[i]] += 1;
        }
    }
    TruecaseModel model;
    for (const auto& [key, surfaces] : counts) {
        for (const auto& [surface, count] : surfaces) model.observe(surface, count);
    }
    return model;
}

TokenSeq truecase_apply(const TruecaseModel& model, const TokenSeq& seq) {
    if (seq.empty() || is_style_tag(seq[0])) return seq;
    TokenSeq out = seq;
    std::string key = lowercase(out[0]);
    std::string surface = model.lookup(key);
    out[0] = surface.empty() ? key : surface;
    return out;
}

TokenSeq detruecase(const TokenSeq& seq) {
    if (seq.empty()) return seq;
    TokenSeq out = seq;
    std::vector<char32_t> cps = utf8_decode(out[0]);
    for (auto& cp : cps) {
        if (is_letter(cp)) {
            cp = upper_cp(cp);
            break;
        }
    }
    out[0] = utf8_encode(cps);
    return out;
}

}  // namespace stylemt
