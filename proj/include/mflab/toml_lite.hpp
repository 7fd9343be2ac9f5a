#pragma once

// Minimal TOML-subset reader producing a JSON document, sufficient for the
// experiment config schema: comments, [table] and [a.b] headers, bare and
// dotted keys, basic "..." strings with common escapes, integers, floats
// (inf/nan included), booleans, and homogeneous arrays including arrays of
// arrays, which may span lines until their brackets balance. Datetimes,
// inline tables, arrays-of-tables, and literal strings are out of scope and
// rejected with a line-numbered error.

#include <cctype>
#include <istream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace mflab::toml {

namespace detail {

[[noreturn]] inline void fail(int line, const std::string& what) {
    throw std::runtime_error("toml parse error, line " + std::to_string(line) + ": " + what);
}

inline void skip_ws(const std::string& s, size_t& i) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
}

// strip a trailing comment that starts outside any string
inline std::string strip_comment(const std::string& s, int line) {
    std::string out;
    bool in_str = false;
    for (size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (in_str) {
            out += c;
            if (c == '\\') {
                if (i + 1 >= s.size()) fail(line, "dangling escape");
                out += s[++i];
            } else if (c == '"') {
                in_str = false;
            }
            continue;
        }
        if (c == '#') break;
        if (c == '"') in_str = true;
        out += c;
    }
    if (in_str) fail(line, "unterminated string");
    return out;
}

inline int bracket_balance(const std::string& s) {
    int depth = 0;
    bool in_str = false;
    for (size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (in_str) {
            if (c == '\\') ++i;
            else if (c == '"') in_str = false;
            continue;
        }
        if (c == '"') in_str = true;
        else if (c == '[') ++depth;
        else if (c == ']') --depth;
    }
    return depth;
}

inline std::string parse_basic_string(const std::string& s, size_t& i, int line) {
    std::string out;
    ++i;  // opening quote
    while (i < s.size() && s[i] != '"') {
        char c = s[i++];
        if (c == '\\') {
            if (i >= s.size()) fail(line, "dangling escape");
            const char e = s[i++];
            switch (e) {
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case 'r': out += '\r'; break;
                default: fail(line, std::string("unsupported escape \\") + e);
            }
        } else {
            out += c;
        }
    }
    if (i >= s.size()) fail(line, "unterminated string");
    ++i;  // closing quote
    return out;
}

inline nlohmann::json parse_value(const std::string& s, size_t& i, int line);

inline nlohmann::json parse_array(const std::string& s, size_t& i, int line) {
    nlohmann::json arr = nlohmann::json::array();
    ++i;  // opening bracket
    skip_ws(s, i);
    if (i < s.size() && s[i] == ']') {
        ++i;
        return arr;
    }
    while (true) {
        arr.push_back(parse_value(s, i, line));
        skip_ws(s, i);
        if (i < s.size() && s[i] == ',') {
            ++i;
            skip_ws(s, i);
            if (i < s.size() && s[i] == ']') {  // trailing comma
                ++i;
                return arr;
            }
            continue;
        }
        if (i < s.size() && s[i] == ']') {
            ++i;
            return arr;
        }
        fail(line, "expected ',' or ']' in array");
    }
}

inline nlohmann::json parse_value(const std::string& s, size_t& i, int line) {
    skip_ws(s, i);
    if (i >= s.size()) fail(line, "missing value");
    const char c = s[i];
    if (c == '"') return parse_basic_string(s, i, line);
    if (c == '[') return parse_array(s, i, line);

    size_t end = i;
    while (end < s.size() && s[end] != ',' && s[end] != ']' && s[end] != ' ' && s[end] != '\t') ++end;
    std::string tok = s.substr(i, end - i);
    i = end;
    if (tok == "true") return true;
    if (tok == "false") return false;
    if (tok.empty()) fail(line, "missing value");

    std::string plain;
    for (char ch : tok)
        if (ch != '_') plain += ch;
    const bool has_frac = plain.find_first_of(".eEinfa") != std::string::npos;
    try {
        size_t used = 0;
        if (!has_frac) {
            const long long v = std::stoll(plain, &used);
            if (used == plain.size()) return v;
        }
        double d;
        if (plain == "inf" || plain == "+inf") d = std::numeric_limits<double>::infinity();
        else if (plain == "-inf") d = -std::numeric_limits<double>::infinity();
        else if (plain == "nan" || plain == "+nan" || plain == "-nan")
            d = std::numeric_limits<double>::quiet_NaN();
        else {
            d = std::stod(plain, &used);
            if (used != plain.size()) fail(line, "bad value token: " + tok);
        }
        return d;
    } catch (const std::invalid_argument&) {
        fail(line, "bad value token: " + tok);
    } catch (const std::out_of_range&) {
        fail(line, "number out of range: " + tok);
    }
}

inline std::vector<std::string> split_key(const std::string& s, int line) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == '.') {
            if (cur.empty()) fail(line, "empty key segment");
            parts.push_back(cur);
            cur.clear();
        } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') {
            cur += c;
        } else if (c == ' ' || c == '\t') {
            continue;
        } else {
            fail(line, std::string("bad key character '") + c + "'");
        }
    }
    if (cur.empty()) fail(line, "empty key segment");
    parts.push_back(cur);
    return parts;
}

}  // namespace detail

inline nlohmann::json parse(std::istream& is) {
    nlohmann::json root = nlohmann::json::object();
    nlohmann::json* table = &root;
    std::string raw;
    int line_no = 0;
    while (std::getline(is, raw)) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        std::string line = detail::strip_comment(raw, line_no);
        // pull in continuation lines while an array is open
        while (detail::bracket_balance(line) > 0) {
            std::string more;
            if (!std::getline(is, more)) detail::fail(line_no, "unterminated array");
            ++line_no;
            if (!more.empty() && more.back() == '\r') more.pop_back();
            line += ' ';
            line += detail::strip_comment(more, line_no);
        }
        size_t i = 0;
        detail::skip_ws(line, i);
        if (i >= line.size()) continue;

        if (line[i] == '[') {
            const size_t close = line.find(']', i);
            if (close == std::string::npos) detail::fail(line_no, "unterminated table header");
            if (line.compare(i, 2, "[[") == 0) detail::fail(line_no, "arrays of tables unsupported");
            std::string inner = line.substr(i + 1, close - i - 1);
            size_t rest = close + 1;
            detail::skip_ws(line, rest);
            if (rest != line.size()) detail::fail(line_no, "trailing content after table header");
            table = &root;
            for (const std::string& part : detail::split_key(inner, line_no)) {
                nlohmann::json& next = (*table)[part];
                if (next.is_null()) next = nlohmann::json::object();
                if (!next.is_object()) detail::fail(line_no, "table path collides with a value: " + part);
                table = &next;
            }
            continue;
        }

        const size_t eq = line.find('=', i);
        if (eq == std::string::npos) detail::fail(line_no, "expected key = value");
        std::vector<std::string> key = detail::split_key(line.substr(i, eq - i), line_no);
        size_t vi = eq + 1;
        nlohmann::json value = detail::parse_value(line, vi, line_no);
        detail::skip_ws(line, vi);
        if (vi != line.size()) detail::fail(line_no, "trailing content after value");

        nlohmann::json* slot = table;
        for (size_t k = 0; k + 1 < key.size(); ++k) {
            nlohmann::json& next = (*slot)[key[k]];
            if (next.is_null()) next = nlohmann::json::object();
            if (!next.is_object()) detail::fail(line_no, "key path collides with a value: " + key[k]);
            slot = &next;
        }
        if (slot->contains(key.back())) detail::fail(line_no, "duplicate key: " + key.back());
        (*slot)[key.back()] = std::move(value);
    }
    return root;
}

inline nlohmann::json parse_string(const std::string& text) {
    std::istringstream is(text);
    return parse(is);
}

}  // namespace mflab::toml
