/*
 * toml.hpp: reader for the subset of TOML used by measure and experiment files
 *
 * Supported: comments, [table] and [[array.of.tables]] headers, dotted and
 * quoted keys, basic and literal strings, integers, floats (including inf and
 * nan), booleans, arrays (may span lines) and inline tables. Not supported:
 * multi-line strings, dates, hex/octal/binary integers.
 *
 * Tables keep insertion order. Errors carry the source name and line.
 */
#pragma once

#include "spectral_lab/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace spectral_lab::toml {

struct Value;

class Table {
  public:
    const Value* find(std::string_view key) const;
    Value* find(std::string_view key);
    Value& insert(std::string key, Value v);

    const std::vector<std::string>& keys() const { return keys_; }
    std::size_t size() const { return keys_.size(); }
    const Value& at(std::size_t i) const { return *values_[i]; }

  private:
    std::vector<std::string> keys_;
    std::vector<std::unique_ptr<Value>> values_;
};

using Array = std::vector<Value>;

struct Value {
    std::variant<bool, std::int64_t, double, std::string, Array, Table> data;
    int line = 0;

    bool is_table() const { return std::holds_alternative<Table>(data); }
    bool is_array() const { return std::holds_alternative<Array>(data); }
    bool is_string() const { return std::holds_alternative<std::string>(data); }
    bool is_number() const {
        return std::holds_alternative<double>(data) || std::holds_alternative<std::int64_t>(data);
    }
    bool is_integer() const { return std::holds_alternative<std::int64_t>(data); }
    bool is_bool() const { return std::holds_alternative<bool>(data); }

    const Table& table() const { return std::get<Table>(data); }
    Table& table() { return std::get<Table>(data); }
    const Array& array() const { return std::get<Array>(data); }
    Array& array() { return std::get<Array>(data); }
    const std::string& string() const { return std::get<std::string>(data); }
    std::int64_t integer() const { return std::get<std::int64_t>(data); }
    bool boolean() const { return std::get<bool>(data); }
    double number() const {
        if (const auto* i = std::get_if<std::int64_t>(&data))
            return static_cast<double>(*i);
        return std::get<double>(data);
    }

    std::string_view type_name() const {
        static constexpr std::string_view names[] = {"boolean", "integer", "float",
                                                     "string",  "array",   "table"};
        return names[data.index()];
    }
};

inline const Value* Table::find(std::string_view key) const {
    for (std::size_t i = 0; i < keys_.size(); ++i)
        if (keys_[i] == key)
            return values_[i].get();
    return nullptr;
}

inline Value* Table::find(std::string_view key) {
    return const_cast<Value*>(static_cast<const Table&>(*this).find(key));
}

inline Value& Table::insert(std::string key, Value v) {
    keys_.push_back(std::move(key));
    values_.push_back(std::make_unique<Value>(std::move(v)));
    return *values_.back();
}

namespace detail {

class Parser {
  public:
    Parser(std::string_view text, std::string source) : text_(text), source_(std::move(source)) {}

    Table parse() {
        Table root;
        Table* current = &root;
        while (true) {
            skip_blank_lines();
            if (at_end())
                break;
            if (peek() == '[') {
                current = header(root);
            } else {
                key_value(*current);
            }
            end_of_line();
        }
        return root;
    }

  private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(source_ + ":" + std::to_string(line_) + ": " + what);
    }

    bool at_end() const { return pos_ >= text_.size(); }
    char peek(std::size_t ahead = 0) const {
        return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
    }
    char get() {
        const char c = text_[pos_++];
        if (c == '\n')
            ++line_;
        return c;
    }

    void skip_spaces() {
        while (!at_end() && (peek() == ' ' || peek() == '\t'))
            ++pos_;
    }
    void skip_comment() {
        if (peek() == '#')
            while (!at_end() && peek() != '\n')
                ++pos_;
    }
    void skip_blank_lines() {
        while (!at_end()) {
            skip_spaces();
            skip_comment();
            if (peek() == '\r')
                ++pos_;
            if (peek() == '\n')
                get();
            else
                break;
        }
    }
    // whitespace, newlines and comments, as allowed inside arrays
    void skip_all() {
        while (!at_end()) {
            skip_spaces();
            skip_comment();
            if (peek() == '\n' || peek() == '\r')
                get();
            else
                break;
        }
    }
    void end_of_line() {
        skip_spaces();
        skip_comment();
        if (peek() == '\r')
            ++pos_;
        if (!at_end() && peek() != '\n')
            fail(std::string("unexpected character '") + peek() + "' after value");
    }
    void expect(char c) {
        if (peek() != c)
            fail(std::string("expected '") + c + "'");
        get();
    }

    static bool bare_key_char(char c) {
        return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' ||
               c == '-';
    }

    std::vector<std::string> key_path() {
        std::vector<std::string> path;
        while (true) {
            skip_spaces();
            if (peek() == '"') {
                path.push_back(basic_string());
            } else if (peek() == '\'') {
                path.push_back(literal_string());
            } else {
                const std::size_t start = pos_;
                while (!at_end() && bare_key_char(peek()))
                    ++pos_;
                if (pos_ == start)
                    fail("expected a key");
                path.emplace_back(text_.substr(start, pos_ - start));
            }
            skip_spaces();
            if (peek() != '.')
                return path;
            ++pos_;
        }
    }

    static std::string join(const std::vector<std::string>& path) {
        std::string out;
        for (const auto& p : path)
            out += (out.empty() ? "" : ".") + p;
        return out;
    }

    // Walks to (creating) the table at path; arrays of tables resolve to their
    // last element.
    Table* descend(Table& root, const std::vector<std::string>& path, std::size_t count) {
        Table* t = &root;
        for (std::size_t i = 0; i < count; ++i) {
            Value* v = t->find(path[i]);
            if (v == nullptr)
                v = &t->insert(path[i], Value{Table{}, line_});
            if (v->is_array() && !v->array().empty() && v->array().back().is_table())
                t = &v->array().back().table();
            else if (v->is_table())
                t = &v->table();
            else
                fail("key '" + path[i] + "' is a " + std::string(v->type_name()) + ", not a table");
        }
        return t;
    }

    Table* header(Table& root) {
        get(); // [
        const bool array_of_tables = peek() == '[';
        if (array_of_tables)
            get();
        const auto path = key_path();
        expect(']');
        if (array_of_tables)
            expect(']');
        const std::string name = join(path);
        Table* parent = descend(root, path, path.size() - 1);
        Value* existing = parent->find(path.back());
        if (array_of_tables) {
            const bool ours = std::find(defined_arrays_.begin(), defined_arrays_.end(), name) != defined_arrays_.end();
            if (existing == nullptr) {
                existing = &parent->insert(path.back(), Value{Array{}, line_});
                defined_arrays_.push_back(name);
            } else if (!ours) {
                fail("[[" + name + "]] conflicts with an earlier definition");
            }
            existing->array().push_back(Value{Table{}, line_});
            return &existing->array().back().table();
        }
        if (std::find(defined_tables_.begin(), defined_tables_.end(), name) != defined_tables_.end())
            fail("table [" + name + "] defined twice");
        defined_tables_.push_back(name);
        if (existing == nullptr)
            return &parent->insert(path.back(), Value{Table{}, line_}).table();
        if (!existing->is_table())
            fail("[" + name + "] conflicts with an earlier " + std::string(existing->type_name()));
        return &existing->table();
    }

    void key_value(Table& table) {
        const int line = line_;
        const auto path = key_path();
        expect('=');
        skip_spaces();
        Value v = value();
        v.line = line;
        Table* t = descend(table, path, path.size() - 1);
        if (t->find(path.back()) != nullptr)
            fail("duplicate key '" + join(path) + "'");
        t->insert(path.back(), std::move(v));
    }

    Value value() {
        const int line = line_;
        const char c = peek();
        if (c == '"') {
            if (peek(1) == '"' && peek(2) == '"')
                fail("multi-line strings are not supported");
            return {basic_string(), line};
        }
        if (c == '\'')
            return {literal_string(), line};
        if (c == '[')
            return {array(), line};
        if (c == '{')
            return {inline_table(), line};
        if (text_.substr(pos_, 4) == "true" && !bare_key_char(peek(4))) {
            pos_ += 4;
            return {true, line};
        }
        if (text_.substr(pos_, 5) == "false" && !bare_key_char(peek(5))) {
            pos_ += 5;
            return {false, line};
        }
        return number();
    }

    static void append_utf8(std::string& out, std::uint32_t cp) {
        if (cp < 0x80) {
            out += static_cast<char>(cp);
        } else if (cp < 0x800) {
            out += static_cast<char>(0xC0 | (cp >> 6));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else if (cp < 0x10000) {
            out += static_cast<char>(0xE0 | (cp >> 12));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else {
            out += static_cast<char>(0xF0 | (cp >> 18));
            out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        }
    }

    std::string basic_string() {
        get(); // "
        std::string out;
        while (true) {
            if (at_end() || peek() == '\n')
                fail("unterminated string");
            const char c = get();
            if (c == '"')
                return out;
            if (c != '\\') {
                out += c;
                continue;
            }
            const char e = at_end() ? '\0' : get();
            switch (e) {
            case 'b': out += '\b'; break;
            case 't': out += '\t'; break;
            case 'n': out += '\n'; break;
            case 'f': out += '\f'; break;
            case 'r': out += '\r'; break;
            case '"': out += '"'; break;
            case '\\': out += '\\'; break;
            case 'u':
            case 'U': {
                const std::size_t digits = e == 'u' ? 4 : 8;
                if (pos_ + digits > text_.size())
                    fail("truncated unicode escape");
                std::uint32_t cp = 0;
                const auto hex = text_.substr(pos_, digits);
                const auto res = std::from_chars(hex.data(), hex.data() + digits, cp, 16);
                if (res.ec != std::errc() || res.ptr != hex.data() + digits)
                    fail("bad unicode escape");
                pos_ += digits;
                append_utf8(out, cp);
                break;
            }
            default:
                fail(std::string("unknown escape '\\") + e + "'");
            }
        }
    }

    std::string literal_string() {
        get(); // '
        const std::size_t start = pos_;
        while (!at_end() && peek() != '\'' && peek() != '\n')
            ++pos_;
        if (peek() != '\'')
            fail("unterminated literal string");
        std::string out(text_.substr(start, pos_ - start));
        ++pos_;
        return out;
    }

    Array array() {
        get(); // [
        Array out;
        while (true) {
            skip_all();
            if (peek() == ']') {
                get();
                return out;
            }
            if (at_end())
                fail("unterminated array");
            out.push_back(value());
            skip_all();
            if (peek() == ',') {
                get();
            } else if (peek() != ']') {
                fail("expected ',' or ']' in array");
            }
        }
    }

    Table inline_table() {
        get(); // {
        Table out;
        skip_spaces();
        if (peek() == '}') {
            get();
            return out;
        }
        while (true) {
            key_value(out);
            skip_spaces();
            if (peek() == '}') {
                get();
                return out;
            }
            expect(',');
        }
    }

    Value number() {
        const int line = line_;
        const std::size_t start = pos_;
        while (!at_end() && (bare_key_char(peek()) || peek() == '+' || peek() == '.'))
            ++pos_;
        std::string_view raw = text_.substr(start, pos_ - start);
        if (raw.empty())
            fail("expected a value");
        std::string token;
        for (std::size_t i = 0; i < raw.size(); ++i) {
            if (raw[i] == '_') {
                const bool ok = i > 0 && i + 1 < raw.size() && std::isdigit(static_cast<unsigned char>(raw[i - 1])) &&
                                std::isdigit(static_cast<unsigned char>(raw[i + 1]));
                if (!ok)
                    fail("misplaced '_' in number '" + std::string(raw) + "'");
                continue;
            }
            token += raw[i];
        }
        std::string_view body = token;
        double sign = 1.0;
        if (!body.empty() && (body[0] == '+' || body[0] == '-')) {
            sign = body[0] == '-' ? -1.0 : 1.0;
            body.remove_prefix(1);
        }
        if (body == "inf")
            return {sign * std::numeric_limits<double>::infinity(), line};
        if (body == "nan")
            return {std::numeric_limits<double>::quiet_NaN(), line};
        if (body.empty() || !std::isdigit(static_cast<unsigned char>(body[0])))
            fail("invalid value '" + std::string(raw) + "'");
        if (body.size() > 1 && body[0] == '0' && std::isdigit(static_cast<unsigned char>(body[1])))
            fail("leading zeros are not allowed in '" + std::string(raw) + "'");
        const char* first = token.data() + (token[0] == '+' ? 1 : 0);
        const char* last = token.data() + token.size();
        if (token.find_first_of(".eE") == std::string::npos) {
            std::int64_t i = 0;
            const auto res = std::from_chars(first, last, i);
            if (res.ec != std::errc() || res.ptr != last)
                fail("invalid integer '" + std::string(raw) + "'");
            return {i, line};
        }
        const auto dot = token.find('.');
        if (dot != std::string::npos &&
            (dot + 1 >= token.size() || !std::isdigit(static_cast<unsigned char>(token[dot + 1]))))
            fail("a '.' must be followed by digits in '" + std::string(raw) + "'");
        double d = 0.0;
        const auto res = std::from_chars(first, last, d);
        if (res.ec != std::errc() || res.ptr != last)
            fail("invalid float '" + std::string(raw) + "'");
        return {d, line};
    }

    std::string_view text_;
    std::string source_;
    std::size_t pos_ = 0;
    int line_ = 1;
    std::vector<std::string> defined_tables_;
    std::vector<std::string> defined_arrays_;
};

} // namespace detail

inline Table parse(std::string_view text, std::string source = "<string>") {
    return detail::Parser(text, std::move(source)).parse();
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot read '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad())
        throw IoError("error while reading '" + path + "'");
    return buf.str();
}

inline Table parse_file(const std::string& path) { return parse(read_file(path), path); }

/// Shortest text that reads back to exactly v, always recognisable as a float.
inline std::string format_float(double v) {
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    std::string out(buf, res.ptr);
    if (out.find_first_of(".e") == std::string::npos)
        out += ".0";
    else if (const auto e = out.find('e'); e != std::string::npos && out.find('.') == std::string::npos)
        out.insert(e, ".0");
    return out;
}

inline std::string quote(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default: out += c;
        }
    }
    return out + "\"";
}

} // namespace spectral_lab::toml
