#include "ofsim/toml_lite.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

namespace ofsim::toml {

namespace {

using nlohmann::json;

class Parser {
public:
    explicit Parser(const std::string& text) : s_(text) {}

    json run()
    {
        json root = json::object();
        json* table = &root;
        while (true) {
            skip_ws_comments_newlines();
            if (eof()) break;
            if (peek() == '[') {
                table = parse_header(root);
            } else {
                parse_keyval(*table);
            }
            end_of_line();
        }
        return root;
    }

private:
    const std::string& s_;
    std::size_t pos_ = 0;
    int line_ = 1;

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(line_, what); }
    bool eof() const { return pos_ >= s_.size(); }
    char peek(std::size_t ahead = 0) const { return pos_ + ahead < s_.size() ? s_[pos_ + ahead] : '\0'; }
    char get()
    {
        const char c = s_[pos_++];
        if (c == '\n') ++line_;
        return c;
    }

    void skip_ws()
    {
        while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
    }
    void skip_comment()
    {
        if (peek() == '#')
            while (!eof() && peek() != '\n') ++pos_;
    }
    void skip_ws_comments_newlines()
    {
        while (!eof()) {
            skip_ws();
            skip_comment();
            if (peek() == '\r' && peek(1) == '\n') ++pos_;
            if (peek() == '\n')
                get();
            else
                break;
        }
    }
    void end_of_line()
    {
        skip_ws();
        skip_comment();
        if (peek() == '\r') ++pos_;
        if (eof()) return;
        if (peek() != '\n') fail("unexpected trailing characters");
        get();
    }

    static bool bare_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }

    std::string parse_simple_key()
    {
        if (peek() == '"') return parse_basic_string();
        if (peek() == '\'') return parse_literal_string();
        std::string key;
        while (!eof() && bare_char(peek())) key += get();
        if (key.empty()) fail("expected a key");
        return key;
    }

    std::vector<std::string> parse_key()
    {
        std::vector<std::string> parts;
        while (true) {
            skip_ws();
            parts.push_back(parse_simple_key());
            skip_ws();
            if (peek() != '.') break;
            get();
        }
        return parts;
    }

    json* descend(json& base, const std::vector<std::string>& path, std::size_t count)
    {
        json* t = &base;
        for (std::size_t i = 0; i < count; ++i) {
            json& next = (*t)[path[i]];
            if (next.is_null()) next = json::object();
            if (next.is_array() && !next.empty() && next.back().is_object())
                t = &next.back();
            else if (next.is_object())
                t = &next;
            else
                fail("key '" + path[i] + "' is not a table");
        }
        return t;
    }

    json* parse_header(json& root)
    {
        get();
        const bool array_table = peek() == '[';
        if (array_table) get();
        const auto path = parse_key();
        skip_ws();
        if (get() != ']') fail("expected ']' after table name");
        if (array_table && get() != ']') fail("expected ']]' after array-of-tables name");
        json* parent = descend(root, path, path.size() - 1);
        json& slot = (*parent)[path.back()];
        if (array_table) {
            if (slot.is_null()) slot = json::array();
            if (!slot.is_array()) fail("'" + path.back() + "' is not an array of tables");
            slot.push_back(json::object());
            return &slot.back();
        }
        if (slot.is_null()) slot = json::object();
        if (!slot.is_object()) fail("'" + path.back() + "' is already defined as a value");
        return &slot;
    }

    void parse_keyval(json& table)
    {
        const auto path = parse_key();
        skip_ws();
        if (get() != '=') fail("expected '=' after key");
        skip_ws();
        json value = parse_value();
        json* t = descend(table, path, path.size() - 1);
        if (t->contains(path.back())) fail("duplicate key '" + path.back() + "'");
        (*t)[path.back()] = std::move(value);
    }

    json parse_value()
    {
        const char c = peek();
        if (c == '"') return parse_basic_string();
        if (c == '\'') return parse_literal_string();
        if (c == '[') return parse_array();
        if (c == '{') return parse_inline_table();
        if (s_.compare(pos_, 4, "true") == 0 && !bare_char(peek(4))) {
            pos_ += 4;
            return true;
        }
        if (s_.compare(pos_, 5, "false") == 0 && !bare_char(peek(5))) {
            pos_ += 5;
            return false;
        }
        return parse_number();
    }

    std::string parse_basic_string()
    {
        get();
        std::string out;
        while (true) {
            if (eof() || peek() == '\n') fail("unterminated string");
            char c = get();
            if (c == '"') break;
            if (c == '\\') {
                const char e = get();
                switch (e) {
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case 'r': out += '\r'; break;
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    default: fail(std::string("unsupported escape '\\") + e + "'");
                }
            } else {
                out += c;
            }
        }
        return out;
    }

    std::string parse_literal_string()
    {
        get();
        std::string out;
        while (true) {
            if (eof() || peek() == '\n') fail("unterminated string");
            const char c = get();
            if (c == '\'') break;
            out += c;
        }
        return out;
    }

    json parse_array()
    {
        get();
        json arr = json::array();
        while (true) {
            skip_ws_comments_newlines();
            if (peek() == ']') {
                get();
                return arr;
            }
            arr.push_back(parse_value());
            skip_ws_comments_newlines();
            if (peek() == ',') {
                get();
                continue;
            }
            if (peek() == ']') {
                get();
                return arr;
            }
            fail("expected ',' or ']' in array");
        }
    }

    json parse_inline_table()
    {
        get();
        json t = json::object();
        skip_ws();
        if (peek() == '}') {
            get();
            return t;
        }
        while (true) {
            parse_keyval(t);
            skip_ws();
            const char c = get();
            if (c == '}') return t;
            if (c != ',') fail("expected ',' or '}' in inline table");
            skip_ws();
        }
    }

    json parse_number()
    {
        std::string tok;
        while (!eof() && (bare_char(peek()) || peek() == '+' || peek() == '.')) tok += get();
        if (tok.empty()) fail("expected a value");
        std::string clean;
        for (std::size_t i = 0; i < tok.size(); ++i) {
            if (tok[i] == '_') {
                if (i == 0 || i + 1 == tok.size() || !std::isdigit(static_cast<unsigned char>(tok[i - 1])) ||
                    !std::isdigit(static_cast<unsigned char>(tok[i + 1])))
                    fail("misplaced '_' in number '" + tok + "'");
                continue;
            }
            clean += tok[i];
        }
        std::string body = clean;
        double sign = 1.0;
        if (!body.empty() && (body[0] == '+' || body[0] == '-')) {
            if (body[0] == '-') sign = -1.0;
            body.erase(0, 1);
        }
        if (body == "inf") return sign * std::numeric_limits<double>::infinity();
        if (body == "nan") return std::numeric_limits<double>::quiet_NaN();

        const bool is_float = clean.find_first_of(".eE") != std::string::npos;
        std::size_t used = 0;
        try {
            if (is_float) {
                const double v = std::stod(clean, &used);
                if (used == clean.size()) return v;
            } else {
                const long long v = std::stoll(clean, &used, 10);
                if (used == clean.size()) return v;
            }
        } catch (const std::exception&) {
        }
        fail("invalid value '" + tok + "'");
    }
};

}  // namespace

nlohmann::json parse(const std::string& text) { return Parser(text).run(); }

nlohmann::json parse_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse(ss.str());
    } catch (const ParseError& e) {
        throw Error(path + ", " + e.what());
    }
}

}  // namespace ofsim::toml
