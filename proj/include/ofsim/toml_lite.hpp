#pragma once

#include <string>

#include <json.hpp>

#include "ofsim/common.hpp"

namespace ofsim::toml {

/// Parse error carrying the 1-based line of the offending input.
class ParseError : public Error {
public:
    ParseError(int line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line)
    {
    }
    int line() const { return line_; }

private:
    int line_;
};

/// Parses the subset of TOML used by experiment configs into a JSON tree:
/// tables, arrays of tables, dotted keys, strings, integers, floats,
/// booleans, (multi-line) arrays and inline tables. Dates are not supported.
nlohmann::json parse(const std::string& text);
nlohmann::json parse_file(const std::string& path);

}  // namespace ofsim::toml
