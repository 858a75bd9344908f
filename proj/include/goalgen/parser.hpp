#pragma once

#include <stdexcept>
#include <string>

#include "goalgen/ast.hpp"

namespace goalgen {

struct ParseError : std::runtime_error {
  int line;
  int column;
  ParseError(std::string message, int line_, int column_)
      : std::runtime_error(std::move(message)), line(line_), column(column_) {}
};

// Parses a full game program. Comments run from ';' to end of line.
// Throws ParseError with position information on malformed input.
GameAst parse_game(const std::string& text);

// Parses the text of a single (preference ...) form, for fixtures and tests.
NodePtr parse_preference(const std::string& text);

}  // namespace goalgen
