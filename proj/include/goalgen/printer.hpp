#pragma once

#include <string>

#include "goalgen/ast.hpp"

namespace goalgen {

// Canonical single-line form: one space between tokens, no space adjacent to
// parentheses, sections in setup/constraints/terminal/scoring order. Parsing
// the output reproduces the same tree, and printing is byte-stable.
std::string print_game(const GameAst& game);

// Canonical form of any subtree.
std::string print_node(const Node& node);

// Pre-order token sequence for the n-gram models: structural keywords plus
// predicate/function/type names, with variables replaced by their class token
// and preference names by a placeholder.
std::vector<std::string> tokenize_node(const Node& node);
std::vector<std::string> tokenize_game(const GameAst& game);

}  // namespace goalgen
