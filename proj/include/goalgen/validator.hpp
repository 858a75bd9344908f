#pragma once

#include <string>
#include <vector>

#include "goalgen/ast.hpp"

namespace goalgen {

enum class ViolationKind {
  UnknownVariable,        // a term references a variable not in scope
  UndefinedPreference,    // scoring/terminal references a preference that is not defined
  DuplicatePreference,    // two preferences share a name
  CountMeasureWithoutMeasure,  // count-measure applied to a preference with no once-measure modal
};

struct Violation {
  ViolationKind kind;
  std::string message;
  int node_id = -1;
};

// Reports constructs that are grammatical but ill-formed. A parseable game
// with no violations is safe to interpret, sample around, and score.
std::vector<Violation> validate(const GameAst& game);

}  // namespace goalgen
