#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace goalgen {

// Kinds of terms a variable (or predicate argument slot) can range over.
// Objects are the common case; colors, orientations and sides are separate
// vocabularies that are not interchangeable with objects.
enum class TermClass : uint8_t { Object, ColorClass, OrientationClass, SideClass };

// What a predicate/function argument slot accepts.
enum class ArgKind : uint8_t {
  Object,         // object name or object variable
  Side,           // side literal or side variable
  ColorOrObject,  // second argument of same_color
  ColorLiteral,   // color literal or color variable
  Orientation,    // orientation literal or orientation variable
  TypeTerm,       // type name or object variable (same_type)
};

struct PredicateSig {
  std::string_view name;
  std::vector<std::vector<ArgKind>> arities;  // each entry is one accepted argument list
  bool implemented;                           // evaluable against traces
  bool in_database;                           // indexed when building the play trace database
};

struct FunctionSig {
  std::string_view name;
  std::vector<std::vector<ArgKind>> arities;
  bool implemented;
};

// Coarse object groupings used by behavioral characteristics, the play trace
// database keys, and the dataset analyses.
enum class Category : uint8_t {
  Balls,
  Blocks,  // includes buildings
  Furniture,
  LargeObjects,
  Ramps,
  Receptacles,
  RoomFeatures,
  SmallObjects,
  AnyObject,  // game_object itself
  Agent,
  Color,
  Orientation,
  Side,
};

const std::vector<PredicateSig>& predicate_table();
const PredicateSig* find_predicate(std::string_view name);
const std::vector<FunctionSig>& function_table();
const FunctionSig* find_function(std::string_view name);

// Object type hierarchy. parent_type returns nullopt for roots
// (game_object, building, agent and the non-object vocabularies).
bool is_known_type(std::string_view type);
std::optional<std::string_view> parent_type(std::string_view type);
// type plus all its ancestors, most specific first
std::vector<std::string_view> type_ancestry(std::string_view type);
// does `type` equal `ancestor` or descend from it
bool type_is_a(std::string_view type, std::string_view ancestor);
const std::vector<std::string_view>& all_object_types();
std::vector<std::string_view> subtypes_of(std::string_view type);

std::optional<Category> category_of_type(std::string_view type);

// The small list of objects that can be referred to directly by name,
// including the agent. For each, its type equals its name.
const std::vector<std::string_view>& object_name_tokens();
bool is_object_name(std::string_view token);

const std::vector<std::string_view>& color_tokens();
const std::vector<std::string_view>& orientation_tokens();
const std::vector<std::string_view>& side_tokens();

bool is_color_token(std::string_view token);
bool is_orientation_token(std::string_view token);
bool is_side_token(std::string_view token);

// Lexical classification of variables: ?x... are colors, ?y... orientations,
// ?z... sides, and ?a..?w (plus trailing letters/digits) are objects.
std::optional<TermClass> classify_variable(std::string_view var);
bool is_number_token(std::string_view token);

}  // namespace goalgen
