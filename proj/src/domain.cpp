#include "goalgen/domain.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

namespace goalgen {

namespace {

using A = ArgKind;

std::vector<PredicateSig> make_predicates() {
  auto one = [](std::vector<A> args) { return std::vector<std::vector<A>>{std::move(args)}; };
  std::vector<PredicateSig> t;
  t.push_back({"above", one({A::Object, A::Object}), true, true});
  t.push_back({"adjacent", one({A::Object, A::Object}), true, true});
  t.push_back({"adjacent_side",
               {{A::Object, A::Side, A::Object}, {A::Object, A::Side, A::Object, A::Side}},
               false, false});
  t.push_back({"agent_crouches", one({}), true, true});
  t.push_back({"agent_holds", one({A::Object}), true, true});
  t.push_back({"between", one({A::Object, A::Object, A::Object}), false, false});
  t.push_back({"broken", one({A::Object}), true, true});
  t.push_back({"equal_x_position", one({A::Object, A::Object}), true, false});
  t.push_back({"equal_z_position", one({A::Object, A::Object}), true, false});
  t.push_back({"faces", one({A::Object, A::Object}), false, false});
  t.push_back({"game_over", one({}), true, true});
  t.push_back({"game_start", one({}), true, true});
  t.push_back({"in", one({A::Object, A::Object}), true, true});
  t.push_back({"in_motion", one({A::Object}), true, true});
  t.push_back({"is_setup_object", one({A::Object}), true, false});
  t.push_back({"near", one({A::Object, A::Object}), true, false});
  t.push_back({"object_orientation", one({A::Object, A::Orientation}), true, true});
  t.push_back({"on", one({A::Object, A::Object}), true, true});
  t.push_back({"open", one({A::Object}), true, true});
  t.push_back({"opposite", one({A::Object, A::Object}), false, false});
  t.push_back({"rug_color_under", one({A::Object, A::ColorLiteral}), false, false});
  t.push_back({"same_color", one({A::Object, A::ColorOrObject}), true, false});
  t.push_back({"same_object", one({A::Object, A::Object}), true, false});
  t.push_back({"same_type", one({A::Object, A::TypeTerm}), true, false});
  t.push_back({"toggled_on", one({A::Object}), true, true});
  t.push_back({"touch", one({A::Object, A::Object}), true, true});
  return t;
}

std::vector<FunctionSig> make_functions() {
  std::vector<FunctionSig> t;
  t.push_back({"building_size", {{A::Object}}, true});
  t.push_back({"distance", {{A::Object, A::Object}}, true});
  t.push_back({"distance_side",
               {{A::Object, A::Side, A::Object}, {A::Object, A::Side, A::Object, A::Side}},
               false});
  t.push_back({"x_position", {{A::Object}}, true});
  return t;
}

struct TypeEntry {
  std::string_view parent;  // empty for roots
  Category category;
};

const std::map<std::string_view, TypeEntry>& type_map() {
  static const std::map<std::string_view, TypeEntry> m = [] {
    std::map<std::string_view, TypeEntry> t;
    auto add = [&](std::string_view name, std::string_view parent, Category c) {
      t[name] = TypeEntry{parent, c};
    };
    add("game_object", "", Category::AnyObject);
    add("agent", "", Category::Agent);
    add("building", "", Category::Blocks);

    add("block", "game_object", Category::Blocks);
    for (std::string_view base : {"bridge_block", "cube_block", "cylindrical_block",
                                  "flat_block", "pyramid_block", "tall_cylindrical_block",
                                  "tall_rectangular_block", "triangle_block"})
      add(base, "block", Category::Blocks);
    for (std::string_view v : {"bridge_block_green", "bridge_block_pink", "bridge_block_tan"})
      add(v, "bridge_block", Category::Blocks);
    for (std::string_view v : {"cube_block_blue", "cube_block_tan", "cube_block_yellow"})
      add(v, "cube_block", Category::Blocks);
    for (std::string_view v :
         {"cylindrical_block_blue", "cylindrical_block_green", "cylindrical_block_tan"})
      add(v, "cylindrical_block", Category::Blocks);
    for (std::string_view v : {"flat_block_gray", "flat_block_tan", "flat_block_yellow"})
      add(v, "flat_block", Category::Blocks);
    for (std::string_view v : {"pyramid_block_blue", "pyramid_block_red", "pyramid_block_yellow"})
      add(v, "pyramid_block", Category::Blocks);
    for (std::string_view v : {"tall_cylindrical_block_green", "tall_cylindrical_block_tan",
                               "tall_cylindrical_block_yellow"})
      add(v, "tall_cylindrical_block", Category::Blocks);
    for (std::string_view v : {"tall_rectangular_block_blue", "tall_rectangular_block_green",
                               "tall_rectangular_block_tan"})
      add(v, "tall_rectangular_block", Category::Blocks);
    for (std::string_view v : {"triangle_block_blue", "triangle_block_green", "triangle_block_tan"})
      add(v, "triangle_block", Category::Blocks);

    add("ball", "game_object", Category::Balls);
    for (std::string_view v : {"beachball", "basketball", "dodgeball", "golfball"})
      add(v, "ball", Category::Balls);
    for (std::string_view v : {"dodgeball_blue", "dodgeball_red", "dodgeball_pink"})
      add(v, "dodgeball", Category::Balls);
    for (std::string_view v : {"golfball_green", "golfball_white"})
      add(v, "golfball", Category::Balls);

    for (std::string_view v : {"bed", "blinds", "desk", "desktop", "main_light_switch",
                               "side_table", "shelf_desk"})
      add(v, "game_object", Category::Furniture);

    for (std::string_view v : {"book", "chair", "laptop", "pillow", "teddy_bear"})
      add(v, "game_object", Category::LargeObjects);

    add("ramp", "game_object", Category::Ramps);
    add("curved_wooden_ramp", "ramp", Category::Ramps);
    add("triangular_ramp", "ramp", Category::Ramps);
    add("triangular_ramp_green", "triangular_ramp", Category::Ramps);
    add("triangular_ramp_tan", "triangular_ramp", Category::Ramps);

    for (std::string_view v : {"doggie_bed", "hexagonal_bin", "drawer"})
      add(v, "game_object", Category::Receptacles);
    add("bottom_drawer", "drawer", Category::Receptacles);
    add("top_drawer", "drawer", Category::Receptacles);

    for (std::string_view v : {"door", "floor", "mirror", "poster", "room_center", "rug",
                               "shelf", "sliding_door", "wall"})
      add(v, "game_object", Category::RoomFeatures);
    add("bottom_shelf", "shelf", Category::RoomFeatures);
    add("top_shelf", "shelf", Category::RoomFeatures);
    add("east_sliding_door", "sliding_door", Category::RoomFeatures);
    add("west_sliding_door", "sliding_door", Category::RoomFeatures);
    for (std::string_view v : {"east_wall", "north_wall", "south_wall", "west_wall"})
      add(v, "wall", Category::RoomFeatures);

    for (std::string_view v : {"alarm_clock", "cellphone", "cd", "credit_card", "key_chain",
                               "lamp", "mug", "pen", "pencil", "watch"})
      add(v, "game_object", Category::SmallObjects);

    add("color", "", Category::Color);
    for (std::string_view v : {"blue", "brown", "gray", "green", "orange", "pink", "purple",
                               "red", "tan", "white", "yellow"})
      add(v, "color", Category::Color);
    add("orientation", "", Category::Orientation);
    for (std::string_view v : {"diagonal", "sideways", "upright", "upside_down"})
      add(v, "orientation", Category::Orientation);
    add("side", "", Category::Side);
    for (std::string_view v : {"back", "front", "left", "right"})
      add(v, "side", Category::Side);
    return t;
  }();
  return m;
}

}  // namespace

const std::vector<PredicateSig>& predicate_table() {
  static const std::vector<PredicateSig> t = make_predicates();
  return t;
}

const PredicateSig* find_predicate(std::string_view name) {
  for (const auto& p : predicate_table())
    if (p.name == name) return &p;
  return nullptr;
}

const std::vector<FunctionSig>& function_table() {
  static const std::vector<FunctionSig> t = make_functions();
  return t;
}

const FunctionSig* find_function(std::string_view name) {
  for (const auto& f : function_table())
    if (f.name == name) return &f;
  return nullptr;
}

bool is_known_type(std::string_view type) { return type_map().count(type) > 0; }

std::optional<std::string_view> parent_type(std::string_view type) {
  auto it = type_map().find(type);
  if (it == type_map().end() || it->second.parent.empty()) return std::nullopt;
  return it->second.parent;
}

std::vector<std::string_view> type_ancestry(std::string_view type) {
  std::vector<std::string_view> out;
  std::string_view cur = type;
  while (is_known_type(cur)) {
    out.push_back(cur);
    auto p = parent_type(cur);
    if (!p) break;
    cur = *p;
  }
  return out;
}

bool type_is_a(std::string_view type, std::string_view ancestor) {
  for (auto t : type_ancestry(type))
    if (t == ancestor) return true;
  return false;
}

const std::vector<std::string_view>& all_object_types() {
  static const std::vector<std::string_view> types = [] {
    std::vector<std::string_view> out;
    for (const auto& [name, entry] : type_map()) {
      Category c = entry.category;
      if (c == Category::Color || c == Category::Orientation || c == Category::Side) continue;
      out.push_back(name);
    }
    std::sort(out.begin(), out.end());
    return out;
  }();
  return types;
}

std::vector<std::string_view> subtypes_of(std::string_view type) {
  std::vector<std::string_view> out;
  for (auto t : all_object_types())
    if (type_is_a(t, type)) out.push_back(t);
  return out;
}

std::optional<Category> category_of_type(std::string_view type) {
  auto it = type_map().find(type);
  if (it == type_map().end()) return std::nullopt;
  return it->second.category;
}

const std::vector<std::string_view>& object_name_tokens() {
  static const std::vector<std::string_view> names = {
      "agent",         "bed",           "desk",
      "door",          "floor",         "main_light_switch",
      "mirror",        "room_center",   "rug",
      "side_table",    "bottom_drawer", "bottom_shelf",
      "east_sliding_door", "east_wall", "north_wall",
      "south_wall",    "top_drawer",    "top_shelf",
      "west_sliding_door", "west_wall"};
  return names;
}

bool is_object_name(std::string_view token) {
  const auto& names = object_name_tokens();
  return std::find(names.begin(), names.end(), token) != names.end();
}

const std::vector<std::string_view>& color_tokens() {
  static const std::vector<std::string_view> t = {"blue", "brown",  "gray", "green",
                                                  "orange", "pink", "purple", "red",
                                                  "tan",  "white",  "yellow"};
  return t;
}

const std::vector<std::string_view>& orientation_tokens() {
  static const std::vector<std::string_view> t = {"diagonal", "sideways", "upright", "upside_down"};
  return t;
}

const std::vector<std::string_view>& side_tokens() {
  static const std::vector<std::string_view> t = {"back", "front", "left", "right"};
  return t;
}

bool is_color_token(std::string_view token) {
  const auto& t = color_tokens();
  return std::find(t.begin(), t.end(), token) != t.end();
}

bool is_orientation_token(std::string_view token) {
  const auto& t = orientation_tokens();
  return std::find(t.begin(), t.end(), token) != t.end();
}

bool is_side_token(std::string_view token) {
  const auto& t = side_tokens();
  return std::find(t.begin(), t.end(), token) != t.end();
}

std::optional<TermClass> classify_variable(std::string_view var) {
  if (var.size() < 2 || var[0] != '?') return std::nullopt;
  char c = var[1];
  if (c == 'x' || c == 'y' || c == 'z') {
    // ?x5, ?y, ?z12: the class letter may only be followed by digits
    for (size_t i = 2; i < var.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(var[i]))) return std::nullopt;
    if (c == 'x') return TermClass::ColorClass;
    if (c == 'y') return TermClass::OrientationClass;
    return TermClass::SideClass;
  }
  if (c < 'a' || c > 'w') return std::nullopt;
  for (size_t i = 2; i < var.size(); ++i) {
    char ch = var[i];
    if (!(std::islower(static_cast<unsigned char>(ch)) || std::isdigit(static_cast<unsigned char>(ch))))
      return std::nullopt;
  }
  return TermClass::Object;
}

bool is_number_token(std::string_view token) {
  // -?\d*\.?\d+
  size_t i = 0;
  if (i < token.size() && token[i] == '-') ++i;
  size_t digits_before = 0;
  while (i < token.size() && std::isdigit(static_cast<unsigned char>(token[i]))) ++i, ++digits_before;
  if (i < token.size() && token[i] == '.') {
    ++i;
    size_t digits_after = 0;
    while (i < token.size() && std::isdigit(static_cast<unsigned char>(token[i]))) ++i, ++digits_after;
    return i == token.size() && digits_after > 0;
  }
  return i == token.size() && digits_before > 0;
}

}  // namespace goalgen
