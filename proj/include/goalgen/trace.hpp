#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "goalgen/ast.hpp"
#include "goalgen/domain.hpp"

namespace goalgen {

// Catalog entry for one object in a recorded play trace.
struct ObjectInfo {
  std::string id;
  std::string type;    // most specific type, e.g. "dodgeball_red"
  std::string color;   // empty when the object has no meaningful color
  bool setup = false;  // marked as part of the game setup by the recorder
};

struct ObjectState {
  std::array<double, 3> pos{};
  bool held = false;
  bool in_motion = false;
  bool open = false;
  bool toggled_on = false;
  bool broken = false;
  std::string orientation = "upright";
};

struct AgentState {
  std::array<double, 3> pos{};
  bool crouching = false;
};

struct WorldState {
  AgentState agent;
  std::map<std::string, ObjectState> objects;
  // ground relations from the recorder; first element is the container/support
  std::set<std::pair<std::string, std::string>> in, on, touch;
};

// A stack of blocks: the connected component of the on-relation restricted to
// blocks, two members or more. Identified by its lexicographically smallest
// member so the label is stable while that block stays in the stack.
struct Building {
  std::string id;
  std::vector<std::string> members;
  bool setup_flagged = false;
};

// A play trace: object catalog plus a state sequence, stored as JSON lines.
// The first line holds the trace id and catalog; each following line holds one
// state with positions/fluents for objects that changed (the first state lists
// every object) and full relation lists.
class Trace {
 public:
  static Trace load(std::istream& in);
  static Trace load_file(const std::string& path);
  void save(std::ostream& out) const;
  void save_file(const std::string& path) const;

  const std::string& id() const { return id_; }
  void set_id(std::string id) { id_ = std::move(id); }
  size_t state_count() const { return states_.size(); }
  const WorldState& state(size_t i) const { return states_[i]; }
  const std::vector<ObjectInfo>& catalog() const { return catalog_; }
  const ObjectInfo* object_info(const std::string& id) const;
  const std::vector<Building>& buildings(size_t i) const { return buildings_[i]; }

  // Adds a state; the catalog must already contain every referenced object.
  void append_state(WorldState state);
  void set_catalog(std::vector<ObjectInfo> catalog);

  // All ids an object variable of the given declared type can bind to:
  // catalog objects whose type matches, every building label that occurs in
  // some state for "building", and the agent for "agent".
  std::vector<std::string> universe_of_type(std::string_view type) const;

 private:
  void index_buildings();

  std::string id_;
  std::vector<ObjectInfo> catalog_;
  std::map<std::string, size_t> catalog_index_;
  std::vector<WorldState> states_;
  std::vector<std::vector<Building>> buildings_;
};

struct Thresholds {
  double adjacent = 0.4;
  double near = 1.0;
  double equal_axis = 0.1;
  double above_planar = 0.4;
};

// Ground predicate and function evaluation against one trace. Entity
// arguments are object ids, "agent", building labels, or literal tokens
// (colors, orientations, sides, type names) where the signature allows them.
class TraceEval {
 public:
  explicit TraceEval(const Trace& trace, Thresholds thresholds = {});

  bool eval_predicate(std::string_view name, const std::vector<std::string>& args,
                      size_t state) const;
  double eval_function(std::string_view name, const std::vector<std::string>& args,
                       size_t state) const;

  const Trace& trace() const { return *trace_; }
  const Thresholds& thresholds() const { return thresholds_; }

  bool entity_exists(const std::string& id, size_t state) const;

 private:
  const Building* building_at(const std::string& id, size_t state) const;
  bool position_of(const std::string& id, size_t state, std::array<double, 3>* out) const;
  const ObjectState* object_at(const std::string& id, size_t state) const;
  std::string color_of(const std::string& id) const;
  std::string type_of(const std::string& id) const;

  const Trace* trace_;
  Thresholds thresholds_;
};

// Witness index over a set of traces: for every database predicate and every
// combination of argument-type ancestors, the set of (trace, state) pairs
// where some grounding held. Backs the data-grounding features.
class PredicateDatabase {
 public:
  PredicateDatabase() = default;
  explicit PredicateDatabase(const std::vector<Trace>& traces, Thresholds thresholds = {});

  using StateSet = std::set<std::pair<int, int>>;

  // Witness states for a predicate applied to arguments of the given declared
  // types ("agent" for the agent). Null when never observed.
  const StateSet* lookup(std::string_view pred, const std::vector<std::string>& argTypes) const;
  bool found(std::string_view pred, const std::vector<std::string>& argTypes) const;

  // Whether a small logical combination (and/or/not over database atoms,
  // at most four children) is consistent with some observed state. Atoms over
  // predicates outside the database count as always satisfiable.
  bool feasible(const Node& super, const std::map<std::string, std::string>& varTypes) const;

  int trace_count() const { return trace_count_; }
  const StateSet& all_states() const { return all_states_; }

  std::string to_json() const;
  static PredicateDatabase from_json(const std::string& text);

 private:
  void record(const std::string& pred, const std::vector<std::string>& argTypes, int trace,
              int state);

  std::map<std::string, StateSet> index_;
  StateSet all_states_;
  int trace_count_ = 0;
};

}  // namespace goalgen
