#include "goalgen/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace goalgen {

using nlohmann::json;

namespace {

double dist3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

double dist_planar(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  double dx = a[0] - b[0], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dz * dz);
}

json object_state_to_json(const ObjectState& s) {
  json j;
  j["pos"] = {s.pos[0], s.pos[1], s.pos[2]};
  if (s.held) j["held"] = true;
  if (s.in_motion) j["in_motion"] = true;
  if (s.open) j["open"] = true;
  if (s.toggled_on) j["toggled_on"] = true;
  if (s.broken) j["broken"] = true;
  if (s.orientation != "upright") j["orientation"] = s.orientation;
  return j;
}

ObjectState object_state_from_json(const json& j) {
  ObjectState s;
  const auto& pos = j.at("pos");
  s.pos = {pos[0].get<double>(), pos[1].get<double>(), pos[2].get<double>()};
  s.held = j.value("held", false);
  s.in_motion = j.value("in_motion", false);
  s.open = j.value("open", false);
  s.toggled_on = j.value("toggled_on", false);
  s.broken = j.value("broken", false);
  s.orientation = j.value("orientation", "upright");
  return s;
}

json pairs_to_json(const std::set<std::pair<std::string, std::string>>& pairs) {
  json out = json::array();
  for (const auto& [a, b] : pairs) out.push_back({a, b});
  return out;
}

std::set<std::pair<std::string, std::string>> pairs_from_json(const json& j) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& p : j) out.emplace(p[0].get<std::string>(), p[1].get<std::string>());
  return out;
}

bool same_object_state(const ObjectState& a, const ObjectState& b) {
  return a.pos == b.pos && a.held == b.held && a.in_motion == b.in_motion && a.open == b.open &&
         a.toggled_on == b.toggled_on && a.broken == b.broken && a.orientation == b.orientation;
}

}  // namespace

// ---------------------------------------------------------------------------
// Trace

const ObjectInfo* Trace::object_info(const std::string& id) const {
  auto it = catalog_index_.find(id);
  return it == catalog_index_.end() ? nullptr : &catalog_[it->second];
}

void Trace::set_catalog(std::vector<ObjectInfo> catalog) {
  catalog_ = std::move(catalog);
  catalog_index_.clear();
  for (size_t i = 0; i < catalog_.size(); ++i) catalog_index_[catalog_[i].id] = i;
}

void Trace::append_state(WorldState state) {
  for (const auto& [id, _] : state.objects)
    if (!catalog_index_.count(id))
      throw std::invalid_argument("state references object outside the catalog: " + id);
  // carry forward anything the caller did not mention
  if (!states_.empty()) {
    WorldState merged = states_.back();
    merged.in = std::move(state.in);
    merged.on = std::move(state.on);
    merged.touch = std::move(state.touch);
    merged.agent = state.agent;
    for (auto& [id, os] : state.objects) merged.objects[id] = std::move(os);
    states_.push_back(std::move(merged));
  } else {
    for (const auto& info : catalog_)
      state.objects.emplace(info.id, ObjectState{});
    states_.push_back(std::move(state));
  }
  buildings_.clear();
  index_buildings();
}

void Trace::index_buildings() {
  if (buildings_.size() == states_.size()) return;
  buildings_.assign(states_.size(), {});
  std::vector<std::string> blocks;
  for (const auto& info : catalog_)
    if (type_is_a(info.type, "block")) blocks.push_back(info.id);
  if (blocks.size() < 2) return;
  std::map<std::string, size_t> idx;
  for (size_t i = 0; i < blocks.size(); ++i) idx[blocks[i]] = i;

  for (size_t s = 0; s < states_.size(); ++s) {
    std::vector<size_t> parent(blocks.size());
    std::iota(parent.begin(), parent.end(), size_t{0});
    std::function<size_t(size_t)> find = [&](size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (const auto& [a, b] : states_[s].on) {
      auto ia = idx.find(a), ib = idx.find(b);
      if (ia != idx.end() && ib != idx.end()) parent[find(ia->second)] = find(ib->second);
    }
    std::map<size_t, std::vector<std::string>> comps;
    for (size_t i = 0; i < blocks.size(); ++i) comps[find(i)].push_back(blocks[i]);
    for (auto& [_, members] : comps) {
      if (members.size() < 2) continue;
      std::sort(members.begin(), members.end());
      Building b;
      b.id = "building_" + members.front();
      b.setup_flagged = std::any_of(members.begin(), members.end(), [&](const std::string& m) {
        const ObjectInfo* info = object_info(m);
        return info && info->setup;
      });
      b.members = std::move(members);
      buildings_[s].push_back(std::move(b));
    }
    std::sort(buildings_[s].begin(), buildings_[s].end(),
              [](const Building& a, const Building& b) { return a.id < b.id; });
  }
}

std::vector<std::string> Trace::universe_of_type(std::string_view type) const {
  std::vector<std::string> out;
  if (type == "agent") return {"agent"};
  if (type == "building") {
    std::set<std::string> ids;
    for (const auto& per_state : buildings_)
      for (const auto& b : per_state) ids.insert(b.id);
    return {ids.begin(), ids.end()};
  }
  for (const auto& info : catalog_)
    if (type_is_a(info.type, type)) out.push_back(info.id);
  return out;
}

Trace Trace::load(std::istream& in) {
  Trace trace;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty trace stream");
  json header = json::parse(line);
  trace.id_ = header.at("trace").get<std::string>();
  std::vector<ObjectInfo> catalog;
  for (const auto& o : header.at("objects")) {
    ObjectInfo info;
    info.id = o.at("id").get<std::string>();
    info.type = o.at("type").get<std::string>();
    info.color = o.value("color", "");
    info.setup = o.value("setup", false);
    catalog.push_back(std::move(info));
  }
  trace.set_catalog(std::move(catalog));

  WorldState current;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    if (first) {
      for (const auto& info : trace.catalog_) current.objects.emplace(info.id, ObjectState{});
      first = false;
    }
    if (j.contains("agent")) {
      const auto& a = j["agent"];
      const auto& pos = a.at("pos");
      current.agent.pos = {pos[0].get<double>(), pos[1].get<double>(), pos[2].get<double>()};
      current.agent.crouching = a.value("crouching", false);
    }
    if (j.contains("objects"))
      for (const auto& [id, os] : j["objects"].items()) {
        if (!trace.catalog_index_.count(id))
          throw std::runtime_error("trace state references unknown object: " + id);
        current.objects[id] = object_state_from_json(os);
      }
    current.in = j.contains("in") ? pairs_from_json(j["in"]) : decltype(current.in){};
    current.on = j.contains("on") ? pairs_from_json(j["on"]) : decltype(current.on){};
    current.touch = j.contains("touch") ? pairs_from_json(j["touch"]) : decltype(current.touch){};
    trace.states_.push_back(current);
  }
  trace.index_buildings();
  return trace;
}

Trace Trace::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw std::runtime_error("cannot open trace file: " + path);
  return load(in);
}

void Trace::save(std::ostream& out) const {
  json header;
  header["trace"] = id_;
  json objects = json::array();
  for (const auto& info : catalog_) {
    json o;
    o["id"] = info.id;
    o["type"] = info.type;
    if (!info.color.empty()) o["color"] = info.color;
    if (info.setup) o["setup"] = true;
    objects.push_back(std::move(o));
  }
  header["objects"] = std::move(objects);
  out << header.dump() << "\n";

  for (size_t s = 0; s < states_.size(); ++s) {
    const WorldState& st = states_[s];
    json j;
    json objs;
    for (const auto& [id, os] : st.objects) {
      if (s > 0) {
        auto prev = states_[s - 1].objects.find(id);
        if (prev != states_[s - 1].objects.end() && same_object_state(prev->second, os)) continue;
      }
      objs[id] = object_state_to_json(os);
    }
    if (!objs.empty()) j["objects"] = std::move(objs);
    if (s == 0 || !(st.agent.pos == states_[s - 1].agent.pos &&
                    st.agent.crouching == states_[s - 1].agent.crouching)) {
      json a;
      a["pos"] = {st.agent.pos[0], st.agent.pos[1], st.agent.pos[2]};
      if (st.agent.crouching) a["crouching"] = true;
      j["agent"] = std::move(a);
    }
    if (!st.in.empty()) j["in"] = pairs_to_json(st.in);
    if (!st.on.empty()) j["on"] = pairs_to_json(st.on);
    if (!st.touch.empty()) j["touch"] = pairs_to_json(st.touch);
    out << j.dump() << "\n";
  }
}

void Trace::save_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out.good()) throw std::runtime_error("cannot open trace file for writing: " + path);
  save(out);
}

// ---------------------------------------------------------------------------
// TraceEval

TraceEval::TraceEval(const Trace& trace, Thresholds thresholds)
    : trace_(&trace), thresholds_(thresholds) {}

const Building* TraceEval::building_at(const std::string& id, size_t state) const {
  for (const auto& b : trace_->buildings(state))
    if (b.id == id) return &b;
  return nullptr;
}

const ObjectState* TraceEval::object_at(const std::string& id, size_t state) const {
  const auto& objects = trace_->state(state).objects;
  auto it = objects.find(id);
  return it == objects.end() ? nullptr : &it->second;
}

bool TraceEval::position_of(const std::string& id, size_t state, std::array<double, 3>* out) const {
  if (id == "agent") {
    *out = trace_->state(state).agent.pos;
    return true;
  }
  if (const ObjectState* os = object_at(id, state)) {
    *out = os->pos;
    return true;
  }
  if (const Building* b = building_at(id, state)) {
    std::array<double, 3> c{};
    for (const auto& m : b->members) {
      const ObjectState* os = object_at(m, state);
      for (int k = 0; k < 3; ++k) c[k] += os->pos[k];
    }
    for (int k = 0; k < 3; ++k) c[k] /= static_cast<double>(b->members.size());
    *out = c;
    return true;
  }
  return false;
}

std::string TraceEval::color_of(const std::string& id) const {
  if (is_color_token(id)) return id;
  const ObjectInfo* info = trace_->object_info(id);
  return info ? info->color : std::string{};
}

std::string TraceEval::type_of(const std::string& id) const {
  if (id == "agent") return "agent";
  if (id.rfind("building_", 0) == 0) return "building";
  const ObjectInfo* info = trace_->object_info(id);
  return info ? info->type : std::string{};
}

bool TraceEval::entity_exists(const std::string& id, size_t state) const {
  if (id == "agent") return true;
  if (trace_->object_info(id)) return true;
  return building_at(id, state) != nullptr;
}

bool TraceEval::eval_predicate(std::string_view name, const std::vector<std::string>& args,
                               size_t state) const {
  const WorldState& st = trace_->state(state);
  auto pos = [&](const std::string& id, std::array<double, 3>* out) {
    return position_of(id, state, out);
  };
  auto both = [&](std::array<double, 3>* a, std::array<double, 3>* b) {
    return pos(args[0], a) && pos(args[1], b);
  };

  if (name == "above") {
    std::array<double, 3> a, b;
    if (!both(&a, &b)) return false;
    return dist_planar(a, b) <= thresholds_.above_planar && a[1] > b[1];
  }
  if (name == "adjacent") {
    std::array<double, 3> a, b;
    if (!both(&a, &b)) return false;
    return dist3(a, b) <= thresholds_.adjacent;
  }
  if (name == "near") {
    std::array<double, 3> a, b;
    if (!both(&a, &b)) return false;
    return dist3(a, b) <= thresholds_.near;
  }
  if (name == "agent_crouches") return st.agent.crouching;
  if (name == "agent_holds") {
    const ObjectState* os = object_at(args[0], state);
    return os && os->held;
  }
  if (name == "broken") {
    const ObjectState* os = object_at(args[0], state);
    return os && os->broken;
  }
  if (name == "open") {
    const ObjectState* os = object_at(args[0], state);
    return os && os->open;
  }
  if (name == "toggled_on") {
    const ObjectState* os = object_at(args[0], state);
    return os && os->toggled_on;
  }
  if (name == "in_motion") {
    const ObjectState* os = object_at(args[0], state);
    return os && os->in_motion;
  }
  if (name == "game_start") return state == 0;
  if (name == "game_over") return state + 1 == trace_->state_count();
  if (name == "in") {
    if (const Building* b = building_at(args[0], state))
      return std::find(b->members.begin(), b->members.end(), args[1]) != b->members.end();
    return st.in.count({args[0], args[1]}) > 0;
  }
  if (name == "on") return st.on.count({args[0], args[1]}) > 0;
  if (name == "touch")
    return st.touch.count({args[0], args[1]}) > 0 || st.touch.count({args[1], args[0]}) > 0;
  if (name == "object_orientation") {
    const ObjectState* os = object_at(args[0], state);
    return os && os->orientation == args[1];
  }
  if (name == "same_color") {
    std::string a = color_of(args[0]), b = color_of(args[1]);
    return !a.empty() && a == b;
  }
  if (name == "same_object") return args[0] == args[1];
  if (name == "same_type") {
    std::string a = type_of(args[0]);
    if (a.empty()) return false;
    if (trace_->object_info(args[1]) || args[1] == "agent" || args[1].rfind("building_", 0) == 0)
      return a == type_of(args[1]);
    return type_is_a(a, args[1]);
  }
  if (name == "equal_x_position" || name == "equal_z_position") {
    std::array<double, 3> a, b;
    if (!both(&a, &b)) return false;
    int axis = name == "equal_x_position" ? 0 : 2;
    return std::abs(a[axis] - b[axis]) <= thresholds_.equal_axis;
  }
  if (name == "is_setup_object") {
    if (const Building* b = building_at(args[0], state)) return b->setup_flagged;
    const ObjectInfo* info = trace_->object_info(args[0]);
    return info && info->setup;
  }
  // adjacent_side, between, faces, opposite, rug_color_under
  return false;
}

double TraceEval::eval_function(std::string_view name, const std::vector<std::string>& args,
                                size_t state) const {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  if (name == "distance") {
    std::array<double, 3> a, b;
    if (!position_of(args[0], state, &a) || !position_of(args[1], state, &b)) return nan;
    return dist3(a, b);
  }
  if (name == "x_position") {
    std::array<double, 3> a;
    if (!position_of(args[0], state, &a)) return nan;
    return a[0];
  }
  if (name == "building_size") {
    const Building* b = building_at(args[0], state);
    return b ? static_cast<double>(b->members.size()) : 0.0;
  }
  return nan;  // distance_side
}

// ---------------------------------------------------------------------------
// PredicateDatabase

namespace {

std::vector<std::string> ancestor_tokens(const std::string& value) {
  if (value == "agent") return {"agent"};
  if (is_color_token(value)) return {value, "color"};
  if (is_orientation_token(value)) return {value, "orientation"};
  if (is_side_token(value)) return {value, "side"};
  std::vector<std::string> out;
  for (auto t : type_ancestry(value)) out.emplace_back(t);
  if (out.empty()) out.push_back(value);
  return out;
}

std::string db_key(std::string_view pred, const std::vector<std::string>& argTypes) {
  std::string key(pred);
  for (const auto& t : argTypes) {
    key += '|';
    key += t;
  }
  return key;
}

}  // namespace

void PredicateDatabase::record(const std::string& pred, const std::vector<std::string>& argTypes,
                               int trace, int state) {
  // expand every combination of argument-type ancestors
  std::vector<std::vector<std::string>> expansions{{}};
  for (const auto& arg : argTypes) {
    std::vector<std::vector<std::string>> next;
    for (const auto& partial : expansions)
      for (const auto& anc : ancestor_tokens(arg)) {
        auto copy = partial;
        copy.push_back(anc);
        next.push_back(std::move(copy));
      }
    expansions = std::move(next);
  }
  for (const auto& types : expansions) index_[db_key(pred, types)].emplace(trace, state);
}

PredicateDatabase::PredicateDatabase(const std::vector<Trace>& traces, Thresholds thresholds) {
  trace_count_ = static_cast<int>(traces.size());
  for (int t = 0; t < trace_count_; ++t) {
    const Trace& trace = traces[t];
    TraceEval eval(trace, thresholds);
    std::vector<std::string> entities{"agent"};
    for (const auto& info : trace.catalog()) entities.push_back(info.id);

    for (int s = 0; s < static_cast<int>(trace.state_count()); ++s) {
      all_states_.emplace(t, s);
      const WorldState& st = trace.state(s);
      if (st.agent.crouching) record("agent_crouches", {}, t, s);
      if (s == 0) record("game_start", {}, t, s);
      if (s + 1 == static_cast<int>(trace.state_count())) record("game_over", {}, t, s);

      for (const auto& info : trace.catalog()) {
        const ObjectState& os = st.objects.at(info.id);
        if (os.held) record("agent_holds", {info.type}, t, s);
        if (os.in_motion) record("in_motion", {info.type}, t, s);
        if (os.open) record("open", {info.type}, t, s);
        if (os.toggled_on) record("toggled_on", {info.type}, t, s);
        if (os.broken) record("broken", {info.type}, t, s);
        record("object_orientation", {info.type, os.orientation}, t, s);
      }
      auto type_or_label = [&](const std::string& id) {
        if (id == "agent") return std::string("agent");
        if (id.rfind("building_", 0) == 0) return std::string("building");
        const ObjectInfo* info = trace.object_info(id);
        return info ? info->type : id;
      };
      for (const auto& [a, b] : st.in) record("in", {type_or_label(a), type_or_label(b)}, t, s);
      for (const auto& b : trace.buildings(s))
        for (const auto& m : b.members) record("in", {"building", type_or_label(m)}, t, s);
      for (const auto& [a, b] : st.on) record("on", {type_or_label(a), type_or_label(b)}, t, s);
      for (const auto& [a, b] : st.touch) {
        record("touch", {type_or_label(a), type_or_label(b)}, t, s);
        record("touch", {type_or_label(b), type_or_label(a)}, t, s);
      }
      for (const auto& a : entities)
        for (const auto& b : entities) {
          if (a == b) continue;
          for (const char* geom : {"above", "adjacent", "near"})
            if (eval.eval_predicate(geom, {a, b}, s))
              record(geom, {type_or_label(a), type_or_label(b)}, t, s);
        }
    }
  }
}

const PredicateDatabase::StateSet* PredicateDatabase::lookup(
    std::string_view pred, const std::vector<std::string>& argTypes) const {
  auto it = index_.find(db_key(pred, argTypes));
  return it == index_.end() ? nullptr : &it->second;
}

bool PredicateDatabase::found(std::string_view pred,
                              const std::vector<std::string>& argTypes) const {
  return lookup(pred, argTypes) != nullptr;
}

bool PredicateDatabase::feasible(const Node& super,
                                 const std::map<std::string, std::string>& varTypes) const {
  std::function<StateSet(const Node&)> eval = [&](const Node& n) -> StateSet {
    switch (n.nt) {
      case Nt::Super:
        switch (n.rule) {
          case rules::SuperAnd: {
            StateSet acc = eval(*n.children[0]);
            for (size_t i = 1; i < n.children.size() && !acc.empty(); ++i) {
              StateSet rhs = eval(*n.children[i]);
              StateSet merged;
              std::set_intersection(acc.begin(), acc.end(), rhs.begin(), rhs.end(),
                                    std::inserter(merged, merged.begin()));
              acc = std::move(merged);
            }
            return acc;
          }
          case rules::SuperOr: {
            StateSet acc;
            for (const auto& c : n.children) {
              StateSet rhs = eval(*c);
              acc.insert(rhs.begin(), rhs.end());
            }
            return acc;
          }
          case rules::SuperNot: {
            StateSet inner = eval(*n.children[0]);
            StateSet out;
            std::set_difference(all_states_.begin(), all_states_.end(), inner.begin(), inner.end(),
                                std::inserter(out, out.begin()));
            return out;
          }
          case rules::SuperPred: return eval(*n.children[0]);
          default: return all_states_;  // quantifiers and comparisons are opaque here
        }
      case Nt::Predicate: {
        const PredicateSig* sig = find_predicate(n.token);
        if (!sig || !sig->in_database) return all_states_;
        std::vector<std::string> types;
        for (const auto& term : n.children) {
          if (term->rule == rules::TermVariable) {
            auto it = varTypes.find(term->token);
            if (it == varTypes.end()) return all_states_;
            types.push_back(it->second);
          } else {
            types.push_back(term->token);
          }
        }
        const StateSet* found_states = lookup(n.token, types);
        return found_states ? *found_states : StateSet{};
      }
      default: return all_states_;
    }
  };
  return !eval(super).empty();
}

std::string PredicateDatabase::to_json() const {
  json j;
  j["traces"] = trace_count_;
  json all = json::array();
  for (const auto& [t, s] : all_states_) all.push_back({t, s});
  j["states"] = std::move(all);
  json idx;
  for (const auto& [key, states] : index_) {
    json arr = json::array();
    for (const auto& [t, s] : states) arr.push_back({t, s});
    idx[key] = std::move(arr);
  }
  j["index"] = std::move(idx);
  return j.dump();
}

PredicateDatabase PredicateDatabase::from_json(const std::string& text) {
  json j = json::parse(text);
  PredicateDatabase db;
  db.trace_count_ = j.at("traces").get<int>();
  for (const auto& p : j.at("states")) db.all_states_.emplace(p[0].get<int>(), p[1].get<int>());
  for (const auto& [key, arr] : j.at("index").items())
    for (const auto& p : arr) db.index_[key].emplace(p[0].get<int>(), p[1].get<int>());
  return db;
}

}  // namespace goalgen
