#pragma once

#include <string>
#include <utility>
#include <vector>

#include "goalgen/trace.hpp"

namespace testsupport {

using goalgen::ObjectInfo;
using goalgen::Trace;
using goalgen::WorldState;

// Assembles traces state by state; object fields carry forward between states,
// relation lists reset each state.
class TraceBuilder {
 public:
  explicit TraceBuilder(std::string id) { trace_id_ = std::move(id); }

  TraceBuilder& object(const std::string& id, const std::string& type,
                       const std::string& color = "", bool setup = false) {
    catalog_.push_back({id, type, color, setup});
    current_.objects[id] = {};
    return *this;
  }

  TraceBuilder& state() {
    if (started_) states_.push_back(current_);
    started_ = true;
    current_.in.clear();
    current_.on.clear();
    current_.touch.clear();
    return *this;
  }

  TraceBuilder& agent_at(double x, double y, double z, bool crouching = false) {
    current_.agent.pos = {x, y, z};
    current_.agent.crouching = crouching;
    return *this;
  }
  TraceBuilder& place(const std::string& id, double x, double y, double z) {
    current_.objects.at(id).pos = {x, y, z};
    return *this;
  }
  TraceBuilder& held(const std::string& id, bool v = true) {
    current_.objects.at(id).held = v;
    return *this;
  }
  TraceBuilder& moving(const std::string& id, bool v = true) {
    current_.objects.at(id).in_motion = v;
    return *this;
  }
  TraceBuilder& open(const std::string& id, bool v = true) {
    current_.objects.at(id).open = v;
    return *this;
  }
  TraceBuilder& toggled(const std::string& id, bool v = true) {
    current_.objects.at(id).toggled_on = v;
    return *this;
  }
  TraceBuilder& broken(const std::string& id, bool v = true) {
    current_.objects.at(id).broken = v;
    return *this;
  }
  TraceBuilder& oriented(const std::string& id, const std::string& orientation) {
    current_.objects.at(id).orientation = orientation;
    return *this;
  }
  TraceBuilder& rel_in(const std::string& a, const std::string& b) {
    current_.in.emplace(a, b);
    return *this;
  }
  TraceBuilder& rel_on(const std::string& a, const std::string& b) {
    current_.on.emplace(a, b);
    return *this;
  }
  TraceBuilder& rel_touch(const std::string& a, const std::string& b) {
    current_.touch.emplace(a, b);
    return *this;
  }

  Trace build() {
    states_.push_back(current_);
    Trace trace;
    trace.set_id(trace_id_);
    trace.set_catalog(catalog_);
    for (auto& s : states_) trace.append_state(std::move(s));
    states_.clear();
    started_ = false;
    return trace;
  }

 private:
  std::string trace_id_;
  std::vector<ObjectInfo> catalog_;
  std::vector<WorldState> states_;
  WorldState current_;
  bool started_ = false;
};

// Six states, two throws of one dodgeball. Hand simulation of throwAttempt
// [once holds; hold !holds & moving; once !moving]:
//   s0 held            -> first stage done at 0
//   s1 free, moving    -> hold
//   s2 free, moving    -> hold
//   s3 free, at rest   -> final stage done: satisfaction [0,3], lands in bin
//   s4 held            -> first stage done at 4
//   s5 free, at rest   -> hold spans zero states, final at 5: satisfaction [4,5]
inline Trace two_throw_trace() {
  TraceBuilder b("two-throws");
  b.object("dodgeball_blue_1", "dodgeball_blue", "blue")
      .object("hexagonal_bin_1", "hexagonal_bin");
  b.state().agent_at(0, 1, 0).place("dodgeball_blue_1", 0.2, 1.0, 0.2).held("dodgeball_blue_1")
      .place("hexagonal_bin_1", 3, 0, 3);
  b.state().held("dodgeball_blue_1", false).moving("dodgeball_blue_1").place("dodgeball_blue_1", 1, 0.8, 1);
  b.state().place("dodgeball_blue_1", 2, 0.4, 2);
  b.state().moving("dodgeball_blue_1", false).place("dodgeball_blue_1", 3, 0.2, 3)
      .rel_in("hexagonal_bin_1", "dodgeball_blue_1");
  b.state().held("dodgeball_blue_1").moving("dodgeball_blue_1", false).place("dodgeball_blue_1", 0.2, 1.0, 0.2);
  b.state().held("dodgeball_blue_1", false).place("dodgeball_blue_1", 0.2, 0.1, 0.2);
  return b.build();
}

// Four states, one throw past a ramp. With `touching` the ball touches the
// ramp mid-flight (state 1); without, it never does.
inline Trace ramp_throw_trace(bool touching) {
  TraceBuilder b(touching ? "ramp-throw-touch" : "ramp-throw-miss");
  b.object("dodgeball_red_1", "dodgeball_red", "red")
      .object("curved_wooden_ramp_1", "curved_wooden_ramp");
  b.state().agent_at(0, 1, 0).place("dodgeball_red_1", 0.2, 1.0, 0.2).held("dodgeball_red_1")
      .place("curved_wooden_ramp_1", 1.5, 0, 1.5);
  b.state().held("dodgeball_red_1", false).moving("dodgeball_red_1").place("dodgeball_red_1", 1.5, 0.3, 1.5);
  if (touching) b.rel_touch("dodgeball_red_1", "curved_wooden_ramp_1");
  b.state().place("dodgeball_red_1", 2.5, 0.3, 2.5);
  b.state().moving("dodgeball_red_1", false).place("dodgeball_red_1", 3, 0.1, 3);
  return b.build();
}

}  // namespace testsupport
