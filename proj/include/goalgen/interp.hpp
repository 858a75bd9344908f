#pragma once

#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "goalgen/ast.hpp"
#include "goalgen/trace.hpp"

namespace goalgen {

struct InterpOptions {
  Thresholds thresholds;
  size_t max_bindings = 10000;  // quantifier combinations per preference per trace
  double stationary_eps = 0.05;
  double same_position_eps = 0.25;
};

// One match of a preference: the variable binding and the contiguous state
// interval [start, end] that satisfied it.
struct Satisfaction {
  std::string preference;
  std::map<std::string, std::string> binding;   // every quantified variable
  std::map<std::string, std::string> external;  // subset bound by a forall wrapper
  int start = 0;
  int end = 0;
  double measure = std::numeric_limits<double>::quiet_NaN();
};

// All satisfactions of one preference over one trace. `all` keeps every match
// (tightest interval per distinct end and binding); `distinct` is the greedy
// earliest-end non-overlapping subset used by plain counting.
struct PreferenceRun {
  std::vector<Satisfaction> all;
  std::vector<Satisfaction> distinct;
};

// Recomputes the non-overlapping subset after any filtering of `all`.
PreferenceRun make_run(std::vector<Satisfaction> all);

struct SetupResult {
  std::optional<int> satisfied_at;  // first state where the setup condition holds
  bool conserved_ok = true;
};

struct ScoreReport {
  double total = std::numeric_limits<double>::quiet_NaN();
  bool defined = true;  // false when scoring hit a division by zero
  std::string error;
  std::optional<int> terminal_state;
  bool setup_satisfied = true;
  std::optional<int> setup_state;
  // value of every preference-count leaf in the scoring and terminal trees,
  // keyed by its printed form
  std::map<std::string, double> counts;
};

SetupResult eval_setup(const Node& setup, const Trace& trace, const InterpOptions& opts = {});

// Runs one preference definition over a trace; matches may only start at
// `from_state` or later (used for setup gating).
PreferenceRun run_preference(const Node& prefDef, const Trace& trace,
                             const InterpOptions& opts = {}, int from_state = 0);

struct CountContext {
  const Trace* trace = nullptr;
  const Node* pref_def = nullptr;       // for the variable order in position modes
  std::vector<std::string> qualifiers;  // type filters applied to the binding, in order
  double stationary_eps = 0.05;
  double same_position_eps = 0.25;
};

// Applies one counting mode (rules::PrefEval) to a preference run.
double count_mode(int rule, const PreferenceRun& run, const CountContext& ctx);

ScoreReport score_game(const GameAst& game, const Trace& trace, const InterpOptions& opts = {});

// Which traces activate each game component (setup or preference): at least
// one satisfaction after setup gating.
std::map<std::string, std::set<std::string>> activating_components(
    const GameAst& game, const std::vector<Trace>& traces, const InterpOptions& opts = {});

}  // namespace goalgen
