#pragma once

#include <map>
#include <string>
#include <vector>

#include "goalgen/ast.hpp"
#include "goalgen/rng.hpp"

namespace goalgen {

// Variables visible at a sampling site.
struct Scope {
  std::vector<std::pair<std::string, TermClass>> vars;
  std::vector<std::string> pref_names;      // preferences defined in the game
  std::vector<std::string> measured_prefs;  // those containing a once-measure modal

  bool has_var(TermClass cls) const {
    for (const auto& [name, c] : vars)
      if (c == cls) return true;
    return false;
  }
};

// Production-rule counts with add-one smoothing, fit on a corpus, plus
// scope-aware sampling and subtree regrowth.
class Pcfg {
 public:
  struct Params {
    int max_depth = 16;     // regenerate a subtree when its sample would exceed this
    int resample_tries = 20;
  };

  static Pcfg fit(const std::vector<GameAst>& corpus, Params params);
  static Pcfg fit(const std::vector<GameAst>& corpus) { return fit(corpus, Params{}); }

  GameAst sample_game(Rng& rng, const std::string& name) const;
  // Replaces the subtree rooted at node_id with a fresh sample of the same
  // grammar category, using the variable scope at that site.
  GameAst regrow(const GameAst& game, int node_id, Rng& rng) const;
  // Node ids eligible as regrowth targets.
  std::vector<int> regrow_targets(const GameAst& game) const;

  // Building blocks for the search mutations.
  NodePtr sample_setup_body(const Scope& scope, Rng& rng) const;
  NodePtr sample_terminal_body(const Scope& scope, Rng& rng) const;
  NodePtr sample_super(const Scope& scope, Rng& rng, int budget) const;
  NodePtr sample_seq_func(const Scope& scope, Rng& rng) const;
  NodePtr sample_pref_def(Scope* scope, Rng& rng, const std::string& name) const;
  NodePtr sample_type_def(TermClass cls, Rng& rng) const;
  NodePtr sample_var_def(TermClass cls, Rng& rng, int* fresh_counter) const;
  NodePtr sample_scoring_expr(const Scope& scope, Rng& rng, int budget) const;
  // A child for a variadic node (and/or lists, then, hold-while tails, ...).
  // Returns nullptr when the node kind does not take more children.
  NodePtr sample_child_for(const GameAst& game, const Node& parent, Rng& rng) const;

  // Scope visible at a node: variables bound on the path from the root, plus
  // the game's preference names.
  static Scope scope_at(const GameAst& game, int node_id);

  const Params& params() const { return params_; }

  std::string to_json() const;
  static Pcfg from_json(const std::string& text);

 private:
  friend struct Sampler;
  friend class Fitter;

  double rule_weight(Nt nt, int rule) const;
  int pick_rule(Nt nt, Rng& rng, const std::vector<int>& allowed) const;
  int pick_arity(Nt nt, int rule, int min_arity, Rng& rng) const;
  std::string pick_token(const std::string& pool, Rng& rng,
                         const std::vector<std::string_view>& support) const;

  Params params_;
  // (nt, rule) -> count
  std::map<std::pair<int, int>, double> rules_;
  // (nt, rule) -> child count -> count
  std::map<std::pair<int, int>, std::map<int, double>> arities_;
  // pool name -> token -> count
  std::map<std::string, std::map<std::string, double>> tokens_;
};

}  // namespace goalgen
