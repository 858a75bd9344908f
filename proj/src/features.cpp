#include "goalgen/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "goalgen/printer.hpp"
#include "json.hpp"

namespace goalgen {
namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<FeatureDef> default_defs() {
  using K = FeatureKind;
  return {
      {"ast_ngram_full_n_5_score", K::Float},
      {"ast_ngram_setup_n_5_score", K::Float},
      {"ast_ngram_constraints_n_5_score", K::Float},
      {"ast_ngram_terminal_n_5_score", K::Float},
      {"ast_ngram_scoring_n_5_score", K::Float},
      {"predicate_found_in_data_prop", K::Proportion},
      {"predicate_found_in_data_small_logicals_prop", K::Proportion},
      {"variables_used_all", K::Binary},
      {"variables_used_prop", K::Proportion},
      {"preferences_used_all", K::Binary},
      {"preferences_used_prop", K::Proportion},
      {"setup_quantified_objects_used", K::Proportion},
      {"any_setup_objects_used", K::Binary},
      {"section_doesnt_exist_setup", K::Binary},
      {"section_doesnt_exist_terminal", K::Binary},
      {"adjacent_once_found", K::Binary},
      {"adjacent_same_modal_found", K::Binary},
      {"once_in_middle_of_pref_found", K::Binary},
      {"pref_without_hold_found", K::Binary},
      {"identical_consecutive_seq_func_predicates_found", K::Binary},
      {"predicate_without_variables_or_agent", K::Binary},
      {"nested_logicals_found", K::Binary},
      {"identical_logical_children_found", K::Binary},
      {"redundant_expression_found", K::Binary},
      {"unnecessary_expression_found", K::Binary},
      {"repeated_variables_found", K::Binary},
      {"repeated_variable_type_in_either", K::Binary},
      {"identical_scoring_children_found", K::Binary},
      {"redundant_scoring_terminal_expression_found", K::Binary},
      {"unnecessary_scoring_terminal_expression_found", K::Binary},
      {"total_score_non_positive", K::Binary},
      {"scoring_preferences_used_identically", K::Binary},
      {"two_number_operation_found", K::Binary},
      {"disjoint_preferences_found", K::Binary},
      {"disjoint_preferences_scoring_terminal_types", K::Proportion},
      {"disjoint_preferences_scoring_terminal_predicates", K::Proportion},
      {"disjoint_seq_funcs_found", K::Binary},
      {"disjoint_at_end_found", K::Binary},
      {"disjoint_modal_predicates_found", K::Binary},
      {"disjoint_modal_predicates_prop", K::Proportion},
      {"node_count_setup", K::Discretized},
      {"node_count_constraints", K::Discretized},
      {"node_count_terminal", K::Discretized},
      {"node_count_scoring", K::Discretized},
      {"max_depth_setup", K::Discretized},
      {"max_depth_constraints", K::Discretized},
      {"max_depth_terminal", K::Discretized},
      {"max_depth_scoring", K::Discretized},
      {"pref_forall_used_correct", K::Binary},
      {"pref_forall_used_incorrect", K::Binary},
      {"pref_forall_external_forall_used_correct", K::Binary},
      {"pref_forall_external_forall_used_incorrect", K::Binary},
      {"pref_forall_pref_forall_correct_arity_correct", K::Binary},
      {"pref_forall_pref_forall_correct_arity_incorrect", K::Binary},
      {"pref_forall_pref_forall_correct_types_correct", K::Binary},
      {"pref_forall_pref_forall_correct_types_incorrect", K::Binary},
  };
}

// ---------------------------------------------------------------------------
// shared small helpers

const Node* setup_of(const GameAst& g) {
  return g.has_setup() ? g.setup_section().children[0].get() : nullptr;
}

const Node* terminal_of(const GameAst& g) {
  return g.has_terminal() ? g.terminal_section().children[0].get() : nullptr;
}

bool is_logical_super(const Node& n) {
  return n.nt == Nt::Super &&
         (n.rule == rules::SuperAnd || n.rule == rules::SuperOr || n.rule == rules::SuperNot);
}

bool is_logical_setup(const Node& n) {
  return n.nt == Nt::Setup &&
         (n.rule == rules::SetupAnd || n.rule == rules::SetupOr || n.rule == rules::SetupNot);
}

bool is_logical_terminal(const Node& n) {
  return n.nt == Nt::Terminal &&
         (n.rule == rules::TerminalAnd || n.rule == rules::TerminalOr ||
          n.rule == rules::TerminalNot);
}

// Types declared for each variable name, in scope order. Shadowed names keep
// the innermost declaration.
using TypeScope = std::map<std::string, std::vector<std::string>>;

void add_var_list(const Node& varList, TypeScope* scope) {
  for (const auto& def : varList.children) {
    std::vector<std::string> types;
    const Node& typeDef = *def->children.back();
    for (const auto& leaf : typeDef.children) types.push_back(leaf->token);
    for (size_t i = 0; i + 1 < def->children.size(); ++i)
      (*scope)[def->children[i]->token] = types;
  }
}

// Walks a subtree keeping track of variable declarations: a VarList child
// scopes every sibling that follows it.
void scoped_walk(const Node& n, TypeScope scope,
                 const std::function<void(const Node&, const TypeScope&)>& fn) {
  fn(n, scope);
  bool extended = false;
  for (const auto& child : n.children) {
    if (child->nt == Nt::VarList) {
      if (!extended) extended = true;
      add_var_list(*child, &scope);
      continue;
    }
    scoped_walk(*child, scope, fn);
  }
}

// Declared type tokens of one predicate/function argument.
std::vector<std::string> term_types(const Node& term, const TypeScope& scope) {
  if (term.rule == rules::TermVariable) {
    auto it = scope.find(term.token);
    if (it != scope.end()) return it->second;
    auto cls = classify_variable(term.token);
    if (cls) {
      switch (*cls) {
        case TermClass::ColorClass: return {"color"};
        case TermClass::OrientationClass: return {"orientation"};
        case TermClass::SideClass: return {"side"};
        default: break;
      }
    }
    return {"game_object"};
  }
  return {term.token};
}

bool types_related(std::string_view a, std::string_view b) {
  return type_is_a(a, b) || type_is_a(b, a);
}

bool token_sets_intersect(const std::set<std::string>& a, const std::set<std::string>& b,
                          bool subtypeAware) {
  for (const auto& x : a)
    for (const auto& y : b) {
      if (x == y) return true;
      if (subtypeAware && types_related(x, y)) return true;
    }
  return false;
}

// Entity tokens a subtree mentions: variables plus directly named objects.
// The agent is excluded; sharing it says nothing about thematic linkage.
std::set<std::string> entity_tokens(const Node& n) {
  std::set<std::string> out;
  visit(n, [&](const Node& m) {
    if (m.nt != Nt::Term) return;
    if (m.rule == rules::TermVariable)
      out.insert(m.token);
    else if (m.token != "agent" && is_object_name(m.token))
      out.insert(m.token);
  });
  return out;
}

// Predicate names, skipping the phase markers: sharing game_start/game_over
// says nothing about what a piece of the game is about.
std::set<std::string> predicate_names(const Node& n) {
  std::set<std::string> out;
  visit(n, [&](const Node& m) {
    if (m.nt == Nt::Predicate && m.token != "game_start" && m.token != "game_over")
      out.insert(m.token);
  });
  return out;
}

// Type tokens a preference quantifies over plus objects it names directly.
std::set<std::string> quantified_tokens(const Node& prefDef) {
  std::set<std::string> out;
  visit(prefDef, [&](const Node& m) {
    if (m.nt == Nt::TypeLeaf)
      out.insert(m.token);
    else if (m.nt == Nt::Term && m.rule == rules::TermName && m.token != "agent" &&
             is_object_name(m.token))
      out.insert(m.token);
  });
  return out;
}

// Empty sets are neutral: a stage that mentions nothing cannot witness a
// split, so only non-empty sets participate.
bool components_connected(const std::vector<std::set<std::string>>& allSets, bool subtypeAware) {
  std::vector<std::set<std::string>> sets;
  for (const auto& s : allSets)
    if (!s.empty()) sets.push_back(s);
  size_t n = sets.size();
  if (n < 2) return true;
  std::vector<int> comp(n);
  for (size_t i = 0; i < n; ++i) comp[i] = static_cast<int>(i);
  bool merged = true;
  while (merged) {
    merged = false;
    for (size_t i = 0; i < n; ++i)
      for (size_t j = i + 1; j < n; ++j) {
        if (comp[i] == comp[j]) continue;
        if (token_sets_intersect(sets[i], sets[j], subtypeAware)) {
          int from = comp[j], to = comp[i];
          for (size_t k = 0; k < n; ++k)
            if (comp[k] == from) comp[k] = to;
          merged = true;
        }
      }
  }
  for (size_t i = 1; i < n; ++i)
    if (comp[i] != comp[0]) return false;
  return true;
}

// ---------------------------------------------------------------------------
// boolean structure analysis (truth tables over opaque atoms)

struct LogicReport {
  bool constant = false;       // same value under every assignment
  bool dummyAtom = false;      // some atom never affects the value
  bool duplicateChild = false; // one operator with two identical operands
};

struct LogicTree {
  int kind = 3;  // 0 and, 1 or, 2 not, 3 atom
  int atom = -1;
  std::vector<LogicTree> kids;
};

// classify returns the operator kind for family-local logical nodes and
// nullopt for anything that should be treated as an opaque atom.
LogicTree build_logic(const Node& n, const std::function<std::optional<int>(const Node&)>& classify,
                      std::vector<std::string>* atoms) {
  LogicTree t;
  auto kind = classify(n);
  if (!kind) {
    std::string text = print_node(n);
    auto it = std::find(atoms->begin(), atoms->end(), text);
    t.atom = static_cast<int>(it - atoms->begin());
    if (it == atoms->end()) atoms->push_back(text);
    return t;
  }
  t.kind = *kind;
  for (const auto& c : n.children) t.kids.push_back(build_logic(*c, classify, atoms));
  return t;
}

bool eval_logic(const LogicTree& t, uint32_t mask) {
  switch (t.kind) {
    case 0:
      for (const auto& k : t.kids)
        if (!eval_logic(k, mask)) return false;
      return true;
    case 1:
      for (const auto& k : t.kids)
        if (eval_logic(k, mask)) return true;
      return false;
    case 2: return !eval_logic(t.kids[0], mask);
    default: return (mask >> t.atom) & 1u;
  }
}

void scan_logic_shape(const LogicTree& t, LogicReport* rep) {
  if (t.kind == 3) return;
  for (size_t i = 0; i < t.kids.size(); ++i)
    for (size_t j = i + 1; j < t.kids.size(); ++j) {
      // identical operands of one operator are only detectable structurally
      // for atom leaves here; identical larger subtrees are caught by the
      // print-based duplicate check the caller runs on the original nodes
      if (t.kids[i].kind == 3 && t.kids[j].kind == 3 && t.kids[i].atom == t.kids[j].atom)
        rep->duplicateChild = true;
    }
  for (const auto& k : t.kids) scan_logic_shape(k, rep);
}

LogicReport analyze_logic(const Node& root,
                          const std::function<std::optional<int>(const Node&)>& classify) {
  LogicReport rep;
  std::vector<std::string> atoms;
  LogicTree tree = build_logic(root, classify, &atoms);
  scan_logic_shape(tree, &rep);
  size_t k = atoms.size();
  if (k == 0 || k > 8) return rep;
  uint32_t total = 1u << k;
  bool first = eval_logic(tree, 0);
  bool constant = true;
  std::vector<bool> relevant(k, false);
  for (uint32_t mask = 0; mask < total; ++mask) {
    bool v = eval_logic(tree, mask);
    if (v != first) constant = false;
    for (size_t a = 0; a < k; ++a) {
      if (relevant[a]) continue;
      if (v != eval_logic(tree, mask ^ (1u << a))) relevant[a] = true;
    }
  }
  rep.constant = constant;
  if (!constant)
    for (size_t a = 0; a < k; ++a)
      if (!relevant[a]) rep.dummyAtom = true;
  return rep;
}

// ---------------------------------------------------------------------------
// interval arithmetic for the score-sign check

struct Interval {
  double lo = -kInf, hi = kInf;
};

double safe_mul(double a, double b) {
  if (a == 0.0 || b == 0.0) return 0.0;
  return a * b;
}

Interval iv_mul(Interval a, Interval b) {
  double c[4] = {safe_mul(a.lo, b.lo), safe_mul(a.lo, b.hi), safe_mul(a.hi, b.lo),
                 safe_mul(a.hi, b.hi)};
  return {*std::min_element(c, c + 4), *std::max_element(c, c + 4)};
}

Interval score_interval(const Node& n) {
  switch (n.rule) {
    case rules::ScoreExtMax:
    case rules::ScoreExtMin: return score_interval(*n.children.back());
    case rules::ScoreMulti: {
      Interval acc = score_interval(*n.children[0]);
      for (size_t i = 1; i < n.children.size(); ++i) {
        Interval b = score_interval(*n.children[i]);
        if (n.token == "+")
          acc = {acc.lo + b.lo, acc.hi + b.hi};
        else
          acc = iv_mul(acc, b);
      }
      return acc;
    }
    case rules::ScoreBinary: {
      Interval a = score_interval(*n.children[0]);
      Interval b = score_interval(*n.children[1]);
      if (n.token == "-") return {a.lo - b.hi, a.hi - b.lo};
      if (b.lo == b.hi && b.lo != 0.0) {
        Interval s = iv_mul(a, {1.0 / b.lo, 1.0 / b.lo});
        return s;
      }
      return {};
    }
    case rules::ScoreNeg: {
      Interval a = score_interval(*n.children[0]);
      return {-a.hi, -a.lo};
    }
    case rules::ScoreTotalTime: return {0.0, kInf};
    case rules::ScoreTotalScore: return {};
    case rules::ScoreCompRule: return {0.0, 1.0};
    case rules::ScorePrefEval: return {0.0, kInf};
    case rules::ScoreNumber: {
      double v = std::stod(n.children[0]->token);
      return {v, v};
    }
    default: return {};
  }
}

// ---------------------------------------------------------------------------
// per-group extraction

void ngram_features(const GameAst& g, const ExtractionContext& ctx, RawFeatures* out) {
  std::array<double, NgramSet::kParts> s;
  s.fill(kNan);
  if (ctx.ngrams) s = ctx.ngrams->scores(g);
  (*out)["ast_ngram_full_n_5_score"] = s[NgramSet::Full];
  (*out)["ast_ngram_setup_n_5_score"] = s[NgramSet::Setup];
  (*out)["ast_ngram_constraints_n_5_score"] = s[NgramSet::Constraints];
  (*out)["ast_ngram_terminal_n_5_score"] = s[NgramSet::Terminal];
  (*out)["ast_ngram_scoring_n_5_score"] = s[NgramSet::Scoring];
}

// Every combination of declared argument types, capped to keep either-type
// blowups bounded.
std::vector<std::vector<std::string>> type_combinations(
    const std::vector<std::vector<std::string>>& perArg, size_t cap) {
  std::vector<std::vector<std::string>> combos{{}};
  for (const auto& options : perArg) {
    std::vector<std::vector<std::string>> next;
    for (const auto& base : combos)
      for (const auto& opt : options) {
        if (next.size() >= cap) break;
        auto row = base;
        row.push_back(opt);
        next.push_back(std::move(row));
      }
    combos = std::move(next);
  }
  return combos;
}

void database_features(const GameAst& g, const ExtractionContext& ctx, RawFeatures* out) {
  if (!ctx.db) {
    (*out)["predicate_found_in_data_prop"] = 1.0;
    (*out)["predicate_found_in_data_small_logicals_prop"] = 1.0;
    return;
  }
  const PredicateDatabase& db = *ctx.db;
  int preds = 0, predsFound = 0;
  int logicals = 0, logicalsFeasible = 0;

  auto handle = [&](const Node& n, const TypeScope& scope) {
    if (n.nt == Nt::Predicate) {
      const PredicateSig* sig = find_predicate(n.token);
      ++preds;
      if (!sig || !sig->in_database) {
        ++predsFound;
        return;
      }
      std::vector<std::vector<std::string>> perArg;
      for (const auto& t : n.children) perArg.push_back(term_types(*t, scope));
      bool found = false;
      for (const auto& combo : type_combinations(perArg, 64))
        if (db.found(n.token, combo)) {
          found = true;
          break;
        }
      if (found) ++predsFound;
      return;
    }
    if (is_logical_super(n) && n.children.size() <= 4) {
      ++logicals;
      std::set<std::string> vars;
      visit(n, [&](const Node& m) {
        if (m.nt == Nt::Term && m.rule == rules::TermVariable) vars.insert(m.token);
      });
      std::vector<std::vector<std::string>> perVar;
      std::vector<std::string> names(vars.begin(), vars.end());
      for (const auto& v : names) {
        auto it = scope.find(v);
        perVar.push_back(it != scope.end() ? it->second
                                           : std::vector<std::string>{"game_object"});
      }
      bool feasible = false;
      for (const auto& combo : type_combinations(perVar, 16)) {
        std::map<std::string, std::string> varTypes;
        for (size_t i = 0; i < names.size(); ++i) varTypes[names[i]] = combo[i];
        if (db.feasible(n, varTypes)) {
          feasible = true;
          break;
        }
      }
      if (feasible) ++logicalsFeasible;
    }
  };

  if (const Node* setup = setup_of(g)) scoped_walk(*setup, {}, handle);
  scoped_walk(g.constraints(), {}, handle);

  (*out)["predicate_found_in_data_prop"] = preds ? double(predsFound) / preds : 1.0;
  (*out)["predicate_found_in_data_small_logicals_prop"] =
      logicals ? double(logicalsFeasible) / logicals : 1.0;
}

void defined_used_features(const GameAst& g, RawFeatures* out) {
  // variables: a declaration is used when its name occurs as a term anywhere
  // in the body the declaring quantifier scopes
  int varsDefined = 0, varsUsed = 0;
  std::function<void(const Node&)> walk = [&](const Node& n) {
    const Node* varList = nullptr;
    std::vector<const Node*> body;
    for (const auto& c : n.children) {
      if (c->nt == Nt::VarList)
        varList = c.get();
      else if (varList)
        body.push_back(c.get());
    }
    if (varList) {
      for (const auto& def : varList->children)
        for (size_t i = 0; i + 1 < def->children.size(); ++i) {
          const std::string& name = def->children[i]->token;
          ++varsDefined;
          bool used = false;
          for (const Node* b : body) {
            visit(*b, [&](const Node& m) {
              if (m.nt == Nt::Term && m.rule == rules::TermVariable && m.token == name)
                used = true;
            });
            if (used) break;
          }
          if (used) ++varsUsed;
        }
    }
    for (const auto& c : n.children) walk(*c);
  };
  walk(g.root());
  (*out)["variables_used_prop"] = varsDefined ? double(varsUsed) / varsDefined : 1.0;
  (*out)["variables_used_all"] = (varsUsed == varsDefined) ? 1.0 : 0.0;

  // preferences: used when terminal or scoring references them
  std::set<std::string> referenced;
  auto collect_refs = [&](const Node& n) {
    visit(n, [&](const Node& m) {
      if (m.nt == Nt::PrefRef) referenced.insert(m.token);
    });
  };
  collect_refs(g.scoring());
  if (const Node* term = terminal_of(g)) collect_refs(*term);
  auto defs = preference_defs(g);
  int prefsUsed = 0;
  for (const Node* def : defs)
    if (referenced.count(std::string(preference_name(*def)))) ++prefsUsed;
  (*out)["preferences_used_prop"] =
      defs.empty() ? 1.0 : double(prefsUsed) / double(defs.size());
  (*out)["preferences_used_all"] = (prefsUsed == int(defs.size())) ? 1.0 : 0.0;

  // setup object linkage to the preferences
  const Node* setup = setup_of(g);
  std::set<std::string> setupQuantified, setupMentioned, prefTokens;
  if (setup) {
    visit(*setup, [&](const Node& m) {
      if (m.nt == Nt::VarDef && m.rule == rules::VarObject)
        for (const auto& leaf : m.children.back()->children)
          setupQuantified.insert(leaf->token);
      if (m.nt == Nt::TypeLeaf) setupMentioned.insert(m.token);
      if (m.nt == Nt::Term && m.rule == rules::TermName && m.token != "agent" &&
          is_object_name(m.token))
        setupMentioned.insert(m.token);
    });
  }
  visit(g.constraints(), [&](const Node& m) {
    if (m.nt == Nt::TypeLeaf) prefTokens.insert(m.token);
    if (m.nt == Nt::Term && m.rule == rules::TermName && m.token != "agent" &&
        is_object_name(m.token))
      prefTokens.insert(m.token);
  });
  auto used_in_prefs = [&](const std::string& t) {
    for (const auto& p : prefTokens)
      if (types_related(t, p)) return true;
    return false;
  };
  int quantUsed = 0;
  for (const auto& t : setupQuantified)
    if (used_in_prefs(t)) ++quantUsed;
  (*out)["setup_quantified_objects_used"] =
      setupQuantified.empty() ? 1.0 : double(quantUsed) / double(setupQuantified.size());
  bool anyShared = false;
  for (const auto& t : setupMentioned)
    if (used_in_prefs(t)) {
      anyShared = true;
      break;
    }
  (*out)["any_setup_objects_used"] = anyShared ? 1.0 : 0.0;

  (*out)["section_doesnt_exist_setup"] = g.has_setup() ? 0.0 : 1.0;
  (*out)["section_doesnt_exist_terminal"] = g.has_terminal() ? 0.0 : 1.0;
}

int modal_kind(const Node& seqFunc) {
  switch (seqFunc.rule) {
    case rules::SeqHold: return 1;
    case rules::SeqHoldWhile: return 2;
    default: return 0;  // once and once-measure
  }
}

void misuse_features(const GameAst& g, RawFeatures* out) {
  bool adjacentOnce = false, adjacentSame = false, onceMiddle = false, noHold = false,
       identicalConsecutive = false, noVarsOrAgent = false, nested = false,
       identicalChildren = false, redundant = false, unnecessary = false, repeatedVars = false,
       repeatedEither = false;

  std::vector<const Node*> roots{&g.constraints()};
  if (const Node* setup = setup_of(g)) roots.push_back(setup);

  for (const Node* root : roots) {
    visit(*root, [&](const Node& n) {
      if (n.nt == Nt::Then) {
        const auto& stages = n.children;
        bool hasHold = false;
        for (size_t i = 0; i < stages.size(); ++i) {
          int kind = modal_kind(*stages[i]);
          if (kind != 0) hasHold = true;
          if (kind == 0 && i > 0 && i + 1 < stages.size()) onceMiddle = true;
          if (i + 1 < stages.size()) {
            int next = modal_kind(*stages[i + 1]);
            if (kind == 0 && next == 0) adjacentOnce = true;
            if (kind == next) adjacentSame = true;
            if (print_node(*stages[i]->children[0]) == print_node(*stages[i + 1]->children[0]))
              identicalConsecutive = true;
          }
        }
        if (!hasHold) noHold = true;
      }
      if (n.nt == Nt::Predicate && !n.children.empty()) {
        bool grounded = false;
        for (const auto& t : n.children)
          if (t->rule == rules::TermVariable || t->token == "agent") grounded = true;
        if (!grounded) noVarsOrAgent = true;
      }
      if ((n.nt == Nt::Predicate || n.nt == Nt::FunctionEval) && n.children.size() >= 2) {
        for (size_t i = 0; i < n.children.size(); ++i)
          for (size_t j = i + 1; j < n.children.size(); ++j)
            if (n.children[i]->rule == rules::TermVariable &&
                n.children[j]->rule == rules::TermVariable &&
                n.children[i]->token == n.children[j]->token)
              repeatedVars = true;
      }
      if (n.nt == Nt::TypeDef && n.rule == rules::TypeEither) {
        std::set<std::string> seen;
        for (const auto& leaf : n.children)
          if (!seen.insert(leaf->token).second) repeatedEither = true;
      }
      bool logical = is_logical_super(n) || is_logical_setup(n);
      if (logical) {
        for (const auto& c : n.children)
          if (c->nt == n.nt && c->rule == n.rule) nested = true;
        if (n.rule != rules::SuperNot && n.children.size() >= 2) {
          std::set<std::string> prints;
          for (const auto& c : n.children)
            if (!prints.insert(print_node(*c)).second) identicalChildren = true;
        }
      }
    });

    // truth-table pass over maximal logical subtrees
    auto classify_super = [](const Node& n) -> std::optional<int> {
      if (is_logical_super(n)) return n.rule;  // SuperAnd/Or/Not are 0/1/2
      return std::nullopt;
    };
    auto classify_setup = [](const Node& n) -> std::optional<int> {
      if (is_logical_setup(n)) return n.rule;
      return std::nullopt;
    };
    std::function<void(const Node&, bool)> scan = [&](const Node& n, bool parentLogical) {
      bool logical = is_logical_super(n) || is_logical_setup(n);
      if (logical && !parentLogical) {
        LogicReport rep = analyze_logic(
            n, n.nt == Nt::Super ? std::function<std::optional<int>(const Node&)>(classify_super)
                                 : std::function<std::optional<int>(const Node&)>(classify_setup));
        if (rep.dummyAtom || rep.duplicateChild) redundant = true;
        if (rep.constant) unnecessary = true;
      }
      for (const auto& c : n.children) scan(*c, logical);
    };
    scan(*root, false);
  }

  (*out)["adjacent_once_found"] = adjacentOnce;
  (*out)["adjacent_same_modal_found"] = adjacentSame;
  (*out)["once_in_middle_of_pref_found"] = onceMiddle;
  (*out)["pref_without_hold_found"] = noHold;
  (*out)["identical_consecutive_seq_func_predicates_found"] = identicalConsecutive;
  (*out)["predicate_without_variables_or_agent"] = noVarsOrAgent;
  (*out)["nested_logicals_found"] = nested;
  (*out)["identical_logical_children_found"] = identicalChildren;
  (*out)["redundant_expression_found"] = redundant;
  (*out)["unnecessary_expression_found"] = unnecessary;
  (*out)["repeated_variables_found"] = repeatedVars;
  (*out)["repeated_variable_type_in_either"] = repeatedEither;
}

void scoring_misuse_features(const GameAst& g, RawFeatures* out) {
  bool identicalChildren = false, redundant = false, unnecessary = false, twoNumber = false;

  std::vector<const Node*> roots{&g.scoring()};
  if (const Node* term = terminal_of(g)) roots.push_back(term);

  auto all_numbers = [](const Node& n) {
    for (const auto& c : n.children)
      if (c->nt != Nt::ScoringExpr || c->rule != rules::ScoreNumber) return false;
    return n.children.size() >= 2;
  };

  for (const Node* root : roots) {
    visit(*root, [&](const Node& n) {
      if (n.nt == Nt::ScoringExpr && n.rule == rules::ScoreMulti) {
        std::set<std::string> prints;
        for (const auto& c : n.children)
          if (!prints.insert(print_node(*c)).second) identicalChildren = true;
        if (n.children.size() == 1) redundant = true;
        for (const auto& c : n.children) {
          if (c->nt != Nt::ScoringExpr || c->rule != rules::ScoreNumber) continue;
          double v = std::stod(c->children[0]->token);
          if ((n.token == "+" && v == 0.0 && n.children.size() > 1) ||
              (n.token == "*" && v == 1.0 && n.children.size() > 1))
            redundant = true;
        }
        if (all_numbers(n)) twoNumber = true;
      }
      if (n.nt == Nt::ScoringExpr && n.rule == rules::ScoreBinary) {
        if (n.children[1]->nt == Nt::ScoringExpr && n.children[1]->rule == rules::ScoreNumber) {
          double v = std::stod(n.children[1]->children[0]->token);
          if ((n.token == "-" && v == 0.0) || (n.token == "/" && v == 1.0)) redundant = true;
        }
        if (all_numbers(n)) twoNumber = true;
      }
      if (n.nt == Nt::ScoringExpr && n.rule == rules::ScoreNeg &&
          n.children[0]->rule == rules::ScoreNeg)
        redundant = true;
      if (n.nt == Nt::ScoringComp) {
        std::set<std::string> prints;
        for (const auto& c : n.children)
          if (!prints.insert(print_node(*c)).second) identicalChildren = true;
        bool allNum = true;
        for (const auto& c : n.children)
          if (c->nt != Nt::ScoringExpr || c->rule != rules::ScoreNumber) allNum = false;
        if (allNum && n.children.size() >= 2) unnecessary = true;
      }
      if (is_logical_terminal(n) && n.rule != rules::TerminalNot) {
        std::set<std::string> prints;
        for (const auto& c : n.children)
          if (!prints.insert(print_node(*c)).second) identicalChildren = true;
      }
    });
  }

  if (const Node* term = terminal_of(g)) {
    auto classify = [](const Node& n) -> std::optional<int> {
      if (is_logical_terminal(n)) return n.rule;
      return std::nullopt;
    };
    std::function<void(const Node&, bool)> scan = [&](const Node& n, bool parentLogical) {
      bool logical = is_logical_terminal(n);
      if (logical && !parentLogical) {
        LogicReport rep = analyze_logic(n, classify);
        if (rep.dummyAtom || rep.duplicateChild) redundant = true;
        if (rep.constant) unnecessary = true;
      }
      for (const auto& c : n.children) scan(*c, logical);
    };
    scan(*term, false);
  }

  // comparisons over literal numbers in the gameplay constraints
  visit(g.constraints(), [&](const Node& n) {
    if (n.nt == Nt::FComp) {
      bool allNum = true;
      for (const auto& c : n.children)
        if (c->rule != rules::FArgNum) allNum = false;
      if (allNum && n.children.size() >= 2) twoNumber = true;
    }
  });

  Interval total = score_interval(g.scoring());
  (*out)["total_score_non_positive"] = (total.hi <= 0.0) ? 1.0 : 0.0;

  // do the counting rules distinguish between preferences at all: compare,
  // per preference, the multiset of count modes together with the operator
  // path leading to each use
  std::map<std::string, std::multiset<std::string>> usage;
  for (const Node* def : preference_defs(g)) usage[std::string(preference_name(*def))];
  std::function<void(const Node&, const std::string&)> collect_use =
      [&](const Node& n, const std::string& path) {
        if (n.nt == Nt::PrefEval) {
          const Node& ref = *n.children[0];
          std::string sig = path + "|" + n.token;
          for (const auto& q : ref.children) sig += ":" + q->token;
          auto it = usage.find(ref.token);
          if (it != usage.end()) it->second.insert(sig);
          return;
        }
        for (size_t i = 0; i < n.children.size(); ++i) {
          std::string step = path;
          if (n.nt == Nt::ScoringExpr || n.nt == Nt::Terminal || n.nt == Nt::TerminalComp ||
              n.nt == Nt::ScoringComp) {
            step += '/';
            step += std::to_string(static_cast<int>(n.nt));
            step += '.';
            step += std::to_string(n.rule);
            step += n.token;
            // operand order matters for subtraction and division
            if (n.nt == Nt::ScoringExpr && n.rule == rules::ScoreBinary)
              step += '#' + std::to_string(i);
          }
          collect_use(*n.children[i], step);
        }
      };
  collect_use(g.scoring(), "s");
  if (const Node* term = terminal_of(g)) collect_use(*term, "t");
  bool identicalUse = true;
  for (auto it = usage.begin(); it != usage.end(); ++it)
    if (it->second != usage.begin()->second) identicalUse = false;
  (*out)["scoring_preferences_used_identically"] = identicalUse ? 1.0 : 0.0;

  (*out)["identical_scoring_children_found"] = identicalChildren;
  (*out)["redundant_scoring_terminal_expression_found"] = redundant;
  (*out)["unnecessary_scoring_terminal_expression_found"] = unnecessary;
  (*out)["two_number_operation_found"] = twoNumber;
}

void disjointness_features(const GameAst& g, RawFeatures* out) {
  auto defs = preference_defs(g);
  std::map<std::string, const Node*> byName;
  std::vector<std::set<std::string>> prefTypes;
  for (const Node* def : defs) {
    byName[std::string(preference_name(*def))] = def;
    prefTypes.push_back(quantified_tokens(*def));
  }

  bool disjointPrefs = false;
  for (size_t i = 0; i < prefTypes.size() && !disjointPrefs; ++i)
    for (size_t j = i + 1; j < prefTypes.size(); ++j)
      if (!token_sets_intersect(prefTypes[i], prefTypes[j], true)) {
        disjointPrefs = true;
        break;
      }
  (*out)["disjoint_preferences_found"] = disjointPrefs ? 1.0 : 0.0;

  // pairs of preferences the terminal/scoring sections reference
  std::set<std::string> referenced;
  auto collect = [&](const Node& n) {
    visit(n, [&](const Node& m) {
      if (m.nt == Nt::PrefRef && byName.count(m.token)) referenced.insert(m.token);
    });
  };
  collect(g.scoring());
  if (const Node* term = terminal_of(g)) collect(*term);
  std::vector<std::string> refNames(referenced.begin(), referenced.end());
  int pairs = 0, disjointTypePairs = 0, disjointPredPairs = 0;
  for (size_t i = 0; i < refNames.size(); ++i)
    for (size_t j = i + 1; j < refNames.size(); ++j) {
      ++pairs;
      const Node* a = byName[refNames[i]];
      const Node* b = byName[refNames[j]];
      if (!token_sets_intersect(quantified_tokens(*a), quantified_tokens(*b), true))
        ++disjointTypePairs;
      if (!token_sets_intersect(predicate_names(*a), predicate_names(*b), false))
        ++disjointPredPairs;
    }
  (*out)["disjoint_preferences_scoring_terminal_types"] =
      pairs ? double(disjointTypePairs) / pairs : 0.0;
  (*out)["disjoint_preferences_scoring_terminal_predicates"] =
      pairs ? double(disjointPredPairs) / pairs : 0.0;

  bool disjointSeq = false, disjointAtEnd = false, disjointModalPreds = false;
  int stagesTotal = 0, stagesIsolated = 0;
  visit(g.constraints(), [&](const Node& n) {
    if (n.nt == Nt::Then) {
      std::vector<std::set<std::string>> entities, preds;
      for (const auto& stage : n.children) {
        entities.push_back(entity_tokens(*stage));
        preds.push_back(predicate_names(*stage));
      }
      if (!components_connected(entities, false)) disjointSeq = true;
      if (!components_connected(preds, false)) disjointModalPreds = true;
      if (preds.size() >= 2) {
        for (size_t i = 0; i < preds.size(); ++i) {
          if (preds[i].empty()) continue;
          ++stagesTotal;
          bool shares = false;
          for (size_t j = 0; j < preds.size() && !shares; ++j)
            if (j != i && token_sets_intersect(preds[i], preds[j], false)) shares = true;
          if (!shares) ++stagesIsolated;
        }
      }
    }
    if (n.nt == Nt::AtEnd) {
      std::vector<std::set<std::string>> atoms;
      visit(n, [&](const Node& m) {
        if (m.nt == Nt::Predicate || m.nt == Nt::FComp) atoms.push_back(entity_tokens(m));
      });
      if (atoms.size() >= 2 && !components_connected(atoms, false)) disjointAtEnd = true;
    }
  });
  (*out)["disjoint_seq_funcs_found"] = disjointSeq ? 1.0 : 0.0;
  (*out)["disjoint_at_end_found"] = disjointAtEnd ? 1.0 : 0.0;
  (*out)["disjoint_modal_predicates_found"] = disjointModalPreds ? 1.0 : 0.0;
  (*out)["disjoint_modal_predicates_prop"] =
      stagesTotal ? double(stagesIsolated) / stagesTotal : 0.0;
}

void counting_features(const GameAst& g, RawFeatures* out) {
  const Node* setup = setup_of(g);
  const Node* term = terminal_of(g);
  (*out)["node_count_setup"] = setup ? double(setup->size()) : 0.0;
  (*out)["node_count_constraints"] = double(g.constraints().size());
  (*out)["node_count_terminal"] = term ? double(term->size()) : 0.0;
  (*out)["node_count_scoring"] = double(g.scoring().size());
  (*out)["max_depth_setup"] = setup ? double(setup->depth()) : 0.0;
  (*out)["max_depth_constraints"] = double(g.constraints().depth());
  (*out)["max_depth_terminal"] = term ? double(term->depth()) : 0.0;
  (*out)["max_depth_scoring"] = double(g.scoring().depth());
}

void pref_forall_features(const GameAst& g, RawFeatures* out) {
  // external variable declarations of the forall-wrapped preferences
  struct ExternalDef {
    std::vector<std::vector<std::string>> varTypes;  // per variable, in order
  };
  std::map<std::string, ExternalDef> forallDefs;
  for (const Node* def : preference_defs(g)) {
    if (def->rule != rules::PrefForallDef) continue;
    ExternalDef ext;
    const Node& varList = *def->children[0];
    for (const auto& vd : varList.children) {
      std::vector<std::string> types;
      for (const auto& leaf : vd->children.back()->children) types.push_back(leaf->token);
      for (size_t i = 0; i + 1 < vd->children.size(); ++i) ext.varTypes.push_back(types);
    }
    forallDefs[std::string(preference_name(*def))] = std::move(ext);
  }

  // collect every counting usage in terminal/scoring with its context
  struct Usage {
    std::string pref;
    std::vector<std::string> qualifiers;
    bool externalMode = false;  // per-external counting or external max/min
  };
  std::vector<Usage> usages;
  std::function<void(const Node&, bool)> scan = [&](const Node& n, bool inExternalOp) {
    bool external = inExternalOp;
    if (n.nt == Nt::ScoringExpr &&
        (n.rule == rules::ScoreExtMax || n.rule == rules::ScoreExtMin))
      external = true;
    if (n.nt == Nt::PrefEval) {
      Usage u;
      const Node& ref = *n.children[0];
      u.pref = ref.token;
      for (const auto& q : ref.children) u.qualifiers.push_back(q->token);
      u.externalMode = external || n.rule == rules::CountOncePerExternalObjects;
      usages.push_back(std::move(u));
    }
    for (const auto& c : n.children) scan(*c, external);
  };
  scan(g.scoring(), false);
  if (const Node* term = terminal_of(g)) scan(*term, false);

  bool usedCorrect = false, usedIncorrect = false;
  for (const auto& entry : forallDefs) {
    bool externallyCounted = false;
    for (const auto& u : usages)
      if (u.pref == entry.first && (u.externalMode || !u.qualifiers.empty()))
        externallyCounted = true;
    (externallyCounted ? usedCorrect : usedIncorrect) = true;
  }

  bool extCorrect = false, extIncorrect = false;
  for (const auto& u : usages) {
    if (!u.externalMode) continue;
    (forallDefs.count(u.pref) ? extCorrect : extIncorrect) = true;
  }

  bool arityCorrect = false, arityIncorrect = false;
  bool typesCorrect = false, typesIncorrect = false;
  for (const auto& u : usages) {
    if (u.qualifiers.empty()) continue;
    auto it = forallDefs.find(u.pref);
    if (it == forallDefs.end() || u.qualifiers.size() > it->second.varTypes.size()) {
      arityIncorrect = true;
      continue;
    }
    arityCorrect = true;
    bool compatible = true;
    for (size_t i = 0; i < u.qualifiers.size(); ++i) {
      bool ok = false;
      for (const auto& declared : it->second.varTypes[i])
        if (u.qualifiers[i] == declared || types_related(u.qualifiers[i], declared)) ok = true;
      if (!ok) compatible = false;
    }
    (compatible ? typesCorrect : typesIncorrect) = true;
  }

  (*out)["pref_forall_used_correct"] = usedCorrect ? 1.0 : 0.0;
  (*out)["pref_forall_used_incorrect"] = usedIncorrect ? 1.0 : 0.0;
  (*out)["pref_forall_external_forall_used_correct"] = extCorrect ? 1.0 : 0.0;
  (*out)["pref_forall_external_forall_used_incorrect"] = extIncorrect ? 1.0 : 0.0;
  (*out)["pref_forall_pref_forall_correct_arity_correct"] = arityCorrect ? 1.0 : 0.0;
  (*out)["pref_forall_pref_forall_correct_arity_incorrect"] = arityIncorrect ? 1.0 : 0.0;
  (*out)["pref_forall_pref_forall_correct_types_correct"] = typesCorrect ? 1.0 : 0.0;
  (*out)["pref_forall_pref_forall_correct_types_incorrect"] = typesIncorrect ? 1.0 : 0.0;
}

}  // namespace

// ---------------------------------------------------------------------------

FeatureRegistry::FeatureRegistry(std::vector<FeatureDef> defs) : defs_(std::move(defs)) {
  for (const auto& def : defs_) {
    if (def.kind == FeatureKind::Discretized) {
      for (int b = 0; b < kBins; ++b) names_.push_back(def.name + "_" + std::to_string(b));
    } else {
      names_.push_back(def.name);
    }
  }
}

const FeatureRegistry& FeatureRegistry::full() {
  static const FeatureRegistry registry(default_defs());
  return registry;
}

const FeatureDef* FeatureRegistry::find(const std::string& name) const {
  for (const auto& def : defs_)
    if (def.name == name) return &def;
  return nullptr;
}

RawFeatures raw_features(const GameAst& game, const ExtractionContext& ctx) {
  RawFeatures out;
  ngram_features(game, ctx, &out);
  database_features(game, ctx, &out);
  defined_used_features(game, &out);
  misuse_features(game, &out);
  scoring_misuse_features(game, &out);
  disjointness_features(game, &out);
  counting_features(game, &out);
  pref_forall_features(game, &out);
  return out;
}

FeatureNormalizer::FeatureNormalizer() : registry_(FeatureRegistry::full()) {}

FeatureNormalizer FeatureNormalizer::fit(const FeatureRegistry& registry,
                                         const std::vector<RawFeatures>& rows) {
  if (rows.size() < 2)
    throw std::invalid_argument("normalizer fitting needs at least two games");
  FeatureNormalizer norm;
  norm.registry_ = registry;
  for (const auto& def : registry.defs()) {
    if (def.kind == FeatureKind::Float) {
      double lo = kInf, hi = -kInf;
      for (const auto& row : rows) {
        auto it = row.find(def.name);
        if (it == row.end() || std::isnan(it->second)) continue;
        lo = std::min(lo, it->second);
        hi = std::max(hi, it->second);
      }
      if (lo > hi) lo = hi = 0.0;
      norm.ranges_[def.name] = {lo, hi};
    } else if (def.kind == FeatureKind::Discretized) {
      std::vector<double> values;
      for (const auto& row : rows) {
        auto it = row.find(def.name);
        values.push_back(it == row.end() ? 0.0 : it->second);
      }
      std::sort(values.begin(), values.end());
      std::vector<double> cuts;
      for (int q = 1; q < FeatureRegistry::kBins; ++q) {
        size_t rank = (values.size() * q + FeatureRegistry::kBins - 1) / FeatureRegistry::kBins;
        if (rank >= values.size()) rank = values.size() - 1;
        cuts.push_back(values[rank]);
      }
      norm.thresholds_[def.name] = std::move(cuts);
    }
  }
  return norm;
}

std::vector<double> FeatureNormalizer::apply(const RawFeatures& raw) const {
  std::vector<double> out;
  out.reserve(registry_.vector_size());
  for (const auto& def : registry_.defs()) {
    auto it = raw.find(def.name);
    double v = (it == raw.end()) ? kNan : it->second;
    switch (def.kind) {
      case FeatureKind::Float: {
        auto range = ranges_.find(def.name);
        double lo = 0.0, hi = 0.0;
        if (range != ranges_.end()) {
          lo = range->second.first;
          hi = range->second.second;
        }
        double scaled = 0.5;
        if (!std::isnan(v) && hi > lo) scaled = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
        out.push_back(scaled);
        break;
      }
      case FeatureKind::Discretized: {
        if (std::isnan(v)) v = 0.0;
        int bin = 0;
        auto cuts = thresholds_.find(def.name);
        if (cuts != thresholds_.end())
          for (double t : cuts->second)
            if (v > t) ++bin;
        for (int b = 0; b < FeatureRegistry::kBins; ++b) out.push_back(b == bin ? 1.0 : 0.0);
        break;
      }
      default:
        out.push_back(std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0));
        break;
    }
  }
  return out;
}

std::string FeatureNormalizer::to_json() const {
  nlohmann::json j;
  j["version"] = FeatureRegistry::kVersion;
  nlohmann::json defs = nlohmann::json::array();
  for (const auto& def : registry_.defs())
    defs.push_back({{"name", def.name}, {"kind", static_cast<int>(def.kind)}});
  j["features"] = std::move(defs);
  nlohmann::json ranges = nlohmann::json::object();
  for (const auto& r : ranges_) ranges[r.first] = {r.second.first, r.second.second};
  j["ranges"] = std::move(ranges);
  nlohmann::json cuts = nlohmann::json::object();
  for (const auto& t : thresholds_) cuts[t.first] = t.second;
  j["thresholds"] = std::move(cuts);
  return j.dump(2);
}

FeatureNormalizer FeatureNormalizer::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.at("version").get<std::string>() != FeatureRegistry::kVersion)
    throw std::runtime_error("unsupported feature registry version");
  std::vector<FeatureDef> defs;
  for (const auto& d : j.at("features"))
    defs.push_back({d.at("name").get<std::string>(),
                    static_cast<FeatureKind>(d.at("kind").get<int>())});
  FeatureNormalizer norm;
  norm.registry_ = FeatureRegistry(std::move(defs));
  for (const auto& [name, range] : j.at("ranges").items())
    norm.ranges_[name] = {range.at(0).get<double>(), range.at(1).get<double>()};
  for (const auto& [name, cuts] : j.at("thresholds").items())
    norm.thresholds_[name] = cuts.get<std::vector<double>>();
  return norm;
}

bool coherent(const RawFeatures& raw) { return coherence_failures(raw).empty(); }

std::vector<std::string> coherence_failures(const RawFeatures& raw) {
  static const std::vector<std::string> mustHold = {
      "variables_used_all",
      "preferences_used_all",
  };
  static const std::vector<std::string> mustNotHold = {
      "adjacent_once_found",
      "adjacent_same_modal_found",
      "once_in_middle_of_pref_found",
      "pref_without_hold_found",
      "identical_consecutive_seq_func_predicates_found",
      "nested_logicals_found",
      "identical_logical_children_found",
      "redundant_expression_found",
      "unnecessary_expression_found",
      "repeated_variables_found",
      "repeated_variable_type_in_either",
      "identical_scoring_children_found",
      "redundant_scoring_terminal_expression_found",
      "unnecessary_scoring_terminal_expression_found",
      "total_score_non_positive",
      "two_number_operation_found",
      "disjoint_preferences_found",
      "disjoint_seq_funcs_found",
      "disjoint_at_end_found",
  };
  std::vector<std::string> failures;
  auto value = [&](const std::string& name) {
    auto it = raw.find(name);
    return it == raw.end() ? 0.0 : it->second;
  };
  for (const auto& name : mustHold)
    if (value(name) != 1.0) failures.push_back(name);
  for (const auto& name : mustNotHold)
    if (value(name) != 0.0) failures.push_back(name);
  return failures;
}

void save_matrix(std::ostream& out, const FeatureMatrix& m) {
  out << "id";
  for (const auto& name : m.names) out << ' ' << name;
  out << '\n';
  out.precision(17);
  for (size_t r = 0; r < m.rows.size(); ++r) {
    out << (r < m.ids.size() ? m.ids[r] : std::to_string(r));
    for (double v : m.rows[r]) out << ' ' << v;
    out << '\n';
  }
}

FeatureMatrix load_matrix(std::istream& in) {
  FeatureMatrix m;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty feature matrix");
  std::istringstream header(line);
  std::string cell;
  header >> cell;
  if (cell != "id") throw std::runtime_error("feature matrix must start with an id column");
  while (header >> cell) m.names.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    row >> cell;
    m.ids.push_back(cell);
    std::vector<double> values;
    double v;
    while (row >> v) values.push_back(v);
    if (values.size() != m.names.size())
      throw std::runtime_error("feature matrix row width mismatch");
    m.rows.push_back(std::move(values));
  }
  return m;
}

}  // namespace goalgen
