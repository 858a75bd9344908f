#include "goalgen/pcfg.hpp"

#include <algorithm>
#include <cassert>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace goalgen {

namespace {

size_t uniform_index(Rng& rng, size_t n) {
  assert(n > 0);
  return std::uniform_int_distribution<size_t>(0, n - 1)(rng);
}

template <typename T>
const T& choose(Rng& rng, const std::vector<T>& items) {
  return items[uniform_index(rng, items.size())];
}

size_t pick_weighted(Rng& rng, const std::vector<double>& weights) {
  double total = 0;
  for (double w : weights) total += w;
  double r = std::uniform_real_distribution<double>(0.0, total)(rng);
  for (size_t i = 0; i < weights.size(); ++i) {
    r -= weights[i];
    if (r <= 0) return i;
  }
  return weights.size() - 1;
}

const std::vector<std::string_view>& comp_ops() {
  static const std::vector<std::string_view> ops = {"<", "<=", "=", ">", ">="};
  return ops;
}
const std::vector<std::string_view>& binary_comp_ops() {
  static const std::vector<std::string_view> ops = {"<", "<=", ">", ">="};
  return ops;
}

std::vector<std::string_view> default_numbers(const std::string& pool) {
  if (pool == "num_time") return {"30", "60", "120", "180", "300"};
  if (pool == "num_prefcount") return {"1", "2", "3", "5"};
  if (pool == "num_score") return {"1", "2", "5", "10", "25", "50"};
  if (pool == "num_fcomp") return {"0.5", "1", "2", "5"};
  return {"1", "2", "3", "5", "10", "0.5"};
}

std::vector<std::string_view> pred_support() {
  std::vector<std::string_view> out;
  static std::vector<std::string> storage = [] {
    std::vector<std::string> s;
    for (const auto& p : predicate_table())
      for (const auto& a : p.arities)
        s.push_back(std::string(p.name) + "/" + std::to_string(a.size()));
    return s;
  }();
  for (const auto& s : storage) out.push_back(s);
  return out;
}

std::vector<std::string_view> func_support() {
  std::vector<std::string_view> out;
  static std::vector<std::string> storage = [] {
    std::vector<std::string> s;
    for (const auto& f : function_table())
      for (const auto& a : f.arities)
        s.push_back(std::string(f.name) + "/" + std::to_string(a.size()));
    return s;
  }();
  for (const auto& s : storage) out.push_back(s);
  return out;
}

std::string number_pool_for_parent(const Node& parent) {
  if (parent.nt == Nt::FArg) return "num_fcomp";
  if (parent.nt == Nt::TerminalComp) {
    if (parent.rule == rules::CompTime) return "num_time";
    if (parent.rule == rules::CompScore) return "num_score";
    return "num_prefcount";
  }
  return "num_scoring";
}

TermClass vardef_class(int rule) {
  switch (rule) {
    case rules::VarColor: return TermClass::ColorClass;
    case rules::VarOrientation: return TermClass::OrientationClass;
    case rules::VarSide: return TermClass::SideClass;
    default: return TermClass::Object;
  }
}

const std::vector<ArgKind>* signature_args(const Node& predOrFunc) {
  size_t argc = predOrFunc.children.size();
  if (predOrFunc.nt == Nt::Predicate) {
    const PredicateSig* sig = find_predicate(predOrFunc.token);
    if (!sig) return nullptr;
    for (const auto& a : sig->arities)
      if (a.size() == argc) return &a;
  } else {
    const FunctionSig* sig = find_function(predOrFunc.token);
    if (!sig) return nullptr;
    for (const auto& a : sig->arities)
      if (a.size() == argc) return &a;
  }
  return nullptr;
}

}  // namespace

double Pcfg::rule_weight(Nt nt, int rule) const {
  auto it = rules_.find({static_cast<int>(nt), rule});
  return (it == rules_.end() ? 0.0 : it->second) + 1.0;
}

int Pcfg::pick_rule(Nt nt, Rng& rng, const std::vector<int>& allowed) const {
  std::vector<double> w;
  for (int r : allowed) w.push_back(rule_weight(nt, r));
  return allowed[pick_weighted(rng, w)];
}

int Pcfg::pick_arity(Nt nt, int rule, int min_arity, Rng& rng) const {
  auto it = arities_.find({static_cast<int>(nt), rule});
  int max_arity = min_arity + 2;
  if (it != arities_.end())
    for (const auto& [n, _] : it->second) max_arity = std::max(max_arity, n);
  std::vector<double> w;
  for (int n = min_arity; n <= max_arity; ++n) {
    double c = 0;
    if (it != arities_.end()) {
      auto jt = it->second.find(n);
      if (jt != it->second.end()) c = jt->second;
    }
    w.push_back(c + 1.0);
  }
  return min_arity + static_cast<int>(pick_weighted(rng, w));
}

std::string Pcfg::pick_token(const std::string& pool, Rng& rng,
                             const std::vector<std::string_view>& support) const {
  auto it = tokens_.find(pool);
  std::vector<std::string> names;
  std::vector<double> w;
  for (auto s : support) {
    names.emplace_back(s);
    double c = 0;
    if (it != tokens_.end()) {
      auto jt = it->second.find(names.back());
      if (jt != it->second.end()) c = jt->second;
    }
    w.push_back(c + 1.0);
  }
  // observed tokens outside the default support still participate
  if (it != tokens_.end()) {
    for (const auto& [tok, c] : it->second) {
      if (std::find(names.begin(), names.end(), tok) == names.end()) {
        names.push_back(tok);
        w.push_back(c + 1.0);
      }
    }
  }
  return names[pick_weighted(rng, w)];
}

// ---------------------------------------------------------------------------
// Fitting

class Fitter {
 public:
  explicit Fitter(Pcfg* out) : out_(out) {}

  void game(const GameAst& g) {
    bump_token("domain", g.domain());
    rule(Nt::SetupSection, g.setup_section().rule);
    if (g.has_setup()) setup(*g.setup_section().children[0]);
    arity(Nt::Constraints, 0, g.constraints().children.size());
    for (const auto& pd : g.constraints().children) pref_def(*pd);
    rule(Nt::TerminalSection, g.terminal_section().rule);
    if (g.has_terminal()) terminal(*g.terminal_section().children[0]);
    scoring_expr(*g.scoring().children[0]);
  }

 private:
  void rule(Nt nt, int r) { out_->rules_[{static_cast<int>(nt), r}] += 1; }
  void arity(Nt nt, int r, size_t n) {
    out_->arities_[{static_cast<int>(nt), r}][static_cast<int>(n)] += 1;
  }
  void bump_token(const std::string& pool, const std::string& tok) {
    out_->tokens_[pool][tok] += 1;
  }

  void setup(const Node& n) {
    rule(Nt::Setup, n.rule);
    switch (n.rule) {
      case rules::SetupAnd:
      case rules::SetupOr:
        arity(Nt::Setup, n.rule, n.children.size());
        for (const auto& c : n.children) setup(*c);
        break;
      case rules::SetupNot: setup(*n.children[0]); break;
      case rules::SetupExists:
      case rules::SetupForall:
        var_list(*n.children[0]);
        setup(*n.children[1]);
        break;
      default:
        rule(Nt::SetupStatement, n.children[0]->rule);
        super(*n.children[0]->children[0]);
        break;
    }
  }

  void super(const Node& n) {
    rule(Nt::Super, n.rule);
    switch (n.rule) {
      case rules::SuperAnd:
      case rules::SuperOr:
        arity(Nt::Super, n.rule, n.children.size());
        for (const auto& c : n.children) super(*c);
        break;
      case rules::SuperNot: super(*n.children[0]); break;
      case rules::SuperExists:
      case rules::SuperForall:
        var_list(*n.children[0]);
        super(*n.children[1]);
        break;
      case rules::SuperComp: fcomp(*n.children[0]); break;
      default: predicate(*n.children[0]); break;
    }
  }

  void fcomp(const Node& n) {
    rule(Nt::FComp, n.rule);
    if (n.rule == rules::FCompBinary)
      bump_token("fcomp_op", n.token);
    else
      arity(Nt::FComp, rules::FCompEq, n.children.size());
    for (const auto& c : n.children) {
      rule(Nt::FArg, c->rule);
      if (c->rule == rules::FArgFunc)
        function_eval(*c->children[0]);
      else
        bump_token("num_fcomp", c->children[0]->token);
    }
  }

  void predicate(const Node& n) {
    bump_token("pred", n.token + "/" + std::to_string(n.children.size()));
    terms(n);
  }

  void function_eval(const Node& n) {
    bump_token("func", n.token + "/" + std::to_string(n.children.size()));
    terms(n);
  }

  void terms(const Node& n) {
    const std::vector<ArgKind>* args = signature_args(n);
    if (!args) return;
    for (size_t i = 0; i < n.children.size(); ++i) {
      const Node& t = *n.children[i];
      bool is_var = t.rule == rules::TermVariable;
      switch ((*args)[i]) {
        case ArgKind::Object:
          bump_token("term_obj_choice", is_var ? "var" : "name");
          if (!is_var) bump_token("term_obj_name", t.token);
          break;
        case ArgKind::Side:
          bump_token("term_side_choice", is_var ? "var" : "literal");
          if (!is_var) bump_token("term_side", t.token);
          break;
        case ArgKind::Orientation:
          bump_token("term_orientation_choice", is_var ? "var" : "literal");
          if (!is_var) bump_token("term_orientation", t.token);
          break;
        case ArgKind::ColorLiteral:
          bump_token("term_color_choice", is_var ? "var" : "literal");
          if (!is_var) bump_token("term_color", t.token);
          break;
        case ArgKind::ColorOrObject:
          if (is_var)
            bump_token("term_color_or_obj_choice",
                       classify_variable(t.token) == TermClass::ColorClass ? "colorvar" : "objvar");
          else if (is_color_token(t.token)) {
            bump_token("term_color_or_obj_choice", "color");
            bump_token("term_color", t.token);
          } else {
            bump_token("term_color_or_obj_choice", "objname");
            bump_token("term_obj_name", t.token);
          }
          break;
        case ArgKind::TypeTerm:
          bump_token("term_type_choice", is_var ? "var" : "type");
          if (!is_var) bump_token("term_type", t.token);
          break;
      }
    }
  }

  void var_list(const Node& n) {
    arity(Nt::VarList, 0, n.children.size());
    for (const auto& def : n.children) {
      rule(Nt::VarDef, def->rule);
      arity(Nt::VarDef, def->rule, def->children.size() - 1);
      const Node& td = *def->children.back();
      rule(Nt::TypeDef, td.rule);
      if (td.rule == rules::TypeEither) arity(Nt::TypeDef, rules::TypeEither, td.children.size());
      std::string pool;
      switch (vardef_class(def->rule)) {
        case TermClass::Object: pool = "type_obj"; break;
        case TermClass::ColorClass: pool = "type_color"; break;
        case TermClass::OrientationClass: pool = "type_orientation"; break;
        case TermClass::SideClass: pool = "type_side"; break;
      }
      for (const auto& leaf : td.children)
        if (td.rule == rules::TypeEither || vardef_class(def->rule) == TermClass::Object)
          bump_token(pool, leaf->token);
    }
  }

  void pref_def(const Node& n) {
    rule(Nt::PrefDef, n.rule);
    const Node* pref = n.children.back().get();
    if (n.rule == rules::PrefForallDef) var_list(*n.children[0]);
    const Node& quant = *pref->children[0];
    rule(Nt::PrefQuant, quant.rule);
    if (quant.rule != rules::QuantNone) var_list(*quant.children[0]);
    const Node& body = *quant.children.back();
    rule(Nt::PrefBody, body.rule);
    if (body.rule == rules::BodyThen) {
      const Node& then = *body.children[0];
      arity(Nt::Then, 0, then.children.size());
      for (const auto& sf : then.children) {
        rule(Nt::SeqFunc, sf->rule);
        if (sf->rule == rules::SeqHoldWhile) arity(Nt::SeqFunc, rules::SeqHoldWhile, sf->children.size());
        super(*sf->children[0]);
        if (sf->rule == rules::SeqOnceMeasure)
          function_eval(*sf->children[1]);
        else
          for (size_t i = 1; i < sf->children.size(); ++i) super(*sf->children[i]);
      }
    } else {
      super(*body.children[0]->children[0]);
    }
  }

  void terminal(const Node& n) {
    rule(Nt::Terminal, n.rule);
    switch (n.rule) {
      case rules::TerminalAnd:
      case rules::TerminalOr:
        arity(Nt::Terminal, n.rule, n.children.size());
        for (const auto& c : n.children) terminal(*c);
        break;
      case rules::TerminalNot: terminal(*n.children[0]); break;
      default: {
        const Node& comp = *n.children[0];
        rule(Nt::TerminalComp, comp.rule);
        bump_token("terminal_op", comp.token);
        if (comp.rule == rules::CompTime)
          bump_token("num_time", comp.children[0]->token);
        else if (comp.rule == rules::CompScore)
          bump_token("num_score", comp.children[0]->token);
        else {
          scoring_expr(*comp.children[0]);
          bump_token("num_prefcount", comp.children[1]->token);
        }
        break;
      }
    }
  }

  void scoring_expr(const Node& n) {
    rule(Nt::ScoringExpr, n.rule);
    switch (n.rule) {
      case rules::ScoreExtMax:
      case rules::ScoreExtMin:
      case rules::ScoreNeg: scoring_expr(*n.children[0]); break;
      case rules::ScoreMulti:
        arity(Nt::ScoringExpr, rules::ScoreMulti, n.children.size());
        bump_token("multi_op", n.token);
        for (const auto& c : n.children) scoring_expr(*c);
        break;
      case rules::ScoreBinary:
        bump_token("binary_op", n.token);
        scoring_expr(*n.children[0]);
        scoring_expr(*n.children[1]);
        break;
      case rules::ScoreCompRule: {
        const Node& comp = *n.children[0];
        rule(Nt::ScoringComp, comp.rule);
        if (comp.rule == rules::SCompBinary)
          bump_token("scoring_comp_op", comp.token);
        else
          arity(Nt::ScoringComp, rules::SCompEq, comp.children.size());
        for (const auto& c : comp.children) scoring_expr(*c);
        break;
      }
      case rules::ScorePrefEval: {
        const Node& eval = *n.children[0];
        rule(Nt::PrefEval, eval.rule);
        arity(Nt::PrefRef, 0, eval.children[0]->children.size());
        for (const auto& q : eval.children[0]->children) bump_token("type_obj", q->token);
        break;
      }
      case rules::ScoreNumber: bump_token("num_scoring", n.children[0]->token); break;
      default: break;
    }
  }

  Pcfg* out_;
};

Pcfg Pcfg::fit(const std::vector<GameAst>& corpus, Params params) {
  Pcfg out;
  out.params_ = params;
  Fitter fitter(&out);
  for (const auto& g : corpus) fitter.game(g);
  return out;
}

// ---------------------------------------------------------------------------
// Sampling

struct Sampler {
  const Pcfg& p;
  Rng& rng;
  Scope scope;
  int fresh_obj = 0, fresh_color = 0, fresh_orientation = 0, fresh_side = 0;
  // declared types of external (pref-forall) variables, per preference
  std::map<std::string, std::vector<std::string>> forall_externals;

  explicit Sampler(const Pcfg& pcfg, Rng& r) : p(pcfg), rng(r) {}

  std::string fresh_var(TermClass cls) {
    switch (cls) {
      case TermClass::Object: return "?v" + std::to_string(fresh_obj++);
      case TermClass::ColorClass: return "?x" + std::to_string(fresh_color++);
      case TermClass::OrientationClass: return "?y" + std::to_string(fresh_orientation++);
      default: return "?z" + std::to_string(fresh_side++);
    }
  }

  std::vector<std::string> in_scope(TermClass cls) const {
    std::vector<std::string> out;
    for (const auto& [name, c] : scope.vars)
      if (c == cls) out.push_back(name);
    return out;
  }

  NodePtr term(ArgKind kind) {
    auto var_term = [&](TermClass cls) -> NodePtr {
      auto vars = in_scope(cls);
      return make_node(Nt::Term, rules::TermVariable, choose(rng, vars));
    };
    switch (kind) {
      case ArgKind::Object: {
        bool want_var = p.pick_token("term_obj_choice", rng, {"var", "name"}) == "var";
        if (want_var && scope.has_var(TermClass::Object)) return var_term(TermClass::Object);
        return make_node(Nt::Term, rules::TermName,
                         p.pick_token("term_obj_name", rng, object_name_tokens()));
      }
      case ArgKind::Side: {
        bool want_var = p.pick_token("term_side_choice", rng, {"var", "literal"}) == "var";
        if (want_var && scope.has_var(TermClass::SideClass)) return var_term(TermClass::SideClass);
        return make_node(Nt::Term, rules::TermName, p.pick_token("term_side", rng, side_tokens()));
      }
      case ArgKind::Orientation: {
        bool want_var = p.pick_token("term_orientation_choice", rng, {"var", "literal"}) == "var";
        if (want_var && scope.has_var(TermClass::OrientationClass))
          return var_term(TermClass::OrientationClass);
        return make_node(Nt::Term, rules::TermName,
                         p.pick_token("term_orientation", rng, orientation_tokens()));
      }
      case ArgKind::ColorLiteral: {
        bool want_var = p.pick_token("term_color_choice", rng, {"var", "literal"}) == "var";
        if (want_var && scope.has_var(TermClass::ColorClass)) return var_term(TermClass::ColorClass);
        return make_node(Nt::Term, rules::TermName, p.pick_token("term_color", rng, color_tokens()));
      }
      case ArgKind::ColorOrObject: {
        std::string c = p.pick_token("term_color_or_obj_choice", rng,
                                     {"colorvar", "color", "objvar", "objname"});
        if (c == "colorvar" && scope.has_var(TermClass::ColorClass))
          return var_term(TermClass::ColorClass);
        if (c == "objvar" && scope.has_var(TermClass::Object)) return var_term(TermClass::Object);
        if (c == "color" || c == "colorvar")
          return make_node(Nt::Term, rules::TermName, p.pick_token("term_color", rng, color_tokens()));
        return make_node(Nt::Term, rules::TermName,
                         p.pick_token("term_obj_name", rng, object_name_tokens()));
      }
      case ArgKind::TypeTerm: {
        bool want_var = p.pick_token("term_type_choice", rng, {"var", "type"}) == "var";
        if (want_var && scope.has_var(TermClass::Object)) return var_term(TermClass::Object);
        return make_node(Nt::Term, rules::TermName,
                         p.pick_token("term_type", rng, all_object_types()));
      }
    }
    return nullptr;
  }

  NodePtr predicate() {
    std::string key = p.pick_token("pred", rng, pred_support());
    size_t slash = key.rfind('/');
    std::string name = key.substr(0, slash);
    size_t argc = static_cast<size_t>(std::stoi(key.substr(slash + 1)));
    const PredicateSig* sig = find_predicate(name);
    auto node = make_node(Nt::Predicate, 0, name);
    for (const auto& a : sig->arities)
      if (a.size() == argc)
        for (ArgKind k : a) node->add(term(k));
    return node;
  }

  NodePtr function_eval() {
    std::string key = p.pick_token("func", rng, func_support());
    size_t slash = key.rfind('/');
    std::string name = key.substr(0, slash);
    size_t argc = static_cast<size_t>(std::stoi(key.substr(slash + 1)));
    const FunctionSig* sig = find_function(name);
    auto node = make_node(Nt::FunctionEval, 0, name);
    for (const auto& a : sig->arities)
      if (a.size() == argc)
        for (ArgKind k : a) node->add(term(k));
    return node;
  }

  NodePtr farg() {
    int r = p.pick_rule(Nt::FArg, rng, {rules::FArgFunc, rules::FArgNum});
    auto node = make_node(Nt::FArg, r);
    if (r == rules::FArgFunc)
      node->add(function_eval());
    else
      node->add(make_node(Nt::Number, 0, p.pick_token("num_fcomp", rng, default_numbers("num_fcomp"))));
    return node;
  }

  NodePtr fcomp() {
    int r = p.pick_rule(Nt::FComp, rng, {rules::FCompBinary, rules::FCompEq});
    auto node = make_node(Nt::FComp, r);
    if (r == rules::FCompBinary) {
      node->token = p.pick_token("fcomp_op", rng, binary_comp_ops());
      node->add(farg());
      node->add(farg());
    } else {
      node->token = "=";
      int n = p.pick_arity(Nt::FComp, rules::FCompEq, 2, rng);
      for (int i = 0; i < n; ++i) node->add(farg());
    }
    return node;
  }

  NodePtr type_leaf(TermClass cls) {
    std::string leaf;
    switch (cls) {
      case TermClass::Object: leaf = p.pick_token("type_obj", rng, all_object_types()); break;
      case TermClass::ColorClass: leaf = p.pick_token("type_color", rng, color_tokens()); break;
      case TermClass::OrientationClass:
        leaf = p.pick_token("type_orientation", rng, orientation_tokens());
        break;
      default: leaf = p.pick_token("type_side", rng, side_tokens()); break;
    }
    return make_node(Nt::TypeLeaf, 0, leaf);
  }

  NodePtr type_def(TermClass cls) {
    int r = p.pick_rule(Nt::TypeDef, rng, {rules::TypeSingle, rules::TypeEither});
    auto node = make_node(Nt::TypeDef, r);
    auto pick_leaf = [&]() -> std::string {
      switch (cls) {
        case TermClass::Object: return p.pick_token("type_obj", rng, all_object_types());
        case TermClass::ColorClass: return p.pick_token("type_color", rng, color_tokens());
        case TermClass::OrientationClass:
          return p.pick_token("type_orientation", rng, orientation_tokens());
        default: return p.pick_token("type_side", rng, side_tokens());
      }
    };
    if (r == rules::TypeSingle) {
      std::string leaf;
      switch (cls) {
        case TermClass::Object: leaf = pick_leaf(); break;
        case TermClass::ColorClass: leaf = "color"; break;
        case TermClass::OrientationClass: leaf = "orientation"; break;
        default: leaf = "side"; break;
      }
      node->add(make_node(Nt::TypeLeaf, 0, leaf));
    } else {
      int n = p.pick_arity(Nt::TypeDef, rules::TypeEither, 2, rng);
      for (int i = 0; i < n; ++i) node->add(make_node(Nt::TypeLeaf, 0, pick_leaf()));
    }
    return node;
  }

  NodePtr var_def(TermClass cls) {
    int r;
    switch (cls) {
      case TermClass::Object: r = rules::VarObject; break;
      case TermClass::ColorClass: r = rules::VarColor; break;
      case TermClass::OrientationClass: r = rules::VarOrientation; break;
      default: r = rules::VarSide; break;
    }
    auto node = make_node(Nt::VarDef, r);
    int nvars = p.pick_arity(Nt::VarDef, r, 1, rng);
    nvars = std::min(nvars, 3);
    for (int i = 0; i < nvars; ++i) {
      std::string name = fresh_var(cls);
      scope.vars.emplace_back(name, cls);
      node->add(make_node(Nt::Variable, 0, name));
    }
    node->add(type_def(cls));
    return node;
  }

  // Samples a variable list of object-class definitions and pushes them into
  // scope; callers pop scope afterwards.
  NodePtr var_list() {
    auto node = make_node(Nt::VarList);
    int ndefs = std::min(p.pick_arity(Nt::VarList, 0, 1, rng), 3);
    for (int i = 0; i < ndefs; ++i) node->add(var_def(TermClass::Object));
    return node;
  }

  NodePtr super(int budget) {
    std::vector<int> allowed;
    if (budget <= 3) {
      allowed = {rules::SuperComp, rules::SuperPred};
    } else {
      allowed = {rules::SuperAnd, rules::SuperOr,   rules::SuperNot, rules::SuperExists,
                 rules::SuperForall, rules::SuperComp, rules::SuperPred};
    }
    int r = p.pick_rule(Nt::Super, rng, allowed);
    auto node = make_node(Nt::Super, r);
    switch (r) {
      case rules::SuperAnd:
      case rules::SuperOr: {
        int n = p.pick_arity(Nt::Super, r, r == rules::SuperAnd ? 2 : 2, rng);
        n = std::min(n, 4);
        for (int i = 0; i < n; ++i) node->add(super(budget - 1));
        break;
      }
      case rules::SuperNot: node->add(super(budget - 1)); break;
      case rules::SuperExists:
      case rules::SuperForall: {
        size_t mark = scope.vars.size();
        node->add(var_list());
        node->add(super(budget - 1));
        scope.vars.resize(mark);
        break;
      }
      case rules::SuperComp: node->add(fcomp()); break;
      default: node->add(predicate()); break;
    }
    return node;
  }

  NodePtr setup(int budget) {
    std::vector<int> allowed;
    if (budget <= 4) {
      allowed = {rules::SetupStmt};
    } else {
      allowed = {rules::SetupAnd, rules::SetupOr,     rules::SetupNot,
                 rules::SetupExists, rules::SetupForall, rules::SetupStmt};
    }
    int r = p.pick_rule(Nt::Setup, rng, allowed);
    auto node = make_node(Nt::Setup, r);
    switch (r) {
      case rules::SetupAnd:
      case rules::SetupOr: {
        int n = std::min(p.pick_arity(Nt::Setup, r, 2, rng), 4);
        for (int i = 0; i < n; ++i) node->add(setup(budget - 1));
        break;
      }
      case rules::SetupNot: node->add(setup(budget - 1)); break;
      case rules::SetupExists:
      case rules::SetupForall: {
        size_t mark = scope.vars.size();
        node->add(var_list());
        node->add(setup(budget - 1));
        scope.vars.resize(mark);
        break;
      }
      default: {
        auto stmt = make_node(Nt::SetupStatement,
                              p.pick_rule(Nt::SetupStatement, rng, {rules::Conserved, rules::Optional}));
        stmt->add(super(budget - 2));
        node->add(std::move(stmt));
        break;
      }
    }
    return node;
  }

  NodePtr seq_func(int budget) {
    int r = p.pick_rule(Nt::SeqFunc, rng,
                        {rules::SeqOnce, rules::SeqOnceMeasure, rules::SeqHold, rules::SeqHoldWhile});
    auto node = make_node(Nt::SeqFunc, r);
    node->add(super(budget - 1));
    if (r == rules::SeqOnceMeasure) {
      node->add(function_eval());
    } else if (r == rules::SeqHoldWhile) {
      int n = std::min(p.pick_arity(Nt::SeqFunc, rules::SeqHoldWhile, 2, rng), 4);
      for (int i = 1; i < n; ++i) node->add(super(budget - 1));
    }
    return node;
  }

  NodePtr pref_body(int budget) {
    int r = p.pick_rule(Nt::PrefBody, rng, {rules::BodyThen, rules::BodyAtEnd});
    auto node = make_node(Nt::PrefBody, r);
    if (r == rules::BodyThen) {
      auto then = make_node(Nt::Then);
      int n = std::min(p.pick_arity(Nt::Then, 0, 2, rng), 5);
      for (int i = 0; i < n; ++i) then->add(seq_func(budget - 1));
      node->add(std::move(then));
    } else {
      auto at_end = make_node(Nt::AtEnd);
      at_end->add(super(budget - 1));
      node->add(std::move(at_end));
    }
    return node;
  }

  NodePtr preference(const std::string& name, int budget) {
    auto node = make_node(Nt::Preference, 0, name);
    int r = p.pick_rule(Nt::PrefQuant, rng, {rules::QuantExists, rules::QuantForall, rules::QuantNone});
    // an unquantified preference has no variables to mention; require some
    if (r == rules::QuantNone && scope.vars.empty()) r = rules::QuantExists;
    auto quant = make_node(Nt::PrefQuant, r);
    size_t mark = scope.vars.size();
    if (r != rules::QuantNone) quant->add(var_list());
    quant->add(pref_body(budget - 1));
    scope.vars.resize(mark);
    node->add(std::move(quant));
    return node;
  }

  NodePtr pref_def(const std::string& name, int budget) {
    int r = p.pick_rule(Nt::PrefDef, rng, {rules::PrefPlain, rules::PrefForallDef});
    auto node = make_node(Nt::PrefDef, r);
    size_t mark = scope.vars.size();
    if (r == rules::PrefForallDef) {
      auto vl = var_list();
      std::vector<std::string> ext_types;
      for (const auto& def : vl->children) {
        const Node& td = *def->children.back();
        for (size_t i = 0; i + 1 < def->children.size(); ++i)
          ext_types.push_back(td.children[0]->token);
      }
      forall_externals[name] = ext_types;
      node->add(std::move(vl));
    }
    node->add(preference(name, budget - 1));
    scope.vars.resize(mark);
    scope.pref_names.push_back(name);
    return node;
  }

  NodePtr pref_eval(int) {
    std::vector<int> modes = {rules::Count,        rules::CountOverlapping,
                              rules::CountOnce,    rules::CountOncePerObjects,
                              rules::CountMeasure, rules::CountUniquePositions,
                              rules::CountSamePositions, rules::CountOncePerExternalObjects};
    int mode = p.pick_rule(Nt::PrefEval, rng, modes);
    std::string name;
    if (mode == rules::CountMeasure) {
      if (scope.measured_prefs.empty())
        mode = rules::Count;
      else
        name = choose(rng, scope.measured_prefs);
    }
    if (name.empty()) name = choose(rng, scope.pref_names);
    auto node = make_node(Nt::PrefEval, mode, std::string(count_mode_keyword(mode)));
    auto ref = make_node(Nt::PrefRef, 0, name);
    auto it = forall_externals.find(name);
    if (it != forall_externals.end() && !it->second.empty()) {
      int nq = p.pick_arity(Nt::PrefRef, 0, 0, rng);
      nq = std::min<int>(nq, static_cast<int>(it->second.size()));
      for (int i = 0; i < nq; ++i) {
        auto subs = subtypes_of(it->second[static_cast<size_t>(i)]);
        if (subs.empty()) subs = {it->second[static_cast<size_t>(i)]};
        ref->add(make_node(Nt::TypeLeaf, 0, std::string(choose(rng, subs))));
      }
    }
    node->add(std::move(ref));
    return node;
  }

  NodePtr scoring_expr(int budget) {
    if (scope.pref_names.empty())
      return number_expr();
    std::vector<int> allowed;
    if (budget <= 2) {
      allowed = {rules::ScorePrefEval, rules::ScoreNumber};
    } else {
      allowed = {rules::ScoreExtMax, rules::ScoreExtMin,   rules::ScoreMulti,
                 rules::ScoreBinary, rules::ScoreNeg,      rules::ScoreTotalTime,
                 rules::ScoreTotalScore, rules::ScoreCompRule, rules::ScorePrefEval,
                 rules::ScoreNumber};
    }
    int r = p.pick_rule(Nt::ScoringExpr, rng, allowed);
    // external-forall wrappers only make sense when a forall preference exists
    if ((r == rules::ScoreExtMax || r == rules::ScoreExtMin) && forall_externals.empty())
      r = rules::ScorePrefEval;
    auto node = make_node(Nt::ScoringExpr, r);
    switch (r) {
      case rules::ScoreExtMax:
      case rules::ScoreExtMin:
      case rules::ScoreNeg: node->add(scoring_expr(budget - 1)); break;
      case rules::ScoreMulti: {
        node->token = p.pick_token("multi_op", rng, {"+", "*"});
        int n = std::min(p.pick_arity(Nt::ScoringExpr, rules::ScoreMulti, 2, rng), 4);
        for (int i = 0; i < n; ++i) node->add(scoring_expr(budget - 1));
        break;
      }
      case rules::ScoreBinary:
        node->token = p.pick_token("binary_op", rng, {"-", "/"});
        node->add(scoring_expr(budget - 1));
        node->add(scoring_expr(budget - 1));
        break;
      case rules::ScoreCompRule: {
        int cr = p.pick_rule(Nt::ScoringComp, rng, {rules::SCompBinary, rules::SCompEq});
        auto comp = make_node(Nt::ScoringComp, cr);
        if (cr == rules::SCompBinary) {
          comp->token = p.pick_token("scoring_comp_op", rng, binary_comp_ops());
          comp->add(scoring_expr(budget - 1));
          comp->add(scoring_expr(budget - 1));
        } else {
          comp->token = "=";
          int n = p.pick_arity(Nt::ScoringComp, rules::SCompEq, 2, rng);
          for (int i = 0; i < n; ++i) comp->add(scoring_expr(budget - 1));
        }
        node->add(std::move(comp));
        break;
      }
      case rules::ScorePrefEval: node->add(pref_eval(budget - 1)); break;
      case rules::ScoreNumber:
        node->add(make_node(Nt::Number, 0, p.pick_token("num_scoring", rng, default_numbers("num_scoring"))));
        break;
      default: break;  // total-time / total-score take no children
    }
    return node;
  }

  NodePtr number_expr() {
    auto node = make_node(Nt::ScoringExpr, rules::ScoreNumber);
    node->add(make_node(Nt::Number, 0, p.pick_token("num_scoring", rng, default_numbers("num_scoring"))));
    return node;
  }

  NodePtr terminal(int budget) {
    std::vector<int> allowed;
    if (budget <= 3) {
      allowed = {rules::TerminalCompRule};
    } else {
      allowed = {rules::TerminalAnd, rules::TerminalOr, rules::TerminalNot, rules::TerminalCompRule};
    }
    int r = p.pick_rule(Nt::Terminal, rng, allowed);
    auto node = make_node(Nt::Terminal, r);
    switch (r) {
      case rules::TerminalAnd:
      case rules::TerminalOr: {
        int n = std::min(p.pick_arity(Nt::Terminal, r, 2, rng), 3);
        for (int i = 0; i < n; ++i) node->add(terminal(budget - 1));
        break;
      }
      case rules::TerminalNot: node->add(terminal(budget - 1)); break;
      default: node->add(terminal_comp(budget)); break;
    }
    return node;
  }

  NodePtr terminal_comp(int budget) {
    int r = p.pick_rule(Nt::TerminalComp, rng,
                        {rules::CompTime, rules::CompScore, rules::CompPrefCount});
    auto node = make_node(Nt::TerminalComp, r,
                          p.pick_token("terminal_op", rng, comp_ops()));
    if (r == rules::CompTime) {
      node->add(make_node(Nt::Number, 0, p.pick_token("num_time", rng, default_numbers("num_time"))));
    } else if (r == rules::CompScore) {
      node->add(make_node(Nt::Number, 0, p.pick_token("num_score", rng, default_numbers("num_score"))));
    } else {
      node->add(scoring_expr(std::min(budget - 1, 3)));
      node->add(make_node(Nt::Number, 0,
                          p.pick_token("num_prefcount", rng, default_numbers("num_prefcount"))));
    }
    return node;
  }
};

GameAst Pcfg::sample_game(Rng& rng, const std::string& name) const {
  for (int attempt = 0; attempt < params_.resample_tries; ++attempt) {
    Sampler s(*this, rng);
    auto root = make_node(Nt::Game);
    // later attempts force shallower trees, the last one always fits the cap
    int budget = std::max(8, params_.max_depth - 2 * attempt);

    auto setup_section = make_node(Nt::SetupSection,
                                   pick_rule(Nt::SetupSection, rng, {rules::SectionAbsent, rules::SectionPresent}));
    if (setup_section->rule == rules::SectionPresent)
      setup_section->add(s.setup(budget - 2));
    root->add(std::move(setup_section));

    auto constraints = make_node(Nt::Constraints);
    int nprefs = std::min(pick_arity(Nt::Constraints, 0, 1, rng), 6);
    for (int i = 0; i < nprefs; ++i) {
      std::string pref_name = "preference" + std::to_string(i);
      auto def = s.pref_def(pref_name, budget - 2);
      bool measured = false;
      visit(*def, [&](const Node& n) {
        if (n.nt == Nt::SeqFunc && n.rule == rules::SeqOnceMeasure) measured = true;
      });
      if (measured) s.scope.measured_prefs.push_back(pref_name);
      constraints->add(std::move(def));
    }
    root->add(std::move(constraints));

    auto terminal_section = make_node(Nt::TerminalSection,
                                      pick_rule(Nt::TerminalSection, rng, {rules::SectionAbsent, rules::SectionPresent}));
    if (terminal_section->rule == rules::SectionPresent)
      terminal_section->add(s.terminal(std::min(budget - 2, 6)));
    root->add(std::move(terminal_section));

    auto scoring = make_node(Nt::Scoring);
    scoring->add(s.scoring_expr(std::min(budget - 2, 8)));
    root->add(std::move(scoring));

    if (root->depth() <= params_.max_depth || attempt + 1 == params_.resample_tries)
      return GameAst(name, pick_token("domain", rng, {"room-v1"}), std::move(root));
  }
  throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------------------
// Scope reconstruction and regrowth

Scope Pcfg::scope_at(const GameAst& game, int node_id) {
  Scope scope;
  for (const Node* def : preference_defs(game)) {
    scope.pref_names.emplace_back(preference_name(*def));
    bool measured = false;
    visit(*def, [&](const Node& n) {
      if (n.nt == Nt::SeqFunc && n.rule == rules::SeqOnceMeasure) measured = true;
    });
    if (measured) scope.measured_prefs.emplace_back(preference_name(*def));
  }

  // collect the chain from root to target
  std::vector<const Node*> path;
  {
    const Node* target = game.node_by_id(node_id);
    if (!target) return scope;
    const Node* cur = target;
    while (cur) {
      path.push_back(cur);
      cur = game.parent_of(cur->id);
    }
    std::reverse(path.begin(), path.end());
  }

  auto push_vars = [&scope](const Node& varList) {
    for (const auto& def : varList.children)
      for (size_t i = 0; i + 1 < def->children.size(); ++i)
        scope.vars.emplace_back(def->children[i]->token, vardef_class(def->rule));
  };

  for (size_t i = 0; i + 1 < path.size(); ++i) {
    const Node& n = *path[i];
    const Node* next = path[i + 1];
    bool in_body = !n.children.empty() && n.children.back().get() == next;
    switch (n.nt) {
      case Nt::Setup:
        if ((n.rule == rules::SetupExists || n.rule == rules::SetupForall) && in_body)
          push_vars(*n.children[0]);
        break;
      case Nt::Super:
        if ((n.rule == rules::SuperExists || n.rule == rules::SuperForall) && in_body)
          push_vars(*n.children[0]);
        break;
      case Nt::PrefDef:
        if (n.rule == rules::PrefForallDef && in_body) push_vars(*n.children[0]);
        break;
      case Nt::PrefQuant:
        if (n.rule != rules::QuantNone && in_body) push_vars(*n.children[0]);
        break;
      default: break;
    }
  }
  return scope;
}

std::vector<int> Pcfg::regrow_targets(const GameAst& game) const {
  std::vector<int> out;
  visit(game.root(), [&](const Node& n) {
    switch (n.nt) {
      case Nt::Game:
      case Nt::SetupSection:
      case Nt::TerminalSection:
      case Nt::Scoring: return;
      default: out.push_back(n.id);
    }
  });
  return out;
}

namespace {

int node_path_depth(const GameAst& game, int node_id) {
  int depth = 0;
  const Node* cur = game.node_by_id(node_id);
  while (cur) {
    ++depth;
    cur = game.parent_of(cur->id);
  }
  return depth;
}

void collect_forall_externals(const GameAst& game,
                              std::map<std::string, std::vector<std::string>>* out) {
  for (const Node* def : preference_defs(game)) {
    if (def->rule != rules::PrefForallDef) continue;
    std::vector<std::string> types;
    for (const auto& vd : def->children[0]->children) {
      const Node& td = *vd->children.back();
      for (size_t i = 0; i + 1 < vd->children.size(); ++i)
        types.push_back(td.children[0]->token);
    }
    (*out)[std::string(preference_name(*def))] = types;
  }
}

}  // namespace

GameAst Pcfg::regrow(const GameAst& game, int node_id, Rng& rng) const {
  GameAst out = game;
  out.reindex();
  Node* target = out.node_by_id(node_id);
  Node* parent = out.parent_of(node_id);
  if (!target || !parent) throw std::invalid_argument("regrow target must be a non-root node");

  Sampler s(*this, rng);
  s.scope = scope_at(out, node_id);
  collect_forall_externals(out, &s.forall_externals);
  // continue fresh-variable numbering past anything already in the game
  visit(out.root(), [&](const Node& n) {
    if (n.nt != Nt::Variable && !(n.nt == Nt::Term && n.rule == rules::TermVariable)) return;
    const std::string& v = n.token;
    if (v.size() > 2 && v[1] == 'v') s.fresh_obj = std::max(s.fresh_obj, std::atoi(v.c_str() + 2) + 1);
  });

  int budget = std::max(4, params_.max_depth - node_path_depth(out, node_id));
  NodePtr repl;
  switch (target->nt) {
    case Nt::Setup: repl = s.setup(budget); break;
    case Nt::SetupStatement: {
      repl = make_node(Nt::SetupStatement,
                       pick_rule(Nt::SetupStatement, rng, {rules::Conserved, rules::Optional}));
      repl->add(s.super(budget - 1));
      break;
    }
    case Nt::Super: repl = s.super(budget); break;
    case Nt::FComp: repl = s.fcomp(); break;
    case Nt::FArg: repl = s.farg(); break;
    case Nt::FunctionEval: repl = s.function_eval(); break;
    case Nt::Predicate: repl = s.predicate(); break;
    case Nt::Term: {
      const std::vector<ArgKind>* args = signature_args(*parent);
      ArgKind kind = ArgKind::Object;
      if (args)
        for (size_t i = 0; i < parent->children.size(); ++i)
          if (parent->children[i].get() == target) kind = (*args)[i];
      repl = s.term(kind);
      break;
    }
    case Nt::Number:
      repl = make_node(Nt::Number, 0,
                       pick_token(number_pool_for_parent(*parent), rng,
                                  default_numbers(number_pool_for_parent(*parent))));
      break;
    case Nt::VarList: repl = s.var_list(); break;
    case Nt::VarDef: repl = s.var_def(vardef_class(target->rule)); break;
    case Nt::Variable:
      repl = make_node(Nt::Variable, 0, s.fresh_var(vardef_class(parent->rule)));
      break;
    case Nt::TypeDef:
      repl = s.type_def(parent->nt == Nt::VarDef ? vardef_class(parent->rule) : TermClass::Object);
      break;
    case Nt::TypeLeaf: {
      if (parent->nt == Nt::PrefRef) {
        repl = make_node(Nt::TypeLeaf, 0, pick_token("type_obj", rng, all_object_types()));
      } else {
        TermClass cls = TermClass::Object;
        Node* vd = out.parent_of(parent->id);
        if (vd && vd->nt == Nt::VarDef) cls = vardef_class(vd->rule);
        repl = s.type_leaf(cls);
      }
      break;
    }
    case Nt::Constraints: {
      repl = make_node(Nt::Constraints);
      int nprefs = std::min(pick_arity(Nt::Constraints, 0, 1, rng), 6);
      for (int i = 0; i < nprefs; ++i)
        repl->add(s.pref_def("preference" + std::to_string(i), budget - 1));
      break;
    }
    case Nt::PrefDef: repl = s.pref_def(std::string(preference_name(*target)), budget); break;
    case Nt::Preference: repl = s.preference(target->token, budget); break;
    case Nt::PrefQuant: {
      auto pref = s.preference("tmp", budget + 1);
      repl = std::move(pref->children[0]);
      break;
    }
    case Nt::PrefBody: repl = s.pref_body(budget); break;
    case Nt::AtEnd:
      repl = make_node(Nt::AtEnd);
      repl->add(s.super(budget - 1));
      break;
    case Nt::Then: {
      repl = make_node(Nt::Then);
      int n = std::min(pick_arity(Nt::Then, 0, 2, rng), 5);
      for (int i = 0; i < n; ++i) repl->add(s.seq_func(budget - 1));
      break;
    }
    case Nt::SeqFunc: repl = s.seq_func(budget); break;
    case Nt::Terminal: repl = s.terminal(budget); break;
    case Nt::TerminalComp: repl = s.terminal_comp(budget); break;
    case Nt::ScoringExpr: repl = s.scoring_expr(std::min(budget, 8)); break;
    case Nt::ScoringComp: {
      auto expr = s.scoring_expr(3);
      if (expr->rule == rules::ScoreCompRule) {
        repl = std::move(expr->children[0]);
      } else {
        repl = make_node(Nt::ScoringComp, rules::SCompBinary, ">=");
        repl->add(std::move(expr));
        repl->add(s.number_expr());
      }
      break;
    }
    case Nt::PrefEval: repl = s.pref_eval(2); break;
    case Nt::PrefRef: {
      auto eval = s.pref_eval(2);
      repl = std::move(eval->children[0]);
      break;
    }
    default: throw std::invalid_argument("node kind cannot be regrown");
  }

  for (auto& c : parent->children) {
    if (c.get() == target) {
      c = std::move(repl);
      break;
    }
  }
  out.reindex();
  return out;
}

NodePtr Pcfg::sample_setup_body(const Scope& scope, Rng& rng) const {
  Sampler s(*this, rng);
  s.scope = scope;
  return s.setup(params_.max_depth - 2);
}

NodePtr Pcfg::sample_terminal_body(const Scope& scope, Rng& rng) const {
  Sampler s(*this, rng);
  s.scope = scope;
  return s.terminal(6);
}

NodePtr Pcfg::sample_super(const Scope& scope, Rng& rng, int budget) const {
  Sampler s(*this, rng);
  s.scope = scope;
  return s.super(budget);
}

NodePtr Pcfg::sample_seq_func(const Scope& scope, Rng& rng) const {
  Sampler s(*this, rng);
  s.scope = scope;
  return s.seq_func(8);
}

NodePtr Pcfg::sample_pref_def(Scope* scope, Rng& rng, const std::string& name) const {
  Sampler s(*this, rng);
  s.scope = *scope;
  auto def = s.pref_def(name, params_.max_depth - 2);
  *scope = s.scope;
  return def;
}

NodePtr Pcfg::sample_type_def(TermClass cls, Rng& rng) const {
  Sampler s(*this, rng);
  return s.type_def(cls);
}

NodePtr Pcfg::sample_var_def(TermClass cls, Rng& rng, int* fresh_counter) const {
  Sampler s(*this, rng);
  s.fresh_obj = *fresh_counter;
  auto def = s.var_def(cls);
  *fresh_counter = s.fresh_obj;
  return def;
}

NodePtr Pcfg::sample_scoring_expr(const Scope& scope, Rng& rng, int budget) const {
  Sampler s(*this, rng);
  s.scope = scope;
  return s.scoring_expr(budget);
}

NodePtr Pcfg::sample_child_for(const GameAst& game, const Node& parent, Rng& rng) const {
  Sampler s(*this, rng);
  s.scope = scope_at(game, parent.id);
  collect_forall_externals(game, &s.forall_externals);
  int budget = std::max(4, params_.max_depth - node_path_depth(game, parent.id));
  switch (parent.nt) {
    case Nt::Setup:
      if (parent.rule == rules::SetupAnd || parent.rule == rules::SetupOr)
        return s.setup(budget - 1);
      return nullptr;
    case Nt::Super:
      if (parent.rule == rules::SuperAnd || parent.rule == rules::SuperOr)
        return s.super(budget - 1);
      return nullptr;
    case Nt::SeqFunc:
      if (parent.rule == rules::SeqHoldWhile) return s.super(budget - 1);
      return nullptr;
    case Nt::Then: return s.seq_func(budget - 1);
    case Nt::Constraints: {
      std::set<std::string> used(s.scope.pref_names.begin(), s.scope.pref_names.end());
      int i = 0;
      while (used.count("preference" + std::to_string(i))) ++i;
      return s.pref_def("preference" + std::to_string(i), budget - 1);
    }
    case Nt::Terminal:
      if (parent.rule == rules::TerminalAnd || parent.rule == rules::TerminalOr)
        return s.terminal(budget - 1);
      return nullptr;
    case Nt::ScoringExpr:
      if (parent.rule == rules::ScoreMulti) return s.scoring_expr(std::min(budget - 1, 4));
      return nullptr;
    case Nt::ScoringComp:
      if (parent.rule == rules::SCompEq) return s.scoring_expr(std::min(budget - 1, 4));
      return nullptr;
    case Nt::FComp:
      if (parent.rule == rules::FCompEq) return s.farg();
      return nullptr;
    case Nt::VarList: return s.var_def(TermClass::Object);
    case Nt::TypeDef:
      if (parent.rule == rules::TypeEither) {
        TermClass cls = TermClass::Object;
        Node* vd = game.parent_of(parent.id);
        if (vd && vd->nt == Nt::VarDef) cls = vardef_class(vd->rule);
        return s.type_leaf(cls);
      }
      return nullptr;
    default: return nullptr;
  }
}

// ---------------------------------------------------------------------------
// Serialization

std::string Pcfg::to_json() const {
  nlohmann::json j;
  j["max_depth"] = params_.max_depth;
  nlohmann::json rules = nlohmann::json::array();
  for (const auto& [key, count] : rules_)
    rules.push_back({key.first, key.second, count});
  j["rules"] = std::move(rules);
  nlohmann::json arities = nlohmann::json::array();
  for (const auto& [key, hist] : arities_)
    for (const auto& [n, count] : hist)
      arities.push_back({key.first, key.second, n, count});
  j["arities"] = std::move(arities);
  nlohmann::json tokens;
  for (const auto& [pool, counts] : tokens_) {
    nlohmann::json p;
    for (const auto& [tok, count] : counts) p[tok] = count;
    tokens[pool] = std::move(p);
  }
  j["tokens"] = std::move(tokens);
  return j.dump();
}

Pcfg Pcfg::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  Pcfg out;
  out.params_.max_depth = j.at("max_depth").get<int>();
  for (const auto& entry : j.at("rules"))
    out.rules_[{entry[0].get<int>(), entry[1].get<int>()}] = entry[2].get<double>();
  for (const auto& entry : j.at("arities"))
    out.arities_[{entry[0].get<int>(), entry[1].get<int>()}][entry[2].get<int>()] =
        entry[3].get<double>();
  for (const auto& [pool, counts] : j.at("tokens").items())
    for (const auto& [tok, count] : counts.items())
      out.tokens_[pool][tok] = count.get<double>();
  return out;
}

}  // namespace goalgen
