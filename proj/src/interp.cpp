#include "goalgen/interp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "goalgen/printer.hpp"

namespace goalgen {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using Binding = std::map<std::string, std::string>;
using Domains = std::vector<std::pair<std::string, std::vector<std::string>>>;

struct Ctx {
  const TraceEval* eval;
  const Trace* trace;
  size_t n;
};

// Candidate values for every variable a VarList declares, in declaration
// order. Object variables range over the trace universe of their types;
// class variables over the literal vocabulary their type names.
Domains var_domains(const Node& varList, const Trace& trace) {
  Domains out;
  for (const auto& def : varList.children) {
    const Node& typeDef = *def->children.back();
    std::vector<std::string> values;
    auto add_unique = [&](const std::string& v) {
      if (std::find(values.begin(), values.end(), v) == values.end()) values.push_back(v);
    };
    for (const auto& leaf : typeDef.children) {
      switch (def->rule) {
        case rules::VarObject:
          for (const auto& id : trace.universe_of_type(leaf->token)) add_unique(id);
          break;
        case rules::VarColor:
          if (leaf->token == "color")
            for (auto t : color_tokens()) add_unique(std::string(t));
          else
            add_unique(leaf->token);
          break;
        case rules::VarOrientation:
          if (leaf->token == "orientation")
            for (auto t : orientation_tokens()) add_unique(std::string(t));
          else
            add_unique(leaf->token);
          break;
        case rules::VarSide:
          if (leaf->token == "side")
            for (auto t : side_tokens()) add_unique(std::string(t));
          else
            add_unique(leaf->token);
          break;
      }
    }
    for (size_t i = 0; i + 1 < def->children.size(); ++i)
      out.emplace_back(def->children[i]->token, values);
  }
  return out;
}

size_t domain_product(const Domains& domains, size_t cap) {
  size_t product = 1;
  for (const auto& [var, values] : domains) {
    if (values.empty()) return 0;
    if (product > cap / values.size() + 1) return cap + 1;
    product *= values.size();
    if (product > cap) return cap + 1;
  }
  return product;
}

// Binds a variable for the current scope, restoring any shadowed value.
class ScopedBind {
 public:
  ScopedBind(Binding& b, const std::string& key, const std::string& value) : b_(b), key_(key) {
    auto it = b.find(key);
    if (it != b.end()) old_ = it->second;
    b_[key] = value;
  }
  ~ScopedBind() {
    if (old_)
      b_[key_] = *old_;
    else
      b_.erase(key_);
  }

 private:
  Binding& b_;
  std::string key_;
  std::optional<std::string> old_;
};

void enumerate_bindings(const Domains& domains, size_t i, Binding& b,
                        const std::function<void(const Binding&)>& fn) {
  if (i == domains.size()) {
    fn(b);
    return;
  }
  for (const auto& v : domains[i].second) {
    ScopedBind bind(b, domains[i].first, v);
    enumerate_bindings(domains, i + 1, b, fn);
  }
}

std::string resolve_term(const Node& term, const Binding& b) {
  if (term.rule == rules::TermVariable) {
    auto it = b.find(term.token);
    return it == b.end() ? term.token : it->second;
  }
  return term.token;
}

bool compare_op(std::string_view op, double a, double c) {
  if (op == "<") return a < c;
  if (op == "<=") return a <= c;
  if (op == "=") return a == c;
  if (op == ">") return a > c;
  return a >= c;
}

bool eval_super(const Node& node, const Ctx& ctx, size_t state, Binding& b);

double eval_farg(const Node& farg, const Ctx& ctx, size_t state, const Binding& b) {
  if (farg.rule == rules::FArgNum) return std::stod(farg.children[0]->token);
  const Node& fe = *farg.children[0];
  std::vector<std::string> args;
  args.reserve(fe.children.size());
  for (const auto& t : fe.children) args.push_back(resolve_term(*t, b));
  return ctx.eval->eval_function(fe.token, args, state);
}

bool eval_fcomp(const Node& comp, const Ctx& ctx, size_t state, const Binding& b) {
  if (comp.rule == rules::FCompEq) {
    double first = eval_farg(*comp.children[0], ctx, state, b);
    for (size_t i = 1; i < comp.children.size(); ++i)
      if (!(eval_farg(*comp.children[i], ctx, state, b) == first)) return false;
    return true;
  }
  return compare_op(comp.token, eval_farg(*comp.children[0], ctx, state, b),
                    eval_farg(*comp.children[1], ctx, state, b));
}

bool eval_quantified(const Node& varList, const Node& body, bool isExists, const Ctx& ctx,
                     size_t state, Binding& b,
                     const std::function<bool(const Node&, size_t, Binding&)>& evalBody) {
  Domains domains = var_domains(varList, *ctx.trace);
  std::function<bool(size_t)> go = [&](size_t i) -> bool {
    if (i == domains.size()) return evalBody(body, state, b);
    for (const auto& v : domains[i].second) {
      ScopedBind bind(b, domains[i].first, v);
      if (go(i + 1) == isExists) return isExists;
    }
    return !isExists;
  };
  return go(0);
}

bool eval_super(const Node& node, const Ctx& ctx, size_t state, Binding& b) {
  switch (node.rule) {
    case rules::SuperAnd:
      for (const auto& c : node.children)
        if (!eval_super(*c, ctx, state, b)) return false;
      return true;
    case rules::SuperOr:
      for (const auto& c : node.children)
        if (eval_super(*c, ctx, state, b)) return true;
      return false;
    case rules::SuperNot:
      return !eval_super(*node.children[0], ctx, state, b);
    case rules::SuperExists:
    case rules::SuperForall:
      return eval_quantified(*node.children[0], *node.children[1],
                             node.rule == rules::SuperExists, ctx, state, b,
                             [&ctx](const Node& body, size_t s, Binding& bb) {
                               return eval_super(body, ctx, s, bb);
                             });
    case rules::SuperComp:
      return eval_fcomp(*node.children[0], ctx, state, b);
    case rules::SuperPred: {
      const Node& pred = *node.children[0];
      std::vector<std::string> args;
      args.reserve(pred.children.size());
      for (const auto& t : pred.children) args.push_back(resolve_term(*t, b));
      return ctx.eval->eval_predicate(pred.token, args, state);
    }
  }
  return false;
}

// Matches the sequence functions of a `then` body against the trace for one
// fixed binding. match(i, p) yields, for stages i.. started at state p, every
// reachable end (exclusive) with the recorded measure value, memoized.
struct StageMatcher {
  const Ctx* ctx;
  std::vector<const Node*> stages;
  Binding* b;
  std::map<std::pair<size_t, size_t>, std::vector<std::pair<size_t, double>>> memo;

  bool main_holds(size_t i, size_t state) {
    return eval_super(*stages[i]->children[0], *ctx, state, *b);
  }

  bool secondaries_fit(size_t i, size_t from, size_t to) {
    size_t k = from;
    for (size_t s = 1; s < stages[i]->children.size(); ++s) {
      const Node& sec = *stages[i]->children[s];
      while (k < to && !eval_super(sec, *ctx, k, *b)) ++k;
      if (k >= to) return false;
      ++k;
    }
    return true;
  }

  std::vector<std::pair<size_t, double>> match(size_t i, size_t p) {
    auto key = std::make_pair(i, p);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    std::vector<std::pair<size_t, double>> out;
    size_t n = ctx->n;
    if (i == stages.size()) {
      out.emplace_back(p, kNaN);
    } else {
      const Node& st = *stages[i];
      bool last = i + 1 == stages.size();
      switch (st.rule) {
        case rules::SeqOnce:
        case rules::SeqOnceMeasure:
          if (p < n && main_holds(i, p)) {
            out = match(i + 1, p + 1);
            if (st.rule == rules::SeqOnceMeasure) {
              Binding& bb = *b;
              std::vector<std::string> args;
              const Node& fe = *st.children[1];
              for (const auto& t : fe.children) args.push_back(resolve_term(*t, bb));
              double m = ctx->eval->eval_function(fe.token, args, p);
              for (auto& e : out)
                if (std::isnan(e.second)) e.second = m;
            }
          }
          break;
        case rules::SeqHold: {
          size_t q = p;
          while (true) {
            if (!(last && q == p)) {
              auto next = match(i + 1, q);
              out.insert(out.end(), next.begin(), next.end());
            }
            if (q < n && main_holds(i, q))
              ++q;
            else
              break;
          }
          break;
        }
        case rules::SeqHoldWhile: {
          size_t q = p;
          while (true) {
            if (q > p && secondaries_fit(i, p, q)) {
              auto next = match(i + 1, q);
              out.insert(out.end(), next.begin(), next.end());
            }
            if (q < n && main_holds(i, q))
              ++q;
            else
              break;
          }
          break;
        }
      }
      // one entry per end; a recorded measure wins over none
      std::map<size_t, double> byEnd;
      for (const auto& [end, m] : out) {
        auto at = byEnd.find(end);
        if (at == byEnd.end())
          byEnd[end] = m;
        else if (std::isnan(at->second) && !std::isnan(m))
          at->second = m;
      }
      out.assign(byEnd.begin(), byEnd.end());
    }
    memo[key] = out;
    return out;
  }
};

std::string binding_repr(const Binding& b) {
  std::string out;
  for (const auto& [k, v] : b) {
    out += k;
    out += '=';
    out += v;
    out += ';';
  }
  return out;
}

// Satisfactions of one preference body under one fixed binding, starting at
// or after `from`. Keeps the tightest interval (largest start) per end state.
std::vector<Satisfaction> match_body(const Node& body, const Ctx& ctx, Binding& b, int from) {
  std::vector<Satisfaction> out;
  size_t n = ctx.n;
  if (n == 0) return out;
  if (body.rule == rules::BodyAtEnd) {
    const Node& super = *body.children[0]->children[0];
    if (eval_super(super, ctx, n - 1, b)) {
      Satisfaction s;
      s.start = s.end = static_cast<int>(n) - 1;
      out.push_back(std::move(s));
    }
    return out;
  }
  const Node& then = *body.children[0];
  StageMatcher matcher;
  matcher.ctx = &ctx;
  matcher.b = &b;
  for (const auto& sf : then.children) matcher.stages.push_back(sf.get());
  std::map<int, std::pair<int, double>> best;  // end -> (start, measure)
  for (size_t s = static_cast<size_t>(std::max(from, 0)); s < n; ++s) {
    for (const auto& [endex, m] : matcher.match(0, s)) {
      int end = static_cast<int>(endex) - 1;
      auto it = best.find(end);
      if (it == best.end() || static_cast<int>(s) > it->second.first)
        best[end] = {static_cast<int>(s), m};
    }
  }
  for (const auto& [end, sm] : best) {
    Satisfaction s;
    s.start = sm.first;
    s.end = end;
    s.measure = sm.second;
    out.push_back(std::move(s));
  }
  return out;
}

struct PrefShape {
  std::string name;
  const Node* externalVars = nullptr;  // VarList of a forall wrapper
  const Node* quantVars = nullptr;     // VarList of the body quantifier
  int quantRule = rules::QuantNone;
  const Node* body = nullptr;  // PrefBody
};

PrefShape pref_shape(const Node& prefDef) {
  PrefShape shape;
  const Node* pref = prefDef.children.back().get();
  if (prefDef.rule == rules::PrefForallDef) shape.externalVars = prefDef.children[0].get();
  shape.name = pref->token;
  const Node& quant = *pref->children[0];
  shape.quantRule = quant.rule;
  if (quant.rule == rules::QuantNone) {
    shape.body = quant.children[0].get();
  } else {
    shape.quantVars = quant.children[0].get();
    shape.body = quant.children[1].get();
  }
  return shape;
}

// Variables of a preference in quantification order: body quantifier first,
// then any forall wrapper. Position-based count modes target the first one.
std::vector<std::string> pref_variable_order(const Node& prefDef) {
  PrefShape shape = pref_shape(prefDef);
  std::vector<std::string> out;
  auto collect = [&out](const Node* varList) {
    if (!varList) return;
    for (const auto& def : varList->children)
      for (size_t i = 0; i + 1 < def->children.size(); ++i)
        out.push_back(def->children[i]->token);
  };
  collect(shape.quantVars);
  collect(shape.externalVars);
  return out;
}

std::vector<std::string> external_variable_order(const Node& prefDef) {
  PrefShape shape = pref_shape(prefDef);
  std::vector<std::string> out;
  if (shape.externalVars)
    for (const auto& def : shape.externalVars->children)
      for (size_t i = 0; i + 1 < def->children.size(); ++i)
        out.push_back(def->children[i]->token);
  return out;
}

bool position_at(const Trace& trace, const std::string& id, size_t state,
                 std::array<double, 3>* out) {
  const WorldState& ws = trace.state(state);
  if (id == "agent") {
    *out = ws.agent.pos;
    return true;
  }
  auto it = ws.objects.find(id);
  if (it != ws.objects.end()) {
    *out = it->second.pos;
    return true;
  }
  for (const Building& bld : trace.buildings(state)) {
    if (bld.id != id) continue;
    std::array<double, 3> sum{};
    for (const auto& m : bld.members) {
      auto mo = ws.objects.find(m);
      if (mo == ws.objects.end()) return false;
      for (int k = 0; k < 3; ++k) sum[k] += mo->second.pos[k];
    }
    for (int k = 0; k < 3; ++k) (*out)[k] = sum[k] / static_cast<double>(bld.members.size());
    return true;
  }
  return false;
}

double dist3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Centroid of the target object over the satisfaction interval, when the
// object stays within `eps` of its first position throughout.
bool stationary_centroid(const Trace& trace, const std::string& id, const Satisfaction& s,
                         double eps, std::array<double, 3>* centroid) {
  std::array<double, 3> first{};
  if (!position_at(trace, id, static_cast<size_t>(s.start), &first)) return false;
  std::array<double, 3> sum{};
  int count = 0;
  for (int i = s.start; i <= s.end; ++i) {
    std::array<double, 3> p{};
    if (!position_at(trace, id, static_cast<size_t>(i), &p)) return false;
    if (dist3(p, first) >= eps) return false;
    for (int k = 0; k < 3; ++k) sum[k] += p[k];
    ++count;
  }
  for (int k = 0; k < 3; ++k) (*centroid)[k] = sum[k] / count;
  return true;
}

std::string position_target(const CountContext& ctx, const Satisfaction& s) {
  if (!ctx.pref_def) return {};
  for (const auto& var : pref_variable_order(*ctx.pref_def)) {
    auto it = s.binding.find(var);
    if (it != s.binding.end()) return it->second;
  }
  return {};
}

}  // namespace

PreferenceRun make_run(std::vector<Satisfaction> all) {
  std::sort(all.begin(), all.end(), [](const Satisfaction& a, const Satisfaction& b) {
    if (a.end != b.end) return a.end < b.end;
    if (a.start != b.start) return a.start < b.start;
    return binding_repr(a.binding) < binding_repr(b.binding);
  });
  PreferenceRun run;
  int lastEnd = -1;
  for (const auto& s : all) {
    if (s.start > lastEnd) {
      run.distinct.push_back(s);
      lastEnd = s.end;
    }
  }
  run.all = std::move(all);
  return run;
}

SetupResult eval_setup(const Node& setup, const Trace& trace, const InterpOptions& opts) {
  TraceEval eval(trace, opts.thresholds);
  Ctx ctx{&eval, &trace, trace.state_count()};

  std::function<bool(const Node&, size_t, Binding&)> walk = [&](const Node& node, size_t state,
                                                                Binding& b) -> bool {
    switch (node.rule) {
      case rules::SetupAnd:
        for (const auto& c : node.children)
          if (!walk(*c, state, b)) return false;
        return true;
      case rules::SetupOr:
        for (const auto& c : node.children)
          if (walk(*c, state, b)) return true;
        return false;
      case rules::SetupNot:
        return !walk(*node.children[0], state, b);
      case rules::SetupExists:
      case rules::SetupForall:
        return eval_quantified(*node.children[0], *node.children[1],
                               node.rule == rules::SetupExists, ctx, state, b, walk);
      case rules::SetupStmt: {
        const Node& stmt = *node.children[0];
        const Node& super = *stmt.children[0];
        if (stmt.rule == rules::Optional) return eval_super(super, ctx, state, b);
        for (size_t j = state; j < ctx.n; ++j)
          if (!eval_super(super, ctx, j, b)) return false;
        return true;
      }
    }
    return false;
  };

  for (size_t i = 0; i < ctx.n; ++i) {
    Binding b;
    if (walk(setup, i, b)) return {static_cast<int>(i), true};
  }
  return {std::nullopt, false};
}

PreferenceRun run_preference(const Node& prefDef, const Trace& trace, const InterpOptions& opts,
                             int from_state) {
  PrefShape shape = pref_shape(prefDef);
  TraceEval eval(trace, opts.thresholds);
  Ctx ctx{&eval, &trace, trace.state_count()};

  Domains extDomains =
      shape.externalVars ? var_domains(*shape.externalVars, trace) : Domains{};
  Domains quantDomains = shape.quantVars ? var_domains(*shape.quantVars, trace) : Domains{};

  size_t ext = domain_product(extDomains, opts.max_bindings);
  size_t quant = domain_product(quantDomains, opts.max_bindings);
  if (ext > opts.max_bindings || quant > opts.max_bindings ||
      (quant != 0 && ext > opts.max_bindings / quant))
    throw std::runtime_error("preference '" + shape.name + "' exceeds " +
                             std::to_string(opts.max_bindings) + " binding combinations");

  std::vector<Satisfaction> all;

  auto run_external = [&](const Binding& external) {
    if (shape.quantRule == rules::QuantForall) {
      // every binding of the quantifier must be satisfied; this yields a
      // single satisfaction spanning the chosen witnesses
      std::vector<Satisfaction> chosen;
      bool ok = true;
      bool any = false;
      Binding b = external;
      enumerate_bindings(quantDomains, 0, b, [&](const Binding& bound) {
        if (!ok) return;
        any = true;
        Binding local = bound;
        auto sats = match_body(*shape.body, ctx, local, from_state);
        if (sats.empty()) {
          ok = false;
          return;
        }
        chosen.push_back(*std::min_element(
            sats.begin(), sats.end(), [](const Satisfaction& a, const Satisfaction& b2) {
              return a.end != b2.end ? a.end < b2.end : a.start < b2.start;
            }));
      });
      if (!ok || !any) return;
      Satisfaction s;
      s.preference = shape.name;
      s.binding = external;
      s.external = external;
      s.start = chosen.front().start;
      s.end = chosen.front().end;
      double measure = 0;
      bool measured = true;
      for (const auto& c : chosen) {
        s.start = std::min(s.start, c.start);
        s.end = std::max(s.end, c.end);
        if (std::isnan(c.measure))
          measured = false;
        else
          measure += c.measure;
      }
      if (measured) s.measure = measure;
      all.push_back(std::move(s));
      return;
    }
    Binding b = external;
    enumerate_bindings(quantDomains, 0, b, [&](const Binding& bound) {
      Binding local = bound;
      for (Satisfaction& s : match_body(*shape.body, ctx, local, from_state)) {
        s.preference = shape.name;
        s.binding = bound;
        s.external = external;
        all.push_back(std::move(s));
      }
    });
  };

  Binding eb;
  enumerate_bindings(extDomains, 0, eb, [&](const Binding& external) { run_external(external); });

  return make_run(std::move(all));
}

double count_mode(int rule, const PreferenceRun& run, const CountContext& ctx) {
  switch (rule) {
    case rules::Count:
      return static_cast<double>(run.distinct.size());
    case rules::CountOverlapping:
      return static_cast<double>(run.all.size());
    case rules::CountOnce:
      return run.all.empty() ? 0.0 : 1.0;
    case rules::CountOncePerObjects: {
      std::set<std::string> seen;
      for (const auto& s : run.all) seen.insert(binding_repr(s.binding));
      return static_cast<double>(seen.size());
    }
    case rules::CountMeasure: {
      double total = 0;
      for (const auto& s : run.distinct)
        if (!std::isnan(s.measure)) total += s.measure;
      return total;
    }
    case rules::CountUniquePositions: {
      if (!ctx.trace) return 0.0;
      std::vector<std::array<double, 3>> counted;
      for (const auto& s : run.all) {
        std::string target = position_target(ctx, s);
        if (target.empty()) continue;
        std::array<double, 3> c{};
        if (!stationary_centroid(*ctx.trace, target, s, ctx.stationary_eps, &c)) continue;
        bool fresh = true;
        for (const auto& prev : counted)
          if (dist3(prev, c) <= ctx.same_position_eps) fresh = false;
        if (fresh) counted.push_back(c);
      }
      return static_cast<double>(counted.size());
    }
    case rules::CountSamePositions: {
      if (!ctx.trace) return 0.0;
      std::vector<std::pair<std::array<double, 3>, int>> clusters;
      for (const auto& s : run.all) {
        std::string target = position_target(ctx, s);
        if (target.empty()) continue;
        std::array<double, 3> c{};
        if (!stationary_centroid(*ctx.trace, target, s, ctx.stationary_eps, &c)) continue;
        bool placed = false;
        for (auto& [center, size] : clusters) {
          if (dist3(center, c) <= ctx.same_position_eps) {
            ++size;
            placed = true;
            break;
          }
        }
        if (!placed) clusters.emplace_back(c, 1);
      }
      int best = 0;
      for (const auto& [center, size] : clusters) best = std::max(best, size);
      return static_cast<double>(best);
    }
    case rules::CountOncePerExternalObjects: {
      std::set<std::string> seen;
      for (const auto& s : run.all) seen.insert(binding_repr(s.external));
      return static_cast<double>(seen.size());
    }
  }
  return 0.0;
}

namespace {

std::string value_type(const Trace& trace, const std::string& v) {
  if (v == "agent") return "agent";
  if (v.rfind("building_", 0) == 0) return "building";
  if (const ObjectInfo* info = trace.object_info(v)) return info->type;
  return v;
}

struct ScoreCtx {
  const GameAst* game = nullptr;
  const Trace* trace = nullptr;
  const InterpOptions* opts = nullptr;
  const std::map<std::string, PreferenceRun>* runs = nullptr;
  const std::map<std::string, const Node*>* defs = nullptr;
  int cutoff = 0;
  const Binding* extFilter = nullptr;
  bool error = false;
  std::string errorMsg;
  std::map<std::string, double>* counts = nullptr;
};

double eval_scoring(const Node& expr, ScoreCtx& ctx);

double eval_pref_count(const Node& prefEval, ScoreCtx& ctx) {
  const Node& ref = *prefEval.children[0];
  const std::string& name = ref.token;
  auto runIt = ctx.runs->find(name);
  if (runIt == ctx.runs->end()) return 0.0;
  auto defIt = ctx.defs->find(name);
  const Node* def = defIt == ctx.defs->end() ? nullptr : defIt->second;

  std::vector<std::string> qualifiers;
  for (const auto& leaf : ref.children) qualifiers.push_back(leaf->token);
  // qualifiers constrain the forall-wrapper variables when there are any,
  // otherwise the body quantifier variables, in declaration order
  std::vector<std::string> order = def ? external_variable_order(*def)
                                       : std::vector<std::string>{};
  if (order.empty() && def) order = pref_variable_order(*def);

  std::vector<Satisfaction> kept;
  for (const auto& s : runIt->second.all) {
    if (s.end > ctx.cutoff) continue;
    if (ctx.extFilter) {
      bool match = true;
      for (const auto& [k, v] : *ctx.extFilter) {
        auto it = s.external.find(k);
        if (it != s.external.end() && it->second != v) match = false;
      }
      if (!match) continue;
    }
    bool ok = true;
    for (size_t i = 0; i < qualifiers.size() && ok; ++i) {
      if (i >= order.size()) break;
      const std::string* v = nullptr;
      auto bi = s.binding.find(order[i]);
      if (bi != s.binding.end()) {
        v = &bi->second;
      } else {
        auto ei = s.external.find(order[i]);
        if (ei != s.external.end()) v = &ei->second;
      }
      if (!v) {
        ok = false;
        break;
      }
      std::string vt = value_type(*ctx.trace, *v);
      if (!(vt == qualifiers[i] || type_is_a(vt, qualifiers[i]))) ok = false;
    }
    if (ok) kept.push_back(s);
  }
  PreferenceRun filtered = make_run(std::move(kept));
  CountContext cc;
  cc.trace = ctx.trace;
  cc.pref_def = def;
  cc.qualifiers = qualifiers;
  cc.stationary_eps = ctx.opts->stationary_eps;
  cc.same_position_eps = ctx.opts->same_position_eps;
  double value = count_mode(prefEval.rule, filtered, cc);
  if (ctx.counts) (*ctx.counts)[print_node(prefEval)] = value;
  return value;
}

double eval_scoring_comp(const Node& comp, ScoreCtx& ctx) {
  if (comp.rule == rules::SCompEq) {
    double first = eval_scoring(*comp.children[0], ctx);
    for (size_t i = 1; i < comp.children.size(); ++i)
      if (!(eval_scoring(*comp.children[i], ctx) == first)) return 0.0;
    return 1.0;
  }
  return compare_op(comp.token, eval_scoring(*comp.children[0], ctx),
                    eval_scoring(*comp.children[1], ctx))
             ? 1.0
             : 0.0;
}

// External bindings seen by any preference the subtree references.
std::vector<Binding> external_bindings(const Node& expr, ScoreCtx& ctx) {
  std::set<std::string> names;
  visit(expr, [&](const Node& n) {
    if (n.nt == Nt::PrefRef) names.insert(n.token);
  });
  std::vector<Binding> out;
  std::set<std::string> seen;
  for (const auto& name : names) {
    auto it = ctx.runs->find(name);
    if (it == ctx.runs->end()) continue;
    for (const auto& s : it->second.all) {
      if (s.external.empty() || s.end > ctx.cutoff) continue;
      if (seen.insert(binding_repr(s.external)).second) out.push_back(s.external);
    }
  }
  return out;
}

double eval_scoring(const Node& expr, ScoreCtx& ctx) {
  switch (expr.rule) {
    case rules::ScoreExtMax:
    case rules::ScoreExtMin: {
      std::vector<Binding> externals = external_bindings(*expr.children[0], ctx);
      if (externals.empty()) return eval_scoring(*expr.children[0], ctx);
      double best = kNaN;
      for (const auto& eb : externals) {
        const Binding* prev = ctx.extFilter;
        ctx.extFilter = &eb;
        double v = eval_scoring(*expr.children[0], ctx);
        ctx.extFilter = prev;
        if (std::isnan(best))
          best = v;
        else
          best = expr.rule == rules::ScoreExtMax ? std::max(best, v) : std::min(best, v);
      }
      return best;
    }
    case rules::ScoreMulti: {
      double acc = expr.token == "+" ? 0.0 : 1.0;
      for (const auto& c : expr.children) {
        double v = eval_scoring(*c, ctx);
        acc = expr.token == "+" ? acc + v : acc * v;
      }
      return acc;
    }
    case rules::ScoreBinary: {
      double a = eval_scoring(*expr.children[0], ctx);
      double b = eval_scoring(*expr.children[1], ctx);
      if (expr.token == "-") return a - b;
      if (b == 0.0) {
        if (!ctx.error) {
          ctx.error = true;
          ctx.errorMsg = "division by zero in scoring";
        }
        return kNaN;
      }
      return a / b;
    }
    case rules::ScoreNeg:
      return -eval_scoring(*expr.children[0], ctx);
    case rules::ScoreTotalTime:
      return static_cast<double>(ctx.cutoff);
    case rules::ScoreTotalScore:
      return 0.0;
    case rules::ScoreCompRule:
      return eval_scoring_comp(*expr.children[0], ctx);
    case rules::ScorePrefEval:
      return eval_pref_count(*expr.children[0], ctx);
    case rules::ScoreNumber:
      return std::stod(expr.children[0]->token);
  }
  return 0.0;
}

bool eval_terminal(const Node& term, ScoreCtx& ctx, int state) {
  switch (term.rule) {
    case rules::TerminalAnd:
      for (const auto& c : term.children)
        if (!eval_terminal(*c, ctx, state)) return false;
      return true;
    case rules::TerminalOr:
      for (const auto& c : term.children)
        if (eval_terminal(*c, ctx, state)) return true;
      return false;
    case rules::TerminalNot:
      return !eval_terminal(*term.children[0], ctx, state);
    case rules::TerminalCompRule: {
      const Node& comp = *term.children[0];
      if (comp.rule == rules::CompTime)
        return compare_op(comp.token, static_cast<double>(state),
                          std::stod(comp.children[0]->token));
      if (comp.rule == rules::CompScore) {
        double s = eval_scoring(*ctx.game->scoring().children[0], ctx);
        return compare_op(comp.token, s, std::stod(comp.children[0]->token));
      }
      double lhs = eval_scoring(*comp.children[0], ctx);
      return compare_op(comp.token, lhs, std::stod(comp.children[1]->token));
    }
  }
  return false;
}

}  // namespace

ScoreReport score_game(const GameAst& game, const Trace& trace, const InterpOptions& opts) {
  ScoreReport report;
  size_t n = trace.state_count();
  if (n == 0) {
    report.defined = false;
    report.error = "trace has no states";
    return report;
  }

  int from = 0;
  bool runnable = true;
  if (game.has_setup()) {
    SetupResult sr = eval_setup(*game.setup_section().children[0], trace, opts);
    report.setup_satisfied = sr.satisfied_at.has_value();
    report.setup_state = sr.satisfied_at;
    if (sr.satisfied_at)
      from = *sr.satisfied_at;
    else
      runnable = false;
  }

  std::map<std::string, PreferenceRun> runs;
  std::map<std::string, const Node*> defs;
  try {
    for (Node* pd : preference_defs(game)) {
      std::string name(preference_name(*pd));
      defs[name] = pd;
      runs[name] = runnable ? run_preference(*pd, trace, opts, from) : PreferenceRun{};
    }
  } catch (const std::exception& e) {
    report.defined = false;
    report.error = e.what();
    return report;
  }

  ScoreCtx ctx;
  ctx.game = &game;
  ctx.trace = &trace;
  ctx.opts = &opts;
  ctx.runs = &runs;
  ctx.defs = &defs;

  int cutoff = static_cast<int>(n) - 1;
  if (game.has_terminal()) {
    const Node& terminal = *game.terminal_section().children[0];
    for (int i = 0; i < static_cast<int>(n); ++i) {
      ctx.cutoff = i;
      ctx.error = false;
      ctx.errorMsg.clear();
      if (eval_terminal(terminal, ctx, i)) {
        report.terminal_state = i;
        cutoff = i;
        break;
      }
    }
  }

  ctx.cutoff = cutoff;
  ctx.error = false;
  ctx.errorMsg.clear();
  ctx.counts = &report.counts;
  report.total = eval_scoring(*game.scoring().children[0], ctx);
  if (game.has_terminal()) eval_terminal(*game.terminal_section().children[0], ctx, cutoff);
  report.defined = !ctx.error;
  report.error = ctx.errorMsg;
  return report;
}

std::map<std::string, std::set<std::string>> activating_components(
    const GameAst& game, const std::vector<Trace>& traces, const InterpOptions& opts) {
  std::map<std::string, std::set<std::string>> out;
  if (game.has_setup()) out["setup"];
  std::vector<Node*> defs = preference_defs(game);
  for (Node* pd : defs) out[std::string(preference_name(*pd))];

  for (const Trace& trace : traces) {
    int from = 0;
    bool runnable = true;
    if (game.has_setup()) {
      SetupResult sr = eval_setup(*game.setup_section().children[0], trace, opts);
      if (sr.satisfied_at) {
        out["setup"].insert(trace.id());
        from = *sr.satisfied_at;
      } else {
        runnable = false;
      }
    }
    if (!runnable) continue;
    for (Node* pd : defs) {
      std::string name(preference_name(*pd));
      try {
        if (!run_preference(*pd, trace, opts, from).all.empty()) out[name].insert(trace.id());
      } catch (const std::exception&) {
      }
    }
  }
  return out;
}

}  // namespace goalgen
