#include "goalgen/validator.hpp"

#include <set>

namespace goalgen {

namespace {

void collect_vars(const Node& varList, std::set<std::string>* scope) {
  for (const auto& def : varList.children)
    for (size_t i = 0; i + 1 < def->children.size(); ++i)
      scope->insert(def->children[i]->token);
}

void check_scope(const Node& n, std::set<std::string> scope, std::vector<Violation>* out) {
  switch (n.nt) {
    case Nt::Setup:
      if (n.rule == rules::SetupExists || n.rule == rules::SetupForall) {
        collect_vars(*n.children[0], &scope);
        check_scope(*n.children[1], scope, out);
        return;
      }
      break;
    case Nt::Super:
      if (n.rule == rules::SuperExists || n.rule == rules::SuperForall) {
        collect_vars(*n.children[0], &scope);
        check_scope(*n.children[1], scope, out);
        return;
      }
      break;
    case Nt::PrefDef:
      if (n.rule == rules::PrefForallDef) {
        collect_vars(*n.children[0], &scope);
        check_scope(*n.children[1], scope, out);
        return;
      }
      break;
    case Nt::PrefQuant:
      if (n.rule != rules::QuantNone) {
        collect_vars(*n.children[0], &scope);
        check_scope(*n.children[1], scope, out);
        return;
      }
      break;
    case Nt::Term:
      if (n.rule == rules::TermVariable && !scope.count(n.token))
        out->push_back({ViolationKind::UnknownVariable,
                        "variable '" + n.token + "' is not defined in this scope", n.id});
      return;
    default: break;
  }
  for (const auto& c : n.children) check_scope(*c, scope, out);
}

bool has_once_measure(const Node& pref) {
  bool found = false;
  visit(pref, [&](const Node& n) {
    if (n.nt == Nt::SeqFunc && n.rule == rules::SeqOnceMeasure) found = true;
  });
  return found;
}

}  // namespace

std::vector<Violation> validate(const GameAst& game) {
  std::vector<Violation> out;

  std::set<std::string_view> defined;
  std::set<std::string_view> measured;
  for (const Node* def : preference_defs(game)) {
    std::string_view name = preference_name(*def);
    if (!defined.insert(name).second)
      out.push_back({ViolationKind::DuplicatePreference,
                     "preference '" + std::string(name) + "' is defined more than once", def->id});
    if (has_once_measure(*def)) measured.insert(name);
  }

  check_scope(game.root(), {}, &out);

  visit(game.root(), [&](const Node& n) {
    if (n.nt != Nt::PrefEval) return;
    const Node& ref = *n.children[0];
    if (!defined.count(ref.token)) {
      out.push_back({ViolationKind::UndefinedPreference,
                     "preference '" + ref.token + "' is referenced but never defined", ref.id});
      return;
    }
    if (n.rule == rules::CountMeasure && !measured.count(ref.token))
      out.push_back({ViolationKind::CountMeasureWithoutMeasure,
                     "count-measure applied to '" + ref.token + "', which has no once-measure modal",
                     n.id});
  });

  return out;
}

}  // namespace goalgen
