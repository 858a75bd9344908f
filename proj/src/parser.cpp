#include "goalgen/parser.hpp"

#include <cctype>
#include <optional>

namespace goalgen {

namespace {

struct SExpr {
  bool is_atom = false;
  std::string atom;
  std::vector<SExpr> list;
  int line = 0;
  int col = 0;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) {}

  SExpr read() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    SExpr out;
    out.line = line_;
    out.col = col_;
    if (text_[pos_] == '(') {
      advance();
      while (true) {
        skip_space();
        if (pos_ >= text_.size()) fail("missing closing parenthesis");
        if (text_[pos_] == ')') {
          advance();
          return out;
        }
        out.list.push_back(read());
      }
    }
    if (text_[pos_] == ')') fail("unexpected ')'");
    out.is_atom = true;
    size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
           text_[pos_] != '(' && text_[pos_] != ')' && text_[pos_] != ';')
      advance();
    out.atom = text_.substr(start, pos_ - start);
    return out;
  }

  bool at_end() {
    skip_space();
    return pos_ >= text_.size();
  }

  [[noreturn]] void fail(const std::string& message) { throw ParseError(message, line_, col_); }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  const std::string& text_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

[[noreturn]] void fail(const SExpr& at, const std::string& message) {
  throw ParseError(message, at.line, at.col);
}

bool is_comp_op(std::string_view s) {
  return s == "<" || s == "<=" || s == "=" || s == ">" || s == ">=";
}

const std::string& head(const SExpr& e) {
  if (e.is_atom || e.list.empty() || !e.list[0].is_atom) fail(e, "expected a parenthesized form");
  return e.list[0].atom;
}

bool valid_name(std::string_view s) {
  if (s.size() < 2 || !std::isalpha(static_cast<unsigned char>(s[0]))) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return true;
}

bool valid_id(std::string_view s) {
  if (s.size() < 2) return false;
  if (!(std::islower(static_cast<unsigned char>(s[0])) || std::isdigit(static_cast<unsigned char>(s[0]))))
    return false;
  for (char c : s)
    if (!(std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) || c == '-'))
      return false;
  return true;
}

class Converter {
 public:
  NodePtr game_body(const SExpr& e);
  NodePtr setup(const SExpr& e);
  NodePtr super(const SExpr& e);
  NodePtr predicate(const SExpr& e);
  NodePtr function_eval(const SExpr& e);
  NodePtr fcomp(const SExpr& e);
  NodePtr farg(const SExpr& e);
  NodePtr term(const SExpr& e, ArgKind kind);
  NodePtr number(const SExpr& e);
  NodePtr var_list(const SExpr& e);
  NodePtr constraints(const SExpr& e);
  NodePtr pref_def(const SExpr& e);
  NodePtr preference(const SExpr& e);
  NodePtr pref_body(const SExpr& e);
  NodePtr seq_func(const SExpr& e);
  NodePtr terminal(const SExpr& e);
  NodePtr scoring_expr(const SExpr& e);
  NodePtr pref_ref(const SExpr& e);

  std::string game_name;
  std::string game_domain;
};

NodePtr Converter::number(const SExpr& e) {
  if (!e.is_atom || !is_number_token(e.atom)) fail(e, "expected a number");
  return make_node(Nt::Number, 0, e.atom);
}

NodePtr Converter::term(const SExpr& e, ArgKind kind) {
  if (!e.is_atom) fail(e, "expected a term, got a parenthesized form");
  const std::string& s = e.atom;
  if (s.starts_with("?")) {
    auto cls = classify_variable(s);
    if (!cls) fail(e, "malformed variable '" + s + "'");
    TermClass expected;
    switch (kind) {
      case ArgKind::Object:
      case ArgKind::TypeTerm: expected = TermClass::Object; break;
      case ArgKind::Side: expected = TermClass::SideClass; break;
      case ArgKind::Orientation: expected = TermClass::OrientationClass; break;
      case ArgKind::ColorLiteral: expected = TermClass::ColorClass; break;
      case ArgKind::ColorOrObject:
        expected = (*cls == TermClass::ColorClass) ? TermClass::ColorClass : TermClass::Object;
        break;
      default: expected = TermClass::Object;
    }
    if (*cls != expected) fail(e, "variable '" + s + "' has the wrong class for this argument");
    return make_node(Nt::Term, rules::TermVariable, s);
  }
  bool ok = false;
  switch (kind) {
    case ArgKind::Object: ok = is_object_name(s); break;
    case ArgKind::Side: ok = is_side_token(s); break;
    case ArgKind::Orientation: ok = is_orientation_token(s); break;
    case ArgKind::ColorLiteral: ok = is_color_token(s); break;
    case ArgKind::ColorOrObject: ok = is_color_token(s) || is_object_name(s); break;
    case ArgKind::TypeTerm: ok = is_known_type(s); break;
  }
  if (!ok) fail(e, "'" + s + "' is not a valid argument here");
  return make_node(Nt::Term, rules::TermName, s);
}

NodePtr Converter::predicate(const SExpr& e) {
  const std::string& name = head(e);
  const PredicateSig* sig = find_predicate(name);
  if (!sig) fail(e, "unknown predicate '" + name + "'");
  size_t argc = e.list.size() - 1;
  const std::vector<ArgKind>* args = nullptr;
  for (const auto& a : sig->arities)
    if (a.size() == argc) args = &a;
  if (!args) fail(e, "predicate '" + name + "' does not take " + std::to_string(argc) + " arguments");
  auto node = make_node(Nt::Predicate, 0, name);
  for (size_t i = 0; i < argc; ++i) node->add(term(e.list[i + 1], (*args)[i]));
  return node;
}

NodePtr Converter::function_eval(const SExpr& e) {
  const std::string& name = head(e);
  const FunctionSig* sig = find_function(name);
  if (!sig) fail(e, "unknown function '" + name + "'");
  size_t argc = e.list.size() - 1;
  const std::vector<ArgKind>* args = nullptr;
  for (const auto& a : sig->arities)
    if (a.size() == argc) args = &a;
  if (!args) fail(e, "function '" + name + "' does not take " + std::to_string(argc) + " arguments");
  auto node = make_node(Nt::FunctionEval, 0, name);
  for (size_t i = 0; i < argc; ++i) node->add(term(e.list[i + 1], (*args)[i]));
  return node;
}

NodePtr Converter::farg(const SExpr& e) {
  auto node = make_node(Nt::FArg);
  if (e.is_atom) {
    node->rule = rules::FArgNum;
    node->add(number(e));
  } else {
    node->rule = rules::FArgFunc;
    node->add(function_eval(e));
  }
  return node;
}

NodePtr Converter::fcomp(const SExpr& e) {
  const std::string& op = head(e);
  if (op == "=") {
    if (e.list.size() < 3) fail(e, "'=' needs at least two arguments");
    auto node = make_node(Nt::FComp, rules::FCompEq, "=");
    for (size_t i = 1; i < e.list.size(); ++i) node->add(farg(e.list[i]));
    return node;
  }
  if (e.list.size() != 3) fail(e, "comparison needs exactly two arguments");
  auto node = make_node(Nt::FComp, rules::FCompBinary, op);
  node->add(farg(e.list[1]));
  node->add(farg(e.list[2]));
  return node;
}

NodePtr Converter::var_list(const SExpr& e) {
  if (e.is_atom || e.list.empty()) fail(e, "expected a variable list");
  auto list = make_node(Nt::VarList);
  size_t i = 0;
  while (i < e.list.size()) {
    std::vector<NodePtr> vars;
    std::optional<TermClass> cls;
    while (i < e.list.size() && e.list[i].is_atom && e.list[i].atom != "-") {
      const std::string& v = e.list[i].atom;
      auto c = classify_variable(v);
      if (!c) fail(e.list[i], "malformed variable '" + v + "'");
      if (cls && *cls != *c) fail(e.list[i], "variables in one definition must share a class");
      cls = *c;
      vars.push_back(make_node(Nt::Variable, 0, v));
      ++i;
    }
    if (vars.empty()) fail(e, "expected a variable");
    if (i >= e.list.size() || !e.list[i].is_atom || e.list[i].atom != "-")
      fail(e, "expected '-' between variables and their type");
    ++i;
    if (i >= e.list.size()) fail(e, "expected a type after '-'");
    const SExpr& t = e.list[i];
    ++i;

    auto accepts = [&](const std::string& name) {
      switch (*cls) {
        case TermClass::Object: return is_known_type(name) && !is_color_token(name) &&
                                       !is_orientation_token(name) && !is_side_token(name) &&
                                       name != "color" && name != "orientation" && name != "side";
        case TermClass::ColorClass: return is_color_token(name);
        case TermClass::OrientationClass: return is_orientation_token(name);
        case TermClass::SideClass: return is_side_token(name);
      }
      return false;
    };
    auto type_def = make_node(Nt::TypeDef);
    if (t.is_atom) {
      bool class_name_ok = (*cls == TermClass::ColorClass && t.atom == "color") ||
                           (*cls == TermClass::OrientationClass && t.atom == "orientation") ||
                           (*cls == TermClass::SideClass && t.atom == "side");
      if (!class_name_ok && !accepts(t.atom)) fail(t, "'" + t.atom + "' is not a valid type here");
      type_def->rule = rules::TypeSingle;
      type_def->add(make_node(Nt::TypeLeaf, 0, t.atom));
    } else {
      if (t.list.empty() || !t.list[0].is_atom || t.list[0].atom != "either" || t.list.size() < 2)
        fail(t, "expected (either <type>+)");
      type_def->rule = rules::TypeEither;
      for (size_t k = 1; k < t.list.size(); ++k) {
        if (!t.list[k].is_atom || !accepts(t.list[k].atom))
          fail(t.list[k], "invalid type inside 'either'");
        type_def->add(make_node(Nt::TypeLeaf, 0, t.list[k].atom));
      }
    }

    int rule;
    switch (*cls) {
      case TermClass::Object: rule = rules::VarObject; break;
      case TermClass::ColorClass: rule = rules::VarColor; break;
      case TermClass::OrientationClass: rule = rules::VarOrientation; break;
      default: rule = rules::VarSide; break;
    }
    auto def = make_node(Nt::VarDef, rule);
    for (auto& v : vars) def->add(std::move(v));
    def->add(std::move(type_def));
    list->add(std::move(def));
  }
  return list;
}

NodePtr Converter::super(const SExpr& e) {
  if (e.is_atom) fail(e, "expected a predicate expression");
  const std::string& h = head(e);
  auto node = make_node(Nt::Super);
  if (h == "and" || h == "or") {
    if (e.list.size() < 2) fail(e, "'" + h + "' needs at least one operand");
    node->rule = (h == "and") ? rules::SuperAnd : rules::SuperOr;
    for (size_t i = 1; i < e.list.size(); ++i) node->add(super(e.list[i]));
    return node;
  }
  if (h == "not") {
    if (e.list.size() != 2) fail(e, "'not' takes exactly one operand");
    node->rule = rules::SuperNot;
    node->add(super(e.list[1]));
    return node;
  }
  if (h == "exists" || h == "forall") {
    if (e.list.size() != 3) fail(e, "'" + h + "' takes a variable list and a body");
    node->rule = (h == "exists") ? rules::SuperExists : rules::SuperForall;
    node->add(var_list(e.list[1]));
    node->add(super(e.list[2]));
    return node;
  }
  if (is_comp_op(h)) {
    node->rule = rules::SuperComp;
    node->add(fcomp(e));
    return node;
  }
  node->rule = rules::SuperPred;
  node->add(predicate(e));
  return node;
}

NodePtr Converter::setup(const SExpr& e) {
  if (e.is_atom) fail(e, "expected a setup expression");
  const std::string& h = head(e);
  auto node = make_node(Nt::Setup);
  if (h == "and" || h == "or") {
    if (e.list.size() < 3) fail(e, "setup '" + h + "' needs at least two operands");
    node->rule = (h == "and") ? rules::SetupAnd : rules::SetupOr;
    for (size_t i = 1; i < e.list.size(); ++i) node->add(setup(e.list[i]));
    return node;
  }
  if (h == "not") {
    if (e.list.size() != 2) fail(e, "'not' takes exactly one operand");
    node->rule = rules::SetupNot;
    node->add(setup(e.list[1]));
    return node;
  }
  if (h == "exists" || h == "forall") {
    if (e.list.size() != 3) fail(e, "'" + h + "' takes a variable list and a body");
    node->rule = (h == "exists") ? rules::SetupExists : rules::SetupForall;
    node->add(var_list(e.list[1]));
    node->add(setup(e.list[2]));
    return node;
  }
  if (h == "game-conserved" || h == "game-optional") {
    if (e.list.size() != 2) fail(e, "'" + h + "' takes exactly one predicate expression");
    auto stmt = make_node(Nt::SetupStatement,
                          h == "game-conserved" ? rules::Conserved : rules::Optional);
    stmt->add(super(e.list[1]));
    node->rule = rules::SetupStmt;
    node->add(std::move(stmt));
    return node;
  }
  fail(e, "expected a setup form, got '" + h + "'");
}

NodePtr Converter::seq_func(const SExpr& e) {
  const std::string& h = head(e);
  auto node = make_node(Nt::SeqFunc);
  if (h == "once") {
    if (e.list.size() != 2) fail(e, "'once' takes exactly one predicate expression");
    node->rule = rules::SeqOnce;
    node->add(super(e.list[1]));
  } else if (h == "once-measure") {
    if (e.list.size() != 3) fail(e, "'once-measure' takes a predicate expression and a function");
    node->rule = rules::SeqOnceMeasure;
    node->add(super(e.list[1]));
    node->add(function_eval(e.list[2]));
  } else if (h == "hold") {
    if (e.list.size() != 2) fail(e, "'hold' takes exactly one predicate expression");
    node->rule = rules::SeqHold;
    node->add(super(e.list[1]));
  } else if (h == "hold-while") {
    if (e.list.size() < 3) fail(e, "'hold-while' takes at least two predicate expressions");
    node->rule = rules::SeqHoldWhile;
    for (size_t i = 1; i < e.list.size(); ++i) node->add(super(e.list[i]));
  } else {
    fail(e, "expected once/once-measure/hold/hold-while, got '" + h + "'");
  }
  return node;
}

NodePtr Converter::pref_body(const SExpr& e) {
  const std::string& h = head(e);
  auto node = make_node(Nt::PrefBody);
  if (h == "then") {
    if (e.list.size() < 3) fail(e, "'then' needs at least two sequence functions");
    auto then = make_node(Nt::Then);
    for (size_t i = 1; i < e.list.size(); ++i) then->add(seq_func(e.list[i]));
    node->rule = rules::BodyThen;
    node->add(std::move(then));
    return node;
  }
  if (h == "at-end") {
    if (e.list.size() != 2) fail(e, "'at-end' takes exactly one predicate expression");
    auto at_end = make_node(Nt::AtEnd);
    at_end->add(super(e.list[1]));
    node->rule = rules::BodyAtEnd;
    node->add(std::move(at_end));
    return node;
  }
  fail(e, "expected 'then' or 'at-end', got '" + h + "'");
}

NodePtr Converter::preference(const SExpr& e) {
  if (head(e) != "preference" || e.list.size() != 3) fail(e, "expected (preference <name> <body>)");
  if (!e.list[1].is_atom || !valid_name(e.list[1].atom))
    fail(e.list[1], "invalid preference name");
  auto node = make_node(Nt::Preference, 0, e.list[1].atom);
  const SExpr& q = e.list[2];
  const std::string& h = head(q);
  auto quant = make_node(Nt::PrefQuant);
  if (h == "exists" || h == "forall") {
    if (q.list.size() != 3) fail(q, "'" + h + "' takes a variable list and a body");
    quant->rule = (h == "exists") ? rules::QuantExists : rules::QuantForall;
    quant->add(var_list(q.list[1]));
    quant->add(pref_body(q.list[2]));
  } else {
    quant->rule = rules::QuantNone;
    quant->add(pref_body(q));
  }
  node->add(std::move(quant));
  return node;
}

NodePtr Converter::pref_def(const SExpr& e) {
  const std::string& h = head(e);
  auto node = make_node(Nt::PrefDef);
  if (h == "forall") {
    if (e.list.size() != 3) fail(e, "preference 'forall' takes a variable list and a preference");
    node->rule = rules::PrefForallDef;
    node->add(var_list(e.list[1]));
    node->add(preference(e.list[2]));
    return node;
  }
  node->rule = rules::PrefPlain;
  node->add(preference(e));
  return node;
}

NodePtr Converter::constraints(const SExpr& e) {
  auto node = make_node(Nt::Constraints);
  if (!e.is_atom && !e.list.empty() && e.list[0].is_atom && e.list[0].atom == "and") {
    if (e.list.size() < 2) fail(e, "'and' needs at least one preference definition");
    for (size_t i = 1; i < e.list.size(); ++i) node->add(pref_def(e.list[i]));
  } else {
    node->add(pref_def(e));
  }
  return node;
}

NodePtr Converter::pref_ref(const SExpr& e) {
  if (!e.is_atom) fail(e, "expected a preference name");
  const std::string& s = e.atom;
  std::vector<std::string> parts;
  size_t start = 0;
  while (true) {
    size_t idx = s.find(':', start);
    if (idx == std::string::npos) {
      parts.push_back(s.substr(start));
      break;
    }
    parts.push_back(s.substr(start, idx - start));
    start = idx + 1;
  }
  if (parts.empty() || !valid_name(parts[0])) fail(e, "invalid preference reference");
  auto node = make_node(Nt::PrefRef, 0, parts[0]);
  for (size_t i = 1; i < parts.size(); ++i) {
    if (!is_known_type(parts[i])) fail(e, "unknown type '" + parts[i] + "' in preference reference");
    node->add(make_node(Nt::TypeLeaf, 0, parts[i]));
  }
  return node;
}

NodePtr Converter::scoring_expr(const SExpr& e) {
  auto node = make_node(Nt::ScoringExpr);
  if (e.is_atom) {
    node->rule = rules::ScoreNumber;
    node->add(number(e));
    return node;
  }
  const std::string& h = head(e);
  if (h == "external-forall-maximize" || h == "external-forall-minimize") {
    if (e.list.size() != 2) fail(e, "'" + h + "' takes exactly one expression");
    node->rule = (h == "external-forall-maximize") ? rules::ScoreExtMax : rules::ScoreExtMin;
    node->add(scoring_expr(e.list[1]));
    return node;
  }
  if (h == "+" || h == "*") {
    if (e.list.size() < 2) fail(e, "'" + h + "' needs at least one operand");
    node->rule = rules::ScoreMulti;
    node->token = h;
    for (size_t i = 1; i < e.list.size(); ++i) node->add(scoring_expr(e.list[i]));
    return node;
  }
  if (h == "-" && e.list.size() == 2) {
    node->rule = rules::ScoreNeg;
    node->add(scoring_expr(e.list[1]));
    return node;
  }
  if (h == "-" || h == "/") {
    if (e.list.size() != 3) fail(e, "'" + h + "' takes exactly two operands");
    node->rule = rules::ScoreBinary;
    node->token = h;
    node->add(scoring_expr(e.list[1]));
    node->add(scoring_expr(e.list[2]));
    return node;
  }
  if (h == "total-time" || h == "total-score") {
    if (e.list.size() != 1) fail(e, "'" + h + "' takes no arguments");
    node->rule = (h == "total-time") ? rules::ScoreTotalTime : rules::ScoreTotalScore;
    return node;
  }
  if (is_comp_op(h)) {
    auto comp = make_node(Nt::ScoringComp);
    if (h == "=") {
      if (e.list.size() < 3) fail(e, "'=' needs at least two operands");
      comp->rule = rules::SCompEq;
      comp->token = "=";
      for (size_t i = 1; i < e.list.size(); ++i) comp->add(scoring_expr(e.list[i]));
    } else {
      if (e.list.size() != 3) fail(e, "comparison takes exactly two operands");
      comp->rule = rules::SCompBinary;
      comp->token = h;
      comp->add(scoring_expr(e.list[1]));
      comp->add(scoring_expr(e.list[2]));
    }
    node->rule = rules::ScoreCompRule;
    node->add(std::move(comp));
    return node;
  }
  for (int mode = 0; mode < 8; ++mode) {
    if (h == count_mode_keyword(mode)) {
      if (e.list.size() != 2) fail(e, "'" + h + "' takes exactly one preference reference");
      auto eval = make_node(Nt::PrefEval, mode, h);
      eval->add(pref_ref(e.list[1]));
      node->rule = rules::ScorePrefEval;
      node->add(std::move(eval));
      return node;
    }
  }
  fail(e, "expected a scoring expression, got '" + h + "'");
}

NodePtr Converter::terminal(const SExpr& e) {
  if (e.is_atom) fail(e, "expected a terminal condition");
  const std::string& h = head(e);
  auto node = make_node(Nt::Terminal);
  if (h == "and" || h == "or") {
    if (e.list.size() < 2) fail(e, "'" + h + "' needs at least one operand");
    node->rule = (h == "and") ? rules::TerminalAnd : rules::TerminalOr;
    for (size_t i = 1; i < e.list.size(); ++i) node->add(terminal(e.list[i]));
    return node;
  }
  if (h == "not") {
    if (e.list.size() != 2) fail(e, "'not' takes exactly one operand");
    node->rule = rules::TerminalNot;
    node->add(terminal(e.list[1]));
    return node;
  }
  if (!is_comp_op(h)) fail(e, "expected a terminal comparison, got '" + h + "'");
  if (e.list.size() != 3) fail(e, "terminal comparison takes exactly two operands");
  auto comp = make_node(Nt::TerminalComp, 0, h);
  const SExpr& lhs = e.list[1];
  if (!lhs.is_atom && lhs.list.size() == 1 && lhs.list[0].is_atom &&
      (lhs.list[0].atom == "total-time" || lhs.list[0].atom == "total-score")) {
    comp->rule = lhs.list[0].atom == "total-time" ? rules::CompTime : rules::CompScore;
    comp->add(number(e.list[2]));
  } else {
    comp->rule = rules::CompPrefCount;
    comp->add(scoring_expr(lhs));
    comp->add(number(e.list[2]));
  }
  node->rule = rules::TerminalCompRule;
  node->add(std::move(comp));
  return node;
}

NodePtr Converter::game_body(const SExpr& e) {
  if (e.is_atom || e.list.size() < 4 || !e.list[0].is_atom || e.list[0].atom != "define")
    fail(e, "expected (define (game <id>) (:domain <id>) ...)");
  const SExpr& game_clause = e.list[1];
  if (game_clause.is_atom || game_clause.list.size() != 2 || !game_clause.list[0].is_atom ||
      game_clause.list[0].atom != "game" || !game_clause.list[1].is_atom)
    fail(game_clause, "expected (game <id>)");
  if (!valid_id(game_clause.list[1].atom)) fail(game_clause.list[1], "invalid game id");
  game_name = game_clause.list[1].atom;
  const SExpr& domain_clause = e.list[2];
  if (domain_clause.is_atom || domain_clause.list.size() != 2 || !domain_clause.list[0].is_atom ||
      domain_clause.list[0].atom != ":domain" || !domain_clause.list[1].is_atom)
    fail(domain_clause, "expected (:domain <id>)");
  if (!valid_id(domain_clause.list[1].atom)) fail(domain_clause.list[1], "invalid domain id");
  game_domain = domain_clause.list[1].atom;

  auto section = [&](const SExpr& s, const std::string& tag) -> const SExpr* {
    if (s.is_atom || s.list.size() != 2 || !s.list[0].is_atom || s.list[0].atom != tag)
      return nullptr;
    return &s.list[1];
  };

  size_t i = 3;
  auto root = make_node(Nt::Game);

  auto setup_section = make_node(Nt::SetupSection, rules::SectionAbsent);
  if (i < e.list.size()) {
    if (const SExpr* body = section(e.list[i], ":setup")) {
      setup_section->rule = rules::SectionPresent;
      setup_section->add(setup(*body));
      ++i;
    }
  }
  root->add(std::move(setup_section));

  if (i >= e.list.size()) fail(e, "missing (:constraints ...) section");
  const SExpr* constraints_body = section(e.list[i], ":constraints");
  if (!constraints_body) fail(e.list[i], "expected (:constraints ...)");
  root->add(constraints(*constraints_body));
  ++i;

  auto terminal_section = make_node(Nt::TerminalSection, rules::SectionAbsent);
  if (i < e.list.size()) {
    if (const SExpr* body = section(e.list[i], ":terminal")) {
      terminal_section->rule = rules::SectionPresent;
      terminal_section->add(terminal(*body));
      ++i;
    }
  }
  root->add(std::move(terminal_section));

  if (i >= e.list.size()) fail(e, "missing (:scoring ...) section");
  const SExpr* scoring_body = section(e.list[i], ":scoring");
  if (!scoring_body) fail(e.list[i], "expected (:scoring ...)");
  auto scoring = make_node(Nt::Scoring);
  scoring->add(scoring_expr(*scoring_body));
  root->add(std::move(scoring));
  ++i;

  if (i != e.list.size()) fail(e.list[i], "unexpected content after (:scoring ...)");
  return root;
}

}  // namespace

GameAst parse_game(const std::string& text) {
  Lexer lexer(text);
  SExpr e = lexer.read();
  if (!lexer.at_end()) throw ParseError("unexpected content after the game definition", e.line, e.col);
  Converter conv;
  NodePtr root = conv.game_body(e);
  return GameAst(conv.game_name, conv.game_domain, std::move(root));
}

NodePtr parse_preference(const std::string& text) {
  Lexer lexer(text);
  SExpr e = lexer.read();
  if (!lexer.at_end()) throw ParseError("unexpected content after the preference", e.line, e.col);
  Converter conv;
  return conv.pref_def(e);
}

}  // namespace goalgen
