#include "goalgen/printer.hpp"

#include <sstream>

namespace goalgen {

namespace {

// Emits either surface syntax (with parentheses) or the flattened token
// sequence used by the n-gram models.
class Emitter {
 public:
  explicit Emitter(bool for_ngram) : for_ngram_(for_ngram) {}

  std::vector<std::string> take() { return std::move(out_); }

  void open() {
    if (!for_ngram_) out_.push_back("(");
  }
  void close() {
    if (!for_ngram_) out_.push_back(")");
  }
  void tok(std::string_view s) { out_.emplace_back(s); }

  void variable(const std::string& name) {
    if (!for_ngram_) {
      tok(name);
      return;
    }
    switch (*classify_variable(name)) {
      case TermClass::Object: tok("<var>"); break;
      case TermClass::ColorClass: tok("<color-var>"); break;
      case TermClass::OrientationClass: tok("<orientation-var>"); break;
      case TermClass::SideClass: tok("<side-var>"); break;
    }
  }

  void pref_name(const std::string& name) { tok(for_ngram_ ? "<pref>" : name); }

  void node(const Node& n) {
    switch (n.nt) {
      case Nt::Game: game(n); return;
      case Nt::SetupSection:
        if (n.rule == rules::SectionPresent) {
          open();
          tok(":setup");
          node(*n.children[0]);
          close();
        }
        return;
      case Nt::Setup: setup(n); return;
      case Nt::SetupStatement:
        open();
        tok(n.rule == rules::Conserved ? "game-conserved" : "game-optional");
        node(*n.children[0]);
        close();
        return;
      case Nt::Super: super(n); return;
      case Nt::FComp:
        open();
        tok(n.token);
        for (const auto& c : n.children) node(*c);
        close();
        return;
      case Nt::FArg: node(*n.children[0]); return;
      case Nt::FunctionEval:
      case Nt::Predicate:
        open();
        tok(n.token);
        for (const auto& c : n.children) node(*c);
        close();
        return;
      case Nt::Term:
        if (n.rule == rules::TermVariable)
          variable(n.token);
        else
          tok(n.token);
        return;
      case Nt::Number: tok(n.token); return;
      case Nt::VarList:
        open();
        for (const auto& c : n.children) node(*c);
        close();
        return;
      case Nt::VarDef:
        for (size_t i = 0; i + 1 < n.children.size(); ++i) node(*n.children[i]);
        tok("-");
        node(*n.children.back());
        return;
      case Nt::Variable: variable(n.token); return;
      case Nt::TypeDef:
        if (n.rule == rules::TypeSingle) {
          node(*n.children[0]);
        } else {
          open();
          tok("either");
          for (const auto& c : n.children) node(*c);
          close();
        }
        return;
      case Nt::TypeLeaf: tok(n.token); return;
      case Nt::Constraints:
        if (n.children.size() == 1) {
          node(*n.children[0]);
        } else {
          open();
          tok("and");
          for (const auto& c : n.children) node(*c);
          close();
        }
        return;
      case Nt::PrefDef:
        if (n.rule == rules::PrefForallDef) {
          open();
          tok("forall");
          node(*n.children[0]);
          node(*n.children[1]);
          close();
        } else {
          node(*n.children[0]);
        }
        return;
      case Nt::Preference:
        open();
        tok("preference");
        pref_name(n.token);
        node(*n.children[0]);
        close();
        return;
      case Nt::PrefQuant:
        if (n.rule == rules::QuantNone) {
          node(*n.children[0]);
        } else {
          open();
          tok(n.rule == rules::QuantExists ? "exists" : "forall");
          node(*n.children[0]);
          node(*n.children[1]);
          close();
        }
        return;
      case Nt::PrefBody: node(*n.children[0]); return;
      case Nt::AtEnd:
        open();
        tok("at-end");
        node(*n.children[0]);
        close();
        return;
      case Nt::Then:
        open();
        tok("then");
        for (const auto& c : n.children) node(*c);
        close();
        return;
      case Nt::SeqFunc: seq_func(n); return;
      case Nt::TerminalSection:
        if (n.rule == rules::SectionPresent) {
          open();
          tok(":terminal");
          node(*n.children[0]);
          close();
        }
        return;
      case Nt::Terminal: terminal(n); return;
      case Nt::TerminalComp:
        open();
        tok(n.token);
        if (n.rule == rules::CompTime || n.rule == rules::CompScore) {
          open();
          tok(n.rule == rules::CompTime ? "total-time" : "total-score");
          close();
          node(*n.children[0]);
        } else {
          node(*n.children[0]);
          node(*n.children[1]);
        }
        close();
        return;
      case Nt::Scoring:
        open();
        tok(":scoring");
        node(*n.children[0]);
        close();
        return;
      case Nt::ScoringExpr: scoring(n); return;
      case Nt::ScoringComp:
        open();
        tok(n.token);
        for (const auto& c : n.children) node(*c);
        close();
        return;
      case Nt::PrefEval:
        open();
        tok(count_mode_keyword(n.rule));
        node(*n.children[0]);
        close();
        return;
      case Nt::PrefRef: {
        if (for_ngram_) {
          pref_name(n.token);
          for (const auto& c : n.children) tok(c->token);
        } else {
          std::string joined = n.token;
          for (const auto& c : n.children) {
            joined += ':';
            joined += c->token;
          }
          tok(joined);
        }
        return;
      }
    }
  }

 private:
  void game(const Node& n) {
    open();
    tok("define");
    for (const auto& c : n.children) node(*c);
    close();
  }

  void setup(const Node& n) {
    switch (n.rule) {
      case rules::SetupAnd:
      case rules::SetupOr:
        open();
        tok(n.rule == rules::SetupAnd ? "and" : "or");
        for (const auto& c : n.children) node(*c);
        close();
        return;
      case rules::SetupNot:
        open();
        tok("not");
        node(*n.children[0]);
        close();
        return;
      case rules::SetupExists:
      case rules::SetupForall:
        open();
        tok(n.rule == rules::SetupExists ? "exists" : "forall");
        node(*n.children[0]);
        node(*n.children[1]);
        close();
        return;
      default: node(*n.children[0]); return;
    }
  }

  void super(const Node& n) {
    switch (n.rule) {
      case rules::SuperAnd:
      case rules::SuperOr:
        open();
        tok(n.rule == rules::SuperAnd ? "and" : "or");
        for (const auto& c : n.children) node(*c);
        close();
        return;
      case rules::SuperNot:
        open();
        tok("not");
        node(*n.children[0]);
        close();
        return;
      case rules::SuperExists:
      case rules::SuperForall:
        open();
        tok(n.rule == rules::SuperExists ? "exists" : "forall");
        node(*n.children[0]);
        node(*n.children[1]);
        close();
        return;
      default: node(*n.children[0]); return;
    }
  }

  void seq_func(const Node& n) {
    open();
    switch (n.rule) {
      case rules::SeqOnce: tok("once"); break;
      case rules::SeqOnceMeasure: tok("once-measure"); break;
      case rules::SeqHold: tok("hold"); break;
      default: tok("hold-while"); break;
    }
    for (const auto& c : n.children) node(*c);
    close();
  }

  void terminal(const Node& n) {
    switch (n.rule) {
      case rules::TerminalAnd:
      case rules::TerminalOr:
        open();
        tok(n.rule == rules::TerminalAnd ? "and" : "or");
        for (const auto& c : n.children) node(*c);
        close();
        return;
      case rules::TerminalNot:
        open();
        tok("not");
        node(*n.children[0]);
        close();
        return;
      default: node(*n.children[0]); return;
    }
  }

  void scoring(const Node& n) {
    switch (n.rule) {
      case rules::ScoreExtMax:
      case rules::ScoreExtMin:
        open();
        tok(n.rule == rules::ScoreExtMax ? "external-forall-maximize" : "external-forall-minimize");
        node(*n.children[0]);
        close();
        return;
      case rules::ScoreMulti:
        open();
        tok(n.token);
        for (const auto& c : n.children) node(*c);
        close();
        return;
      case rules::ScoreBinary:
        open();
        tok(n.token);
        node(*n.children[0]);
        node(*n.children[1]);
        close();
        return;
      case rules::ScoreNeg:
        open();
        tok("-");
        node(*n.children[0]);
        close();
        return;
      case rules::ScoreTotalTime:
      case rules::ScoreTotalScore:
        open();
        tok(n.rule == rules::ScoreTotalTime ? "total-time" : "total-score");
        close();
        return;
      default: node(*n.children[0]); return;
    }
  }

  bool for_ngram_;
  std::vector<std::string> out_;
};

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    const std::string& t = tokens[i];
    if (!out.empty() && t != ")" && out.back() != '(') out += ' ';
    out += t;
  }
  return out;
}

}  // namespace

std::string print_node(const Node& node) {
  Emitter e(false);
  e.node(node);
  return join_tokens(e.take());
}

std::string print_game(const GameAst& game) {
  std::vector<std::string> tokens;
  Emitter e(false);
  e.open();
  e.tok("define");
  e.open();
  e.tok("game");
  e.tok(game.name());
  e.close();
  e.open();
  e.tok(":domain");
  e.tok(game.domain());
  e.close();
  e.node(game.setup_section());
  e.open();
  e.tok(":constraints");
  e.node(game.constraints());
  e.close();
  e.node(game.terminal_section());
  e.node(game.scoring());
  e.close();
  return join_tokens(e.take());
}

std::vector<std::string> tokenize_node(const Node& node) {
  Emitter e(true);
  e.node(node);
  return e.take();
}

std::vector<std::string> tokenize_game(const GameAst& game) {
  Emitter e(true);
  e.node(game.setup_section());
  e.tok(":constraints");
  e.node(game.constraints());
  e.node(game.terminal_section());
  e.node(game.scoring());
  return e.take();
}

}  // namespace goalgen
