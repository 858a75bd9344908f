#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "goalgen/domain.hpp"

namespace goalgen {

// Grammar categories. Every tree node belongs to exactly one of these; the
// `rule` field selects the production used to expand it.
enum class Nt : uint8_t {
  Game,
  SetupSection,  // optional wrapper so every game tree has the same shape
  Setup,
  SetupStatement,
  Super,
  FComp,
  FArg,
  FunctionEval,
  Predicate,
  Term,
  Number,
  VarList,
  VarDef,
  Variable,
  TypeDef,
  TypeLeaf,
  Constraints,
  PrefDef,
  Preference,
  PrefQuant,
  PrefBody,
  AtEnd,
  Then,
  SeqFunc,
  TerminalSection,
  Terminal,
  TerminalComp,
  Scoring,
  ScoringExpr,
  ScoringComp,
  PrefEval,
  PrefRef,
};

std::string_view nt_name(Nt nt);

namespace rules {
enum Section { SectionAbsent = 0, SectionPresent = 1 };
enum Setup { SetupAnd = 0, SetupOr, SetupNot, SetupExists, SetupForall, SetupStmt };
enum SetupStatement { Conserved = 0, Optional };
enum Super { SuperAnd = 0, SuperOr, SuperNot, SuperExists, SuperForall, SuperComp, SuperPred };
enum FComp { FCompBinary = 0, FCompEq };  // token holds the comparison operator for Binary
enum FArg { FArgFunc = 0, FArgNum };
enum Term { TermVariable = 0, TermName };
enum TypeDef { TypeSingle = 0, TypeEither };
enum VarDef { VarObject = 0, VarColor, VarOrientation, VarSide };
enum PrefDef { PrefPlain = 0, PrefForallDef };
enum PrefQuant { QuantExists = 0, QuantForall, QuantNone };
enum PrefBody { BodyThen = 0, BodyAtEnd };
enum SeqFunc { SeqOnce = 0, SeqOnceMeasure, SeqHold, SeqHoldWhile };
enum Terminal { TerminalAnd = 0, TerminalOr, TerminalNot, TerminalCompRule };
enum TerminalComp { CompTime = 0, CompScore, CompPrefCount };  // token holds the operator
enum ScoringExpr {
  ScoreExtMax = 0,
  ScoreExtMin,
  ScoreMulti,   // token is "+" or "*"
  ScoreBinary,  // token is "-" or "/"
  ScoreNeg,
  ScoreTotalTime,
  ScoreTotalScore,
  ScoreCompRule,
  ScorePrefEval,
  ScoreNumber,
};
enum ScoringComp { SCompBinary = 0, SCompEq };  // token holds the operator for Binary
enum PrefEval {
  Count = 0,
  CountOverlapping,
  CountOnce,
  CountOncePerObjects,
  CountMeasure,
  CountUniquePositions,
  CountSamePositions,
  CountOncePerExternalObjects,
};
}  // namespace rules

std::string_view count_mode_keyword(int prefEvalRule);

struct Node;
using NodePtr = std::unique_ptr<Node>;

struct Node {
  Nt nt;
  int rule = 0;
  std::string token;  // leaf text, operator, predicate/function/preference name
  std::vector<NodePtr> children;
  int id = -1;  // preorder index, assigned by GameAst::reindex

  Node(Nt k, int r = 0) : nt(k), rule(r) {}
  Node(Nt k, int r, std::string tok) : nt(k), rule(r), token(std::move(tok)) {}

  NodePtr clone() const;
  void add(NodePtr child) { children.push_back(std::move(child)); }
  size_t size() const;    // number of nodes in this subtree
  int depth() const;      // height of this subtree, a leaf has depth 1
};

NodePtr make_node(Nt nt, int rule = 0, std::string token = {});
bool nodes_equal(const Node& a, const Node& b);

// A full game program: identifier, domain and the four sections.
class GameAst {
 public:
  GameAst() = default;
  GameAst(std::string name, std::string domain, NodePtr root);
  GameAst(const GameAst& other);
  GameAst& operator=(const GameAst& other);
  GameAst(GameAst&&) = default;
  GameAst& operator=(GameAst&&) = default;

  const std::string& name() const { return name_; }
  const std::string& domain() const { return domain_; }
  void set_name(std::string n) { name_ = std::move(n); }

  Node& root() { return *root_; }
  const Node& root() const { return *root_; }
  // Sections (SetupSection/TerminalSection may be "absent" wrappers).
  Node& setup_section() const { return *root_->children[0]; }
  Node& constraints() const { return *root_->children[1]; }
  Node& terminal_section() const { return *root_->children[2]; }
  Node& scoring() const { return *root_->children[3]; }
  bool has_setup() const { return setup_section().rule == rules::SectionPresent; }
  bool has_terminal() const { return terminal_section().rule == rules::SectionPresent; }

  // Reassigns preorder ids and rebuilds the id lookup. Call after any mutation.
  void reindex();
  Node* node_by_id(int id) const;
  Node* parent_of(int id) const;
  int node_count() const { return static_cast<int>(index_.size()); }

  bool operator==(const GameAst& other) const;

 private:
  std::string name_;
  std::string domain_;
  NodePtr root_;
  std::vector<Node*> index_;
  std::vector<int> parent_;
};

// All preference definitions, in order. Each entry is the PrefDef node.
std::vector<Node*> preference_defs(const GameAst& game);
// The Preference node inside a PrefDef.
Node* preference_of(Node* prefDef);
std::string_view preference_name(const Node& prefDef);

// Visits every node in preorder.
void visit(const Node& node, const std::function<void(const Node&)>& fn);
void visit_mut(Node& node, const std::function<void(Node&)>& fn);

}  // namespace goalgen
