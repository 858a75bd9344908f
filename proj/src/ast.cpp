#include "goalgen/ast.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace goalgen {

std::string_view nt_name(Nt nt) {
  switch (nt) {
    case Nt::Game: return "game";
    case Nt::SetupSection: return "setup-section";
    case Nt::Setup: return "setup";
    case Nt::SetupStatement: return "setup-statement";
    case Nt::Super: return "super-predicate";
    case Nt::FComp: return "function-comparison";
    case Nt::FArg: return "function-eval-or-number";
    case Nt::FunctionEval: return "function-eval";
    case Nt::Predicate: return "predicate";
    case Nt::Term: return "term";
    case Nt::Number: return "number";
    case Nt::VarList: return "variable-list";
    case Nt::VarDef: return "variable-def";
    case Nt::Variable: return "variable";
    case Nt::TypeDef: return "type-def";
    case Nt::TypeLeaf: return "type";
    case Nt::Constraints: return "constraints";
    case Nt::PrefDef: return "pref-def";
    case Nt::Preference: return "preference";
    case Nt::PrefQuant: return "preference-quantifier";
    case Nt::PrefBody: return "preference-body";
    case Nt::AtEnd: return "at-end";
    case Nt::Then: return "then";
    case Nt::SeqFunc: return "seq-func";
    case Nt::TerminalSection: return "terminal-section";
    case Nt::Terminal: return "terminal";
    case Nt::TerminalComp: return "terminal-comp";
    case Nt::Scoring: return "scoring";
    case Nt::ScoringExpr: return "scoring-expr";
    case Nt::ScoringComp: return "scoring-comp";
    case Nt::PrefEval: return "preference-eval";
    case Nt::PrefRef: return "pref-name-and-types";
  }
  return "?";
}

std::string_view count_mode_keyword(int r) {
  static const std::array<std::string_view, 8> kw = {
      "count",         "count-overlapping",      "count-once",
      "count-once-per-objects", "count-measure", "count-unique-positions",
      "count-same-positions",   "count-once-per-external-objects"};
  return kw.at(static_cast<size_t>(r));
}

NodePtr Node::clone() const {
  auto out = std::make_unique<Node>(nt, rule, token);
  out->children.reserve(children.size());
  for (const auto& c : children) out->children.push_back(c->clone());
  return out;
}

size_t Node::size() const {
  size_t n = 1;
  for (const auto& c : children) n += c->size();
  return n;
}

int Node::depth() const {
  int d = 0;
  for (const auto& c : children) d = std::max(d, c->depth());
  return d + 1;
}

NodePtr make_node(Nt nt, int rule, std::string token) {
  return std::make_unique<Node>(nt, rule, std::move(token));
}

bool nodes_equal(const Node& a, const Node& b) {
  if (a.nt != b.nt || a.rule != b.rule || a.token != b.token ||
      a.children.size() != b.children.size())
    return false;
  for (size_t i = 0; i < a.children.size(); ++i)
    if (!nodes_equal(*a.children[i], *b.children[i])) return false;
  return true;
}

GameAst::GameAst(std::string name, std::string domain, NodePtr root)
    : name_(std::move(name)), domain_(std::move(domain)), root_(std::move(root)) {
  if (!root_ || root_->nt != Nt::Game || root_->children.size() != 4)
    throw std::invalid_argument("game root must have four section children");
  reindex();
}

GameAst::GameAst(const GameAst& other)
    : name_(other.name_), domain_(other.domain_) {
  if (other.root_) {
    root_ = other.root_->clone();
    reindex();
  }
}

GameAst& GameAst::operator=(const GameAst& other) {
  if (this == &other) return *this;
  name_ = other.name_;
  domain_ = other.domain_;
  root_ = other.root_ ? other.root_->clone() : nullptr;
  index_.clear();
  parent_.clear();
  if (root_) reindex();
  return *this;
}

void GameAst::reindex() {
  index_.clear();
  parent_.clear();
  std::function<void(Node&, int)> walk = [&](Node& n, int parent) {
    n.id = static_cast<int>(index_.size());
    index_.push_back(&n);
    parent_.push_back(parent);
    for (auto& c : n.children) walk(*c, n.id);
  };
  walk(*root_, -1);
}

Node* GameAst::node_by_id(int id) const {
  if (id < 0 || id >= static_cast<int>(index_.size())) return nullptr;
  return index_[static_cast<size_t>(id)];
}

Node* GameAst::parent_of(int id) const {
  if (id <= 0 || id >= static_cast<int>(parent_.size())) return nullptr;
  return node_by_id(parent_[static_cast<size_t>(id)]);
}

bool GameAst::operator==(const GameAst& other) const {
  return name_ == other.name_ && domain_ == other.domain_ &&
         nodes_equal(*root_, *other.root_);
}

std::vector<Node*> preference_defs(const GameAst& game) {
  std::vector<Node*> out;
  for (auto& c : game.constraints().children) out.push_back(c.get());
  return out;
}

Node* preference_of(Node* prefDef) {
  if (prefDef->rule == rules::PrefForallDef) return prefDef->children[1].get();
  return prefDef->children[0].get();
}

std::string_view preference_name(const Node& prefDef) {
  const Node* p = prefDef.rule == rules::PrefForallDef ? prefDef.children[1].get()
                                                       : prefDef.children[0].get();
  return p->token;
}

void visit(const Node& node, const std::function<void(const Node&)>& fn) {
  fn(node);
  for (const auto& c : node.children) visit(*c, fn);
}

void visit_mut(Node& node, const std::function<void(Node&)>& fn) {
  fn(node);
  for (auto& c : node.children) visit_mut(*c, fn);
}

}  // namespace goalgen
