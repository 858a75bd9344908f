#include "goalgen/qd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "goalgen/parser.hpp"
#include "goalgen/printer.hpp"

namespace goalgen {

namespace {

int predicate_group(std::string_view name) {
  if (name == "agent_holds" || name == "in_motion") return 0;
  if (name == "in") return 1;
  if (name == "on") return 2;
  if (name == "adjacent" || name == "near" || name == "touch") return 3;
  return -1;
}

int category_group(Category c) {
  switch (c) {
    case Category::Balls: return 4;
    case Category::Receptacles: return 5;
    case Category::Blocks: return 6;
    case Category::Furniture:
    case Category::RoomFeatures: return 7;
    case Category::SmallObjects:
    case Category::LargeObjects:
    case Category::AnyObject: return 8;
    default: return -1;
  }
}

struct ExemplarSource {
  const char* name;
  const char* text;
};

constexpr ExemplarSource kExemplarSources[] = {
    {"throwAttempt", R"PREF((preference throwAttempt
      (exists (?b - dodgeball)
        (then
          (once (agent_holds ?b))
          (hold (and (not (agent_holds ?b)) (in_motion ?b)))
          (once (not (in_motion ?b)))))))PREF"},
    {"throwInBin", R"PREF((preference throwInBin
      (exists (?b - ball ?h - hexagonal_bin)
        (then
          (once (and (on rug agent) (agent_holds ?b)))
          (hold (and (not (agent_holds ?b)) (in_motion ?b)))
          (once (and (not (in_motion ?b)) (in ?h ?b)))))))PREF"},
    {"ballThrownToBed", R"PREF((preference ballThrownToBed
      (exists (?d - dodgeball)
        (then
          (once (and (agent_holds ?d) (adjacent desk agent)))
          (hold (and (not (agent_holds ?d)) (in_motion ?d)))
          (once (and (not (in_motion ?d)) (on bed ?d)))))))PREF"},
    {"itemInClosedDrawerAtEnd", R"PREF((preference itemInClosedDrawerAtEnd
      (exists (?g - game_object)
        (at-end (and
          (in top_drawer ?g)
          (not (open top_drawer)))))))PREF"},
    {"watchOnShelf", R"PREF((preference watchOnShelf
      (exists (?w - watch ?s - shelf)
        (at-end (on ?s ?w)))))PREF"},
    {"gameBlockFound", R"PREF((preference gameBlockFound
      (exists (?l - block)
        (then
          (once (game_start))
          (hold (not (exists (?b - building) (and (in ?b ?l) (is_setup_object ?b)))))
          (once (agent_holds ?l))))))PREF"},
    {"matchingBuildingBuilt", R"PREF((preference matchingBuildingBuilt
      (exists (?b1 ?b2 - building)
        (at-end (and
          (is_setup_object ?b1)
          (not (is_setup_object ?b2))
          (forall (?l1 ?l2 - block) (or
            (not (in ?b1 ?l1))
            (not (in ?b1 ?l2))
            (not (on ?l1 ?l2))
            (exists (?l3 ?l4 - block) (and
              (in ?b2 ?l3)
              (in ?b2 ?l4)
              (on ?l3 ?l4)
              (same_type ?l1 ?l3)
              (same_type ?l2 ?l4))))))))))PREF"},
    {"ballDroppedInBin", R"PREF((preference ballDroppedInBin
      (exists (?b - ball ?h - hexagonal_bin)
        (then
          (once (and (adjacent ?h agent) (agent_holds ?b)))
          (hold (and (in_motion ?b) (not (agent_holds ?b))))
          (once (and (not (in_motion ?b)) (in ?h ?b)))))))PREF"},
    {"pillowMovedToRoomCenter", R"PREF((preference pillowMovedToRoomCenter
      (exists (?o - pillow)
        (then
          (once (and (agent_holds ?o)))
          (hold (and (in_motion ?o) (not (agent_holds ?o))))
          (once (and (not (in_motion ?o)) (near room_center ?o)
            (exists (?o1 ?o2 ?o3 - game_object) (and
              (same_color ?o1 pink) (near room_center ?o1)
              (same_color ?o2 blue) (near room_center ?o2)
              (same_color ?o3 brown) (near room_center ?o3)))))))))PREF"},
};

uint64_t binom(uint64_t n, uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  uint64_t out = 1;
  for (uint64_t i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return out;
}

bool is_wrapper(Nt nt) {
  return nt == Nt::Game || nt == Nt::SetupSection || nt == Nt::TerminalSection ||
         nt == Nt::Scoring;
}

void ensure_unique_pref_names(GameAst& game) {
  std::set<std::string> seen;
  int counter = 0;
  for (Node* def : preference_defs(game)) {
    Node* pref = preference_of(def);
    if (seen.insert(pref->token).second) continue;
    std::string fresh;
    do {
      fresh = "preference" + std::to_string(counter++);
    } while (seen.count(fresh));
    pref->token = fresh;
    seen.insert(fresh);
  }
}

bool duplicate_pref_bodies(const GameAst& game) {
  std::set<std::string> seen;
  for (const Node* def : preference_defs(game)) {
    NodePtr copy = def->clone();
    visit_mut(*copy, [](Node& n) {
      if (n.nt == Nt::Preference) n.token.clear();
    });
    if (!seen.insert(print_node(*copy)).second) return true;
  }
  return false;
}

bool insert_site(const Node& n) {
  switch (n.nt) {
    case Nt::Setup: return n.rule == rules::SetupAnd || n.rule == rules::SetupOr;
    case Nt::Super: return n.rule == rules::SuperAnd || n.rule == rules::SuperOr;
    case Nt::SeqFunc: return n.rule == rules::SeqHoldWhile;
    case Nt::Then:
    case Nt::Constraints:
    case Nt::VarList: return true;
    case Nt::Terminal: return n.rule == rules::TerminalAnd || n.rule == rules::TerminalOr;
    case Nt::ScoringExpr: return n.rule == rules::ScoreMulti;
    case Nt::ScoringComp: return n.rule == rules::SCompEq;
    case Nt::FComp: return n.rule == rules::FCompEq;
    case Nt::TypeDef: return n.rule == rules::TypeEither;
    default: return false;
  }
}

// Grammar minimum child count for list-like nodes, 0 when not deletable.
size_t delete_floor(const Node& n) {
  switch (n.nt) {
    case Nt::Setup:
      return (n.rule == rules::SetupAnd || n.rule == rules::SetupOr) ? 2 : 0;
    case Nt::Super:
      return (n.rule == rules::SuperAnd || n.rule == rules::SuperOr) ? 1 : 0;
    case Nt::SeqFunc: return n.rule == rules::SeqHoldWhile ? 2 : 0;
    case Nt::Then: return 2;
    case Nt::Constraints: return 1;
    case Nt::Terminal:
      return (n.rule == rules::TerminalAnd || n.rule == rules::TerminalOr) ? 1 : 0;
    case Nt::ScoringExpr: return n.rule == rules::ScoreMulti ? 1 : 0;
    case Nt::ScoringComp: return n.rule == rules::SCompEq ? 2 : 0;
    case Nt::FComp: return n.rule == rules::FCompEq ? 2 : 0;
    case Nt::VarList: return 1;
    case Nt::TypeDef: return n.rule == rules::TypeEither ? 2 : 0;
    default: return 0;
  }
}

std::optional<GameAst> op_regrow(const GameAst& base, const Pcfg& pcfg, Rng& rng) {
  std::vector<int> targets = pcfg.regrow_targets(base);
  if (targets.empty()) return std::nullopt;
  return pcfg.regrow(base, targets[uniform_below(rng, targets.size())], rng);
}

std::optional<GameAst> op_insert(const GameAst& base, const Pcfg& pcfg, Rng& rng) {
  GameAst child = base;
  child.reindex();
  std::vector<int> sites;
  visit(child.root(), [&](const Node& n) {
    if (insert_site(n)) sites.push_back(n.id);
  });
  if (sites.empty()) return std::nullopt;
  Node* target = child.node_by_id(sites[uniform_below(rng, sites.size())]);
  NodePtr extra = pcfg.sample_child_for(child, *target, rng);
  if (!extra) return std::nullopt;
  size_t lo = target->nt == Nt::SeqFunc ? 1 : 0;  // slot 0 of hold-while is the held condition
  size_t pos = lo + uniform_below(rng, target->children.size() + 1 - lo);
  target->children.insert(target->children.begin() + pos, std::move(extra));
  if (target->nt == Nt::Constraints) ensure_unique_pref_names(child);
  child.reindex();
  return child;
}

std::optional<GameAst> op_delete(const GameAst& base, Rng& rng) {
  GameAst child = base;
  child.reindex();
  std::vector<std::pair<int, size_t>> sites;
  visit(child.root(), [&](const Node& n) {
    if (n.nt == Nt::VarDef) {
      // (?a ?b - type): any one variable can go as long as another remains
      if (n.children.size() >= 3)
        for (size_t i = 0; i + 1 < n.children.size(); ++i) sites.push_back({n.id, i});
      return;
    }
    size_t floor = delete_floor(n);
    if (floor == 0 || n.children.size() <= floor) return;
    size_t first = n.nt == Nt::SeqFunc ? 1 : 0;
    for (size_t i = first; i < n.children.size(); ++i) sites.push_back({n.id, i});
  });
  if (sites.empty()) return std::nullopt;
  auto [id, idx] = sites[uniform_below(rng, sites.size())];
  Node* target = child.node_by_id(id);
  target->children.erase(target->children.begin() + idx);
  child.reindex();
  return child;
}

std::optional<GameAst> op_crossover(const GameAst& base, const std::vector<const CellEntry*>& pool,
                                    Rng& rng) {
  if (pool.empty()) return std::nullopt;
  const GameAst& partner = pool[uniform_below(rng, pool.size())]->game;
  std::map<Nt, std::vector<const Node*>> donors;
  visit(partner.root(), [&](const Node& n) {
    if (!is_wrapper(n.nt)) donors[n.nt].push_back(&n);
  });
  GameAst child = base;
  child.reindex();
  std::vector<int> sites;
  visit(child.root(), [&](const Node& n) {
    if (!is_wrapper(n.nt) && donors.count(n.nt)) sites.push_back(n.id);
  });
  if (sites.empty()) return std::nullopt;
  Node* target = child.node_by_id(sites[uniform_below(rng, sites.size())]);
  const auto& bucket = donors[target->nt];
  NodePtr incoming = bucket[uniform_below(rng, bucket.size())]->clone();
  if (target->nt == Nt::PrefDef) {
    std::string keep(preference_name(*target));
    visit_mut(*incoming, [&](Node& n) {
      if (n.nt == Nt::Preference) n.token = keep;
    });
  }
  Node* parent = child.parent_of(target->id);
  if (!parent) return std::nullopt;
  for (auto& c : parent->children)
    if (c.get() == target) {
      c = std::move(incoming);
      break;
    }
  child.reindex();
  ensure_unique_pref_names(child);
  child.reindex();
  return child;
}

std::optional<GameAst> op_resample_variables(const GameAst& base, const Pcfg& pcfg, Rng& rng) {
  std::vector<int> sites;
  visit(base.constraints(), [&](const Node& n) {
    if (n.nt == Nt::TypeDef) sites.push_back(n.id);
  });
  if (sites.empty()) return std::nullopt;
  return pcfg.regrow(base, sites[uniform_below(rng, sites.size())], rng);
}

std::optional<GameAst> op_resample_condition(const GameAst& base, const Pcfg& pcfg, Rng& rng,
                                             bool first) {
  std::vector<const Node*> thens;
  visit(base.constraints(), [&](const Node& n) {
    if (n.nt == Nt::Then && !n.children.empty()) thens.push_back(&n);
  });
  if (thens.empty()) return std::nullopt;
  const Node* seq = thens[uniform_below(rng, thens.size())];
  int id = first ? seq->children.front()->id : seq->children.back()->id;
  return pcfg.regrow(base, id, rng);
}

std::optional<GameAst> op_resample_setup(const GameAst& base, const Pcfg& pcfg, Rng& rng) {
  GameAst child = base;
  child.reindex();
  if (child.has_setup()) return pcfg.regrow(child, child.setup_section().children[0]->id, rng);
  Scope scope = Pcfg::scope_at(child, child.setup_section().id);
  NodePtr body = pcfg.sample_setup_body(scope, rng);
  Node& section = child.setup_section();
  section.rule = rules::SectionPresent;
  section.children.clear();
  section.add(std::move(body));
  child.reindex();
  return child;
}

std::optional<GameAst> op_resample_terminal(const GameAst& base, const Pcfg& pcfg, Rng& rng) {
  GameAst child = base;
  child.reindex();
  if (child.has_terminal())
    return pcfg.regrow(child, child.terminal_section().children[0]->id, rng);
  Scope scope = Pcfg::scope_at(child, child.terminal_section().id);
  NodePtr body = pcfg.sample_terminal_body(scope, rng);
  Node& section = child.terminal_section();
  section.rule = rules::SectionPresent;
  section.children.clear();
  section.add(std::move(body));
  child.reindex();
  return child;
}

GenerationStats snapshot_stats(const SearchState& state) {
  GenerationStats row;
  row.generation = state.generation;
  row.coherent_cells = state.archive.coherent.size();
  row.incoherent_cells = state.archive.incoherent.size();
  row.candidates = state.candidates;
  row.inserts = state.inserts;
  std::vector<double> fits;
  fits.reserve(state.archive.coherent.size());
  for (const auto& [key, entry] : state.archive.coherent) fits.push_back(entry.fitness);
  if (fits.empty()) {
    double nan = std::numeric_limits<double>::quiet_NaN();
    row.fit_min = row.fit_q25 = row.fit_q50 = row.fit_q75 = row.fit_max = nan;
    return row;
  }
  std::sort(fits.begin(), fits.end());
  auto quantile = [&](double p) {
    double pos = p * double(fits.size() - 1);
    size_t lo = size_t(pos);
    size_t hi = std::min(lo + 1, fits.size() - 1);
    double frac = pos - double(lo);
    return fits[lo] * (1.0 - frac) + fits[hi] * frac;
  };
  row.fit_min = fits.front();
  row.fit_q25 = quantile(0.25);
  row.fit_q50 = quantile(0.5);
  row.fit_q75 = quantile(0.75);
  row.fit_max = fits.back();
  return row;
}

double json_number(const nlohmann::json& v) {
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

}  // namespace

int bc_l1(const BcVector& a, const BcVector& b) {
  int d = 0;
  for (size_t i = 0; i < kBcBits; ++i) d += std::abs(int(a[i]) - int(b[i]));
  return d;
}

BcVector pref_bc_vector(const Node& prefDef) {
  BcVector bits{};
  visit(prefDef, [&](const Node& n) {
    if (n.nt == Nt::Predicate) {
      int g = predicate_group(n.token);
      if (g >= 0) bits[g] = 1;
    } else if (n.nt == Nt::TypeLeaf || (n.nt == Nt::Term && n.rule == rules::TermName)) {
      if (auto cat = category_of_type(n.token)) {
        int g = category_group(*cat);
        if (g >= 0) bits[g] = 1;
      }
    }
  });
  return bits;
}

const ExemplarSet& ExemplarSet::full() {
  static const ExemplarSet set = [] {
    ExemplarSet s;
    for (const auto& src : kExemplarSources) {
      NodePtr def = parse_preference(src.text);
      s.prefs.push_back({src.name, pref_bc_vector(*def)});
    }
    return s;
  }();
  return set;
}

const ExemplarSet& ExemplarSet::desk() {
  static const ExemplarSet set = [] {
    ExemplarSet s;
    for (const auto& pref : full().prefs)
      if (pref.name == "throwAttempt" || pref.name == "throwInBin" ||
          pref.name == "itemInClosedDrawerAtEnd")
        s.prefs.push_back(pref);
    return s;
  }();
  return set;
}

void SearchSpace::check() const {
  if (exemplars.prefs.empty()) throw std::invalid_argument("the exemplar set is empty");
  std::set<std::string> names;
  for (const auto& pref : exemplars.prefs)
    if (!names.insert(pref.name).second)
      throw std::invalid_argument("duplicate exemplar name '" + pref.name + "'");
  if (min_prefs < 1 || max_prefs < min_prefs)
    throw std::invalid_argument("preference count range must satisfy 1 <= min <= max");
}

uint64_t SearchSpace::cell_count() const {
  uint64_t e = exemplars.size();
  uint64_t total = 0;
  for (int n = min_prefs; n <= max_prefs; ++n) total += binom(uint64_t(n) + e, e);
  return total * 2;
}

SearchSpace SearchSpace::full() { return SearchSpace{ExemplarSet::full(), 1, 4}; }

SearchSpace SearchSpace::desk() { return SearchSpace{ExemplarSet::desk(), 1, 2}; }

int ArchiveKey::total_prefs() const {
  int total = 0;
  for (int c : counts) total += c;
  return total;
}

bool ArchiveKey::operator==(const ArchiveKey& other) const {
  return counts == other.counts && setup == other.setup;
}

bool ArchiveKey::operator<(const ArchiveKey& other) const {
  if (counts != other.counts) return counts < other.counts;
  return setup < other.setup;
}

ArchiveKey behavioral_key(const GameAst& game, const SearchSpace& space, Rng& rng) {
  std::vector<Node*> defs = preference_defs(game);
  int n = int(defs.size());
  if (n < space.min_prefs || n > space.max_prefs)
    throw std::out_of_range("preference count outside the archive range");
  ArchiveKey key;
  key.counts.assign(space.exemplars.size() + 1, 0);
  key.setup = game.has_setup();
  for (const Node* def : defs) {
    BcVector bc = pref_bc_vector(*def);
    std::vector<size_t> matches;
    for (size_t e = 0; e < space.exemplars.size(); ++e)
      if (bc_l1(bc, space.exemplars.prefs[e].bits) <= 1) matches.push_back(e);
    if (matches.empty())
      key.counts.back() += 1;
    else if (matches.size() == 1)
      key.counts[matches[0]] += 1;
    else
      key.counts[matches[uniform_below(rng, matches.size())]] += 1;
  }
  return key;
}

std::vector<ArchiveKey> enumerate_keys(const SearchSpace& space) {
  std::vector<ArchiveKey> out;
  size_t bins = space.exemplars.size() + 1;
  std::vector<int> counts(bins, 0);
  auto fill = [&](auto&& self, size_t bin, int remaining) -> void {
    if (bin + 1 == bins) {
      counts[bin] = remaining;
      for (bool setup : {false, true}) out.push_back({counts, setup});
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      counts[bin] = c;
      self(self, bin + 1, remaining - c);
    }
  };
  for (int n = space.min_prefs; n <= space.max_prefs; ++n) fill(fill, 0, n);
  return out;
}

bool Archive::try_insert(bool coherentHalf, const ArchiveKey& key, CellEntry entry) {
  auto& half = coherentHalf ? coherent : incoherent;
  auto it = half.find(key);
  if (it == half.end()) {
    half.emplace(key, std::move(entry));
    return true;
  }
  if (entry.fitness > it->second.fitness) {
    it->second = std::move(entry);
    return true;
  }
  return false;
}

std::string_view mutation_op_name(MutationOp op) {
  static constexpr std::string_view names[kMutationOps] = {
      "regrow",
      "insert",
      "delete",
      "crossover",
      "resample_variables",
      "resample_first_condition",
      "resample_last_condition",
      "resample_setup",
      "resample_terminal",
  };
  return names[size_t(op)];
}

void MutationConfig::check() const {
  double total = 0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0)
      throw std::invalid_argument("mutation weights must be finite and non-negative");
    total += w;
  }
  if (total <= 0) throw std::invalid_argument("at least one mutation weight must be positive");
  if (generations < 0) throw std::invalid_argument("generations must be non-negative");
  if (updates_per_generation < 1)
    throw std::invalid_argument("updates per generation must be positive");
}

MutationResult mutate(const GameAst& parent, const std::vector<const CellEntry*>& pool,
                      const Pcfg& pcfg, const MutationConfig& config, Rng& rng) {
  GameAst base = parent;
  base.reindex();
  std::discrete_distribution<int> pick(config.weights.begin(), config.weights.end());
  for (int attempt = 0; attempt < 25; ++attempt) {
    auto op = static_cast<MutationOp>(pick(rng));
    std::optional<GameAst> child;
    switch (op) {
      case MutationOp::Regrow: child = op_regrow(base, pcfg, rng); break;
      case MutationOp::Insert: child = op_insert(base, pcfg, rng); break;
      case MutationOp::Delete: child = op_delete(base, rng); break;
      case MutationOp::Crossover: child = op_crossover(base, pool, rng); break;
      case MutationOp::ResampleVariables: child = op_resample_variables(base, pcfg, rng); break;
      case MutationOp::ResampleFirstCondition:
        child = op_resample_condition(base, pcfg, rng, true);
        break;
      case MutationOp::ResampleLastCondition:
        child = op_resample_condition(base, pcfg, rng, false);
        break;
      case MutationOp::ResampleSetup: child = op_resample_setup(base, pcfg, rng); break;
      case MutationOp::ResampleTerminal: child = op_resample_terminal(base, pcfg, rng); break;
    }
    if (!child) continue;
    child->reindex();
    try {
      parse_game(print_game(*child));
    } catch (const std::exception&) {
      continue;
    }
    if (duplicate_pref_bodies(*child)) continue;
    return {std::move(*child), op, false};
  }
  return {std::move(base), MutationOp::Regrow, true};
}

Archive init_archive(const SearchSpace& space, const Pcfg& pcfg, const FitnessModel& model,
                     const ExtractionContext& ctx, int samples, int cap, Rng& rng) {
  space.check();
  struct Candidate {
    GameAst game;
    ArchiveKey key;
    double fitness;
    bool coherentHalf;
  };
  std::vector<Candidate> pool;
  for (int i = 0; i < samples; ++i) {
    GameAst game = pcfg.sample_game(rng, "init" + std::to_string(i));
    int n = int(preference_defs(game).size());
    if (n < space.min_prefs || n > space.max_prefs) continue;
    RawFeatures raw = raw_features(game, ctx);
    ArchiveKey key = behavioral_key(game, space, rng);
    double fitness = model.score(raw);
    bool half = coherent(raw);
    pool.push_back({std::move(game), std::move(key), fitness, half});
  }
  std::stable_sort(pool.begin(), pool.end(),
                   [](const Candidate& a, const Candidate& b) { return a.fitness > b.fitness; });

  Archive archive;
  std::vector<std::set<int>> exemplarValues(space.exemplars.size());
  std::set<int> setupValues, totalValues;
  auto covered = [&] {
    for (const auto& values : exemplarValues)
      for (int v = 0; v <= space.max_prefs; ++v)
        if (!values.count(v)) return false;
    if (setupValues.size() < 2) return false;
    for (int n = space.min_prefs; n <= space.max_prefs; ++n)
      if (!totalValues.count(n)) return false;
    return true;
  };
  for (Candidate& c : pool) {
    if (int(archive.occupied()) >= cap || covered()) break;
    int total = c.key.total_prefs();
    ArchiveKey key = c.key;
    if (!archive.try_insert(c.coherentHalf, key, {std::move(c.game), c.fitness, 0})) continue;
    for (size_t e = 0; e < exemplarValues.size(); ++e) exemplarValues[e].insert(key.counts[e]);
    setupValues.insert(key.setup ? 1 : 0);
    totalValues.insert(total);
  }
  return archive;
}

SearchState init_search(const SearchSpace& space, const MutationConfig& config, const Pcfg& pcfg,
                        const FitnessModel& model, const ExtractionContext& ctx, int samples,
                        int cap) {
  space.check();
  config.check();
  SearchState state;
  state.space = space;
  state.config = config;
  state.rng = make_rng(config.seed, "qd/search");
  state.archive = init_archive(space, pcfg, model, ctx, samples, cap, state.rng);
  state.candidates = uint64_t(samples);
  state.inserts = state.archive.occupied();
  state.stats.push_back(snapshot_stats(state));
  return state;
}

void advance(SearchState& state, const Pcfg& pcfg, const FitnessModel& model,
             const ExtractionContext& ctx, int targetGeneration) {
  state.space.check();
  state.config.check();
  while (state.generation < targetGeneration) {
    int gen = state.generation + 1;
    std::vector<const CellEntry*> pool;
    pool.reserve(state.archive.occupied());
    for (const auto& [key, entry] : state.archive.coherent) pool.push_back(&entry);
    for (const auto& [key, entry] : state.archive.incoherent) pool.push_back(&entry);

    struct Staged {
      bool half;
      ArchiveKey key;
      CellEntry entry;
    };
    std::vector<Staged> staged;
    for (int u = 0; u < state.config.updates_per_generation; ++u) {
      ++state.candidates;
      GameAst candidate;
      std::string name = "g" + std::to_string(gen) + "u" + std::to_string(u);
      if (state.config.pcfg_only) {
        candidate = pcfg.sample_game(state.rng, name);
      } else {
        if (pool.empty()) break;
        const CellEntry& parent = *pool[uniform_below(state.rng, pool.size())];
        MutationResult result = mutate(parent.game, pool, pcfg, state.config, state.rng);
        if (result.noop) continue;
        candidate = std::move(result.game);
        candidate.set_name(name);
      }
      int n = int(preference_defs(candidate).size());
      if (n < state.space.min_prefs || n > state.space.max_prefs) continue;
      RawFeatures raw = raw_features(candidate, ctx);
      double fitness = model.score(raw);
      bool half = coherent(raw);
      ArchiveKey key = behavioral_key(candidate, state.space, state.rng);
      candidate.reindex();
      staged.push_back({half, std::move(key), CellEntry{std::move(candidate), fitness, gen}});
    }
    for (Staged& s : staged)
      if (state.archive.try_insert(s.half, s.key, std::move(s.entry))) ++state.inserts;
    state.generation = gen;
    state.stats.push_back(snapshot_stats(state));
  }
}

SearchState run_map_elites(const SearchSpace& space, const MutationConfig& config,
                           const Pcfg& pcfg, const FitnessModel& model,
                           const ExtractionContext& ctx) {
  SearchState state = init_search(space, config, pcfg, model, ctx);
  advance(state, pcfg, model, ctx, config.generations);
  return state;
}

namespace {

nlohmann::json half_to_json(const std::map<ArchiveKey, CellEntry>& half) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [key, entry] : half) {
    out.push_back({{"counts", key.counts},
                   {"setup", key.setup},
                   {"fitness", entry.fitness},
                   {"generation", entry.generation},
                   {"game", print_game(entry.game)}});
  }
  return out;
}

void half_from_json(const nlohmann::json& in, std::map<ArchiveKey, CellEntry>* half) {
  for (const auto& cell : in) {
    ArchiveKey key;
    key.counts = cell.at("counts").get<std::vector<int>>();
    key.setup = cell.at("setup").get<bool>();
    CellEntry entry;
    entry.game = parse_game(cell.at("game").get<std::string>());
    entry.fitness = cell.at("fitness").get<double>();
    entry.generation = cell.at("generation").get<int>();
    half->emplace(std::move(key), std::move(entry));
  }
}

}  // namespace

void save_checkpoint(std::ostream& out, const SearchState& state) {
  nlohmann::json j;
  j["kind"] = "search-checkpoint";
  j["version"] = 1;
  nlohmann::json exemplars = nlohmann::json::array();
  for (const auto& pref : state.space.exemplars.prefs) {
    std::vector<int> bits(pref.bits.begin(), pref.bits.end());
    exemplars.push_back({{"name", pref.name}, {"bits", bits}});
  }
  j["space"] = {{"exemplars", std::move(exemplars)},
                {"min_prefs", state.space.min_prefs},
                {"max_prefs", state.space.max_prefs}};
  j["config"] = {{"weights", state.config.weights},
                 {"generations", state.config.generations},
                 {"updates_per_generation", state.config.updates_per_generation},
                 {"pcfg_only", state.config.pcfg_only},
                 {"seed", state.config.seed}};
  j["generation"] = state.generation;
  j["candidates"] = state.candidates;
  j["inserts"] = state.inserts;
  std::ostringstream rngState;
  rngState << state.rng;
  j["rng"] = rngState.str();
  j["coherent"] = half_to_json(state.archive.coherent);
  j["incoherent"] = half_to_json(state.archive.incoherent);
  nlohmann::json stats = nlohmann::json::array();
  for (const auto& row : state.stats) {
    stats.push_back({{"generation", row.generation},
                     {"coherent_cells", row.coherent_cells},
                     {"incoherent_cells", row.incoherent_cells},
                     {"candidates", row.candidates},
                     {"inserts", row.inserts},
                     {"fit", {row.fit_min, row.fit_q25, row.fit_q50, row.fit_q75, row.fit_max}}});
  }
  j["stats"] = std::move(stats);
  out << j.dump() << "\n";
}

SearchState load_checkpoint(std::istream& in) {
  nlohmann::json j = nlohmann::json::parse(in);
  if (j.value("kind", "") != "search-checkpoint")
    throw std::invalid_argument("not a search checkpoint file");
  SearchState state;
  const auto& space = j.at("space");
  for (const auto& pref : space.at("exemplars")) {
    ExemplarPref p;
    p.name = pref.at("name").get<std::string>();
    auto bits = pref.at("bits").get<std::vector<int>>();
    if (bits.size() != kBcBits) throw std::invalid_argument("malformed exemplar signature");
    for (size_t i = 0; i < kBcBits; ++i) p.bits[i] = uint8_t(bits[i]);
    state.space.exemplars.prefs.push_back(std::move(p));
  }
  state.space.min_prefs = space.at("min_prefs").get<int>();
  state.space.max_prefs = space.at("max_prefs").get<int>();
  const auto& config = j.at("config");
  auto weights = config.at("weights").get<std::vector<double>>();
  if (weights.size() != kMutationOps) throw std::invalid_argument("malformed operator weights");
  std::copy(weights.begin(), weights.end(), state.config.weights.begin());
  state.config.generations = config.at("generations").get<int>();
  state.config.updates_per_generation = config.at("updates_per_generation").get<int>();
  state.config.pcfg_only = config.at("pcfg_only").get<bool>();
  state.config.seed = config.at("seed").get<uint64_t>();
  state.generation = j.at("generation").get<int>();
  state.candidates = j.at("candidates").get<uint64_t>();
  state.inserts = j.at("inserts").get<uint64_t>();
  std::istringstream rngState(j.at("rng").get<std::string>());
  rngState >> state.rng;
  half_from_json(j.at("coherent"), &state.archive.coherent);
  half_from_json(j.at("incoherent"), &state.archive.incoherent);
  for (const auto& row : j.at("stats")) {
    GenerationStats s;
    s.generation = row.at("generation").get<int>();
    s.coherent_cells = row.at("coherent_cells").get<size_t>();
    s.incoherent_cells = row.at("incoherent_cells").get<size_t>();
    s.candidates = row.at("candidates").get<uint64_t>();
    s.inserts = row.at("inserts").get<uint64_t>();
    const auto& fit = row.at("fit");
    s.fit_min = json_number(fit[0]);
    s.fit_q25 = json_number(fit[1]);
    s.fit_q50 = json_number(fit[2]);
    s.fit_q75 = json_number(fit[3]);
    s.fit_max = json_number(fit[4]);
    state.stats.push_back(s);
  }
  return state;
}

void save_stats_tsv(std::ostream& out, const std::vector<GenerationStats>& stats) {
  out << "generation\tcoherent_cells\tincoherent_cells\tcandidates\tinserts"
         "\tfit_min\tfit_q25\tfit_q50\tfit_q75\tfit_max\n";
  for (const auto& row : stats) {
    out << row.generation << '\t' << row.coherent_cells << '\t' << row.incoherent_cells << '\t'
        << row.candidates << '\t' << row.inserts << '\t' << row.fit_min << '\t' << row.fit_q25
        << '\t' << row.fit_q50 << '\t' << row.fit_q75 << '\t' << row.fit_max << '\n';
  }
}

}  // namespace goalgen
