#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "goalgen/features.hpp"
#include "goalgen/fitness.hpp"
#include "goalgen/parser.hpp"
#include "goalgen/pcfg.hpp"
#include "goalgen/printer.hpp"
#include "goalgen/qd.hpp"

using namespace goalgen;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

GameAst fixture(const std::string& sub, const std::string& name) {
  return parse_game(read_file(fs::path(GOALGEN_DATA_DIR) / sub / name));
}

std::vector<GameAst> fixture_corpus() {
  std::vector<fs::path> files;
  for (const char* sub : {"exemplars", "samples"})
    for (const auto& entry : fs::directory_iterator(fs::path(GOALGEN_DATA_DIR) / sub))
      if (entry.path().extension() == ".game") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<GameAst> corpus;
  for (const auto& f : files) corpus.push_back(parse_game(read_file(f)));
  return corpus;
}

const Pcfg& corpus_pcfg() {
  static Pcfg pcfg = Pcfg::fit(fixture_corpus());
  return pcfg;
}

// Scoring model with a fixed pseudo-random weight per vector entry, so
// distinct games usually get distinct finite scores.
const FitnessModel& spread_model() {
  static FitnessModel model = [] {
    std::vector<RawFeatures> rows;
    for (const auto& g : fixture_corpus()) rows.push_back(raw_features(g, {}));
    FitnessModel m;
    m.normalizer = FeatureNormalizer::fit(FeatureRegistry::full(), rows);
    Rng rng(314159);
    std::uniform_real_distribution<double> weight(-1.0, 1.0);
    m.theta.resize(m.normalizer.registry().vector_size());
    for (double& w : m.theta) w = weight(rng);
    return m;
  }();
  return model;
}

size_t exemplar_index(const std::string& name) {
  const auto& prefs = ExemplarSet::full().prefs;
  for (size_t i = 0; i < prefs.size(); ++i)
    if (prefs[i].name == name) return i;
  REQUIRE(false);
  return size_t(-1);
}

std::map<ArchiveKey, double> fitness_snapshot(const std::map<ArchiveKey, CellEntry>& half) {
  std::map<ArchiveKey, double> out;
  for (const auto& [key, entry] : half) out[key] = entry.fitness;
  return out;
}

std::map<ArchiveKey, std::string> print_snapshot(const std::map<ArchiveKey, CellEntry>& half) {
  std::map<ArchiveKey, std::string> out;
  for (const auto& [key, entry] : half) out[key] = print_game(entry.game);
  return out;
}

bool stats_equal(const GenerationStats& a, const GenerationStats& b) {
  auto same = [](double x, double y) {
    return (std::isnan(x) && std::isnan(y)) || x == y;
  };
  return a.generation == b.generation && a.coherent_cells == b.coherent_cells &&
         a.incoherent_cells == b.incoherent_cells && a.candidates == b.candidates &&
         a.inserts == b.inserts && same(a.fit_min, b.fit_min) && same(a.fit_q25, b.fit_q25) &&
         same(a.fit_q50, b.fit_q50) && same(a.fit_q75, b.fit_q75) && same(a.fit_max, b.fit_max);
}

const char* kTwoPrefGame = R"GAME((define (game keyed) (:domain room-v1)
(:setup (exists (?h - hexagonal_bin) (game-conserved (adjacent ?h desk))))
(:constraints (and
  (preference freshThrow
    (exists (?b - dodgeball)
      (then
        (once (agent_holds ?b))
        (hold (in_motion ?b))
        (once (not (in_motion ?b))))))
  (preference rampPainted
    (exists (?r - curved_wooden_ramp) (at-end (same_color ?r pink))))
))
(:scoring (+ (count freshThrow) (count rampPainted)))))GAME";

const char* kAmbiguousGame = R"GAME((define (game twoway) (:domain room-v1)
(:constraints
  (preference blockInBuilding
    (exists (?l - block ?b - building) (at-end (in ?b ?l)))))
(:scoring (count blockInBuilding))))GAME";

}  // namespace

TEST_CASE("archetype signatures and the distance between them") {
  const auto& full = ExemplarSet::full();
  REQUIRE(full.size() == 9);

  const std::vector<std::pair<std::string, BcVector>> expected = {
      {"throwAttempt", {1, 0, 0, 0, 1, 0, 0, 0, 0}},
      {"throwInBin", {1, 1, 1, 0, 1, 1, 0, 1, 0}},
      {"ballThrownToBed", {1, 0, 1, 1, 1, 0, 0, 1, 0}},
      {"itemInClosedDrawerAtEnd", {0, 1, 0, 0, 0, 1, 0, 0, 1}},
      {"watchOnShelf", {0, 0, 1, 0, 0, 0, 0, 1, 1}},
      {"gameBlockFound", {1, 1, 0, 0, 0, 0, 1, 0, 0}},
      {"matchingBuildingBuilt", {0, 1, 1, 0, 0, 0, 1, 0, 0}},
      {"ballDroppedInBin", {1, 1, 0, 1, 1, 1, 0, 0, 0}},
      {"pillowMovedToRoomCenter", {1, 0, 0, 1, 0, 0, 0, 1, 1}}};
  for (size_t i = 0; i < expected.size(); ++i) {
    CHECK(full.prefs[i].name == expected[i].first);
    CHECK(full.prefs[i].bits == expected[i].second);
  }

  // No two archetypes sit within the one-bit matching radius of each other.
  for (size_t i = 0; i < full.size(); ++i)
    for (size_t j = i + 1; j < full.size(); ++j)
      CHECK(bc_l1(full.prefs[i].bits, full.prefs[j].bits) >= 2);

  const auto& desk = ExemplarSet::desk();
  REQUIRE(desk.size() == 3);
  CHECK(desk.prefs[0].name == "throwAttempt");
  CHECK(desk.prefs[1].name == "throwInBin");
  CHECK(desk.prefs[2].name == "itemInClosedDrawerAtEnd");
  for (const auto& p : desk.prefs)
    CHECK(p.bits == expected[exemplar_index(p.name)].second);

  CHECK(bc_l1({1, 0, 0, 0, 1, 0, 0, 0, 0}, {1, 0, 0, 0, 1, 0, 0, 0, 0}) == 0);
  CHECK(bc_l1({1, 1, 1, 1, 1, 1, 1, 1, 1}, {0, 0, 0, 0, 0, 0, 0, 0, 0}) == 9);
  CHECK(bc_l1(full.prefs[0].bits, full.prefs[1].bits) ==
        bc_l1(full.prefs[1].bits, full.prefs[0].bits));
}

TEST_CASE("preference signatures read predicates and object categories") {
  // Ungrouped predicate, ramp and color: nothing lights up.
  NodePtr zero = parse_preference(
      "(preference rampPainted (exists (?r - curved_wooden_ramp) (at-end (same_color ?r pink))))");
  CHECK(pref_bc_vector(*zero) == BcVector{0, 0, 0, 0, 0, 0, 0, 0, 0});

  // Subtypes inherit their category: a specific dodgeball is still a ball.
  NodePtr red = parse_preference(
      "(preference redThrow (exists (?b - dodgeball_red) (then (once (agent_holds ?b)) (hold "
      "(in_motion ?b)) (once (not (in_motion ?b))))))");
  CHECK(pref_bc_vector(*red) == BcVector{1, 0, 0, 0, 1, 0, 0, 0, 0});

  // Direct object names count the same as variable types.
  NodePtr named = parse_preference(
      "(preference deskTouch (exists (?g - game_object) (at-end (touch desk ?g))))");
  CHECK(pref_bc_vector(*named) == BcVector{0, 0, 0, 1, 0, 0, 0, 1, 1});

  GameAst pillow = fixture("exemplars", "pillow-moved-to-room-center.game");
  CHECK(pref_bc_vector(*preference_defs(pillow)[0]) == BcVector{1, 0, 0, 1, 0, 0, 0, 1, 1});
}

TEST_CASE("behavioral keys count matched archetypes per preference") {
  SearchSpace space = SearchSpace::full();
  Rng rng = make_rng(3, "test/keys");

  GameAst game = parse_game(kTwoPrefGame);
  ArchiveKey key = behavioral_key(game, space, rng);
  REQUIRE(key.counts.size() == 10);
  CHECK(key.counts[exemplar_index("throwAttempt")] == 1);
  CHECK(key.counts.back() == 1);  // the ramp preference matches nothing
  CHECK(key.total_prefs() == 2);
  CHECK(key.setup);
  int sum = 0;
  for (int c : key.counts) sum += c;
  CHECK(sum == 2);

  GameAst plain = fixture("exemplars", "watch-on-shelf.game");
  ArchiveKey plainKey = behavioral_key(plain, space, rng);
  CHECK_FALSE(plainKey.setup);
  CHECK(plainKey.total_prefs() == 1);
  CHECK(plainKey.counts[exemplar_index("watchOnShelf")] == 1);

  // Preference counts outside the axis range are not representable.
  SearchSpace desk = SearchSpace::desk();
  GameAst wide = fixture("samples", "throw-to-bin-setup.game");
  CHECK(behavioral_key(wide, desk, rng).total_prefs() == 2);
  SearchSpace narrow = desk;
  narrow.max_prefs = 1;
  CHECK_THROWS_AS(behavioral_key(wide, narrow, rng), std::out_of_range);
}

TEST_CASE("two-way matches are settled by the seeded draw") {
  SearchSpace space = SearchSpace::full();
  GameAst game = parse_game(kAmbiguousGame);
  const size_t a = exemplar_index("gameBlockFound");
  const size_t b = exemplar_index("matchingBuildingBuilt");

  int hitsA = 0, hitsB = 0;
  for (int trial = 0; trial < 400; ++trial) {
    Rng rng = make_rng(trial, "test/twoway");
    ArchiveKey key = behavioral_key(game, space, rng);
    CHECK(key.total_prefs() == 1);
    CHECK(key.counts[a] + key.counts[b] == 1);
    CHECK(key.counts.back() == 0);
    hitsA += key.counts[a];
    hitsB += key.counts[b];
  }
  CHECK(hitsA > 150);
  CHECK(hitsB > 150);

  Rng first = make_rng(77, "test/twoway");
  Rng second = make_rng(77, "test/twoway");
  CHECK(behavioral_key(game, space, first) == behavioral_key(game, space, second));
}

TEST_CASE("the nine archetype games identify themselves") {
  SearchSpace space = SearchSpace::full();
  for (const auto& entry : fs::directory_iterator(fs::path(GOALGEN_DATA_DIR) / "exemplars")) {
    if (entry.path().extension() != ".game") continue;
    GameAst game = parse_game(read_file(entry.path()));
    auto prefs = preference_defs(game);
    REQUIRE(prefs.size() == 1);
    size_t self = exemplar_index(std::string(preference_name(*prefs[0])));

    Rng rng = make_rng(1, "test/self");
    ArchiveKey key = behavioral_key(game, space, rng);
    CHECK(key.total_prefs() == 1);
    CHECK(key.counts[self] == 1);
    CHECK_FALSE(key.setup);

    CHECK(coherent(raw_features(game, {})));
  }
}

TEST_CASE("the axis grid is enumerated exactly once per cell") {
  SearchSpace full = SearchSpace::full();
  std::vector<ArchiveKey> keys = enumerate_keys(full);
  CHECK(keys.size() == 2000);
  CHECK(full.cell_count() == 2000);

  std::set<ArchiveKey> unique(keys.begin(), keys.end());
  CHECK(unique.size() == keys.size());

  std::map<int, int> byTotal;
  int withSetup = 0;
  for (const ArchiveKey& key : keys) {
    REQUIRE(key.counts.size() == full.exemplars.size() + 1);
    int sum = 0;
    for (int c : key.counts) {
      CHECK(c >= 0);
      sum += c;
    }
    CHECK(sum == key.total_prefs());
    CHECK(sum >= full.min_prefs);
    CHECK(sum <= full.max_prefs);
    ++byTotal[key.total_prefs()];
    withSetup += key.setup ? 1 : 0;
  }
  CHECK(byTotal[1] == 20);
  CHECK(byTotal[2] == 110);
  CHECK(byTotal[3] == 440);
  CHECK(byTotal[4] == 1430);
  CHECK(withSetup == 1000);

  SearchSpace desk = SearchSpace::desk();
  CHECK(desk.cell_count() == 28);
  CHECK(enumerate_keys(desk).size() == 28);

  SearchSpace bad = desk;
  bad.min_prefs = 3;
  bad.max_prefs = 2;
  CHECK_THROWS_AS(bad.check(), std::invalid_argument);
  bad = desk;
  bad.min_prefs = 0;
  CHECK_THROWS_AS(bad.check(), std::invalid_argument);
  bad = desk;
  bad.exemplars.prefs.clear();
  CHECK_THROWS_AS(bad.check(), std::invalid_argument);
  bad = desk;
  bad.exemplars.prefs[1].name = bad.exemplars.prefs[0].name;
  CHECK_THROWS_AS(bad.check(), std::invalid_argument);
}

TEST_CASE("cells accept only strictly better residents") {
  Archive archive;
  ArchiveKey key{{1, 0, 0, 0}, false};
  GameAst game = fixture("exemplars", "throw-attempt.game");

  CHECK(archive.try_insert(true, key, {game, 0.5, 0}));
  CHECK(archive.coherent.size() == 1);
  CHECK_FALSE(archive.try_insert(true, key, {game, 0.5, 1}));  // ties keep the resident
  CHECK_FALSE(archive.try_insert(true, key, {game, 0.2, 1}));
  CHECK(archive.coherent.at(key).generation == 0);
  CHECK(archive.try_insert(true, key, {game, 0.9, 2}));
  CHECK(archive.coherent.at(key).fitness == 0.9);
  CHECK(archive.coherent.at(key).generation == 2);

  // The two halves keep separate residents for the same key.
  CHECK(archive.try_insert(false, key, {game, 0.1, 0}));
  CHECK(archive.coherent.at(key).fitness == 0.9);
  CHECK(archive.incoherent.at(key).fitness == 0.1);
  CHECK(archive.occupied() == 2);
}

TEST_CASE("every mutation operator reshapes the tree usably") {
  const Pcfg& pcfg = corpus_pcfg();
  GameAst parent = fixture("samples", "throw-to-bin-setup.game");
  GameAst plain = fixture("exemplars", "watch-on-shelf.game");
  GameAst block = fixture("samples", "block-stacking.game");
  std::vector<CellEntry> cells;
  cells.push_back({plain, 0.0, 0});
  cells.push_back({block, 0.0, 0});
  std::vector<const CellEntry*> pool = {&cells[0], &cells[1]};

  auto only = [](MutationOp op) {
    MutationConfig c;
    c.weights.fill(0.0);
    c.weights[size_t(op)] = 1.0;
    return c;
  };
  auto roundtrips = [](const GameAst& g) { return print_game(parse_game(print_game(g))) == print_game(g); };

  SUBCASE("regrow") {
    Rng rng = make_rng(1, "test/mut");
    MutationResult r = mutate(parent, pool, pcfg, only(MutationOp::Regrow), rng);
    CHECK(r.op == MutationOp::Regrow);
    CHECK_FALSE(r.noop);
    CHECK(roundtrips(r.game));
  }
  SUBCASE("insert grows the node count") {
    Rng rng = make_rng(2, "test/mut");
    MutationResult r = mutate(parent, pool, pcfg, only(MutationOp::Insert), rng);
    CHECK(r.op == MutationOp::Insert);
    CHECK_FALSE(r.noop);
    CHECK(r.game.node_count() > parent.node_count());
    CHECK(roundtrips(r.game));
  }
  SUBCASE("delete shrinks the node count") {
    Rng rng = make_rng(3, "test/mut");
    MutationResult r = mutate(parent, pool, pcfg, only(MutationOp::Delete), rng);
    CHECK(r.op == MutationOp::Delete);
    CHECK_FALSE(r.noop);
    CHECK(r.game.node_count() < parent.node_count());
    CHECK(roundtrips(r.game));
  }
  SUBCASE("crossover splices a partner subtree") {
    Rng rng = make_rng(4, "test/mut");
    MutationResult r = mutate(parent, pool, pcfg, only(MutationOp::Crossover), rng);
    CHECK(r.op == MutationOp::Crossover);
    CHECK_FALSE(r.noop);
    CHECK(roundtrips(r.game));
    auto prefs = preference_defs(r.game);
    std::set<std::string> names;
    for (const Node* p : prefs) names.insert(std::string(preference_name(*p)));
    CHECK(names.size() == prefs.size());
  }
  SUBCASE("variable resampling keeps the game parseable") {
    Rng rng = make_rng(5, "test/mut");
    MutationResult r = mutate(parent, pool, pcfg, only(MutationOp::ResampleVariables), rng);
    CHECK(r.op == MutationOp::ResampleVariables);
    CHECK_FALSE(r.noop);
    CHECK(roundtrips(r.game));
  }
  SUBCASE("condition resampling needs a sequence to work on") {
    Rng rng = make_rng(6, "test/mut");
    MutationResult r = mutate(parent, pool, pcfg, only(MutationOp::ResampleFirstCondition), rng);
    CHECK(r.op == MutationOp::ResampleFirstCondition);
    CHECK_FALSE(r.noop);
    CHECK(roundtrips(r.game));

    // An at-end-only game has no sequence, so the operator gives up.
    MutationResult stuck = mutate(plain, pool, pcfg, only(MutationOp::ResampleLastCondition), rng);
    CHECK(stuck.noop);
    CHECK(print_game(stuck.game) == print_game(plain));
  }
  SUBCASE("section resampling can add a missing section") {
    Rng rng = make_rng(7, "test/mut");
    REQUIRE_FALSE(plain.has_setup());
    MutationResult r = mutate(plain, pool, pcfg, only(MutationOp::ResampleSetup), rng);
    CHECK(r.op == MutationOp::ResampleSetup);
    CHECK_FALSE(r.noop);
    CHECK(r.game.has_setup());
    CHECK(roundtrips(r.game));

    REQUIRE_FALSE(plain.has_terminal());
    MutationResult t = mutate(plain, pool, pcfg, only(MutationOp::ResampleTerminal), rng);
    CHECK(t.game.has_terminal());
    CHECK(roundtrips(t.game));

    REQUIRE(parent.has_setup());
    MutationResult kept = mutate(parent, pool, pcfg, only(MutationOp::ResampleSetup), rng);
    CHECK(kept.game.has_setup());
  }
  SUBCASE("mixed mutation is deterministic and always yields valid games") {
    MutationConfig mixed;
    Rng rngA = make_rng(8, "test/mut");
    Rng rngB = make_rng(8, "test/mut");
    GameAst current = parent;
    for (int i = 0; i < 60; ++i) {
      MutationResult a = mutate(current, pool, pcfg, mixed, rngA);
      MutationResult b = mutate(current, pool, pcfg, mixed, rngB);
      CHECK(print_game(a.game) == print_game(b.game));
      CHECK(a.op == b.op);
      CHECK(roundtrips(a.game));
      auto prefs = preference_defs(a.game);
      std::set<std::string> bodies;
      for (const Node* p : prefs) {
        NodePtr copy = p->clone();
        copy->children[0]->token.clear();
        bodies.insert(print_node(*copy));
      }
      CHECK(bodies.size() == prefs.size());
      if (!a.noop) current = std::move(a.game);
    }
  }
  SUBCASE("impossible weights are rejected up front") {
    MutationConfig bad;
    bad.weights.fill(0.0);
    CHECK_THROWS_AS(bad.check(), std::invalid_argument);
    bad = MutationConfig{};
    bad.weights[0] = -1.0;
    CHECK_THROWS_AS(bad.check(), std::invalid_argument);
    bad = MutationConfig{};
    bad.updates_per_generation = 0;
    CHECK_THROWS_AS(bad.check(), std::invalid_argument);
  }
}

TEST_CASE("archive seeding is bounded, scored and reproducible") {
  SearchSpace space = SearchSpace::desk();
  const Pcfg& pcfg = corpus_pcfg();
  const FitnessModel& model = spread_model();

  Rng rng = make_rng(40, "test/init");
  Archive archive = init_archive(space, pcfg, model, {}, 200, 10, rng);
  CHECK(archive.occupied() >= 1);
  CHECK(archive.occupied() <= 10);

  for (const auto* half : {&archive.coherent, &archive.incoherent}) {
    for (const auto& [key, entry] : *half) {
      CHECK(entry.generation == 0);
      CHECK(entry.fitness == model.score(entry.game, {}));
      int sum = 0;
      for (int c : key.counts) sum += c;
      CHECK(sum == key.total_prefs());
      CHECK(sum >= space.min_prefs);
      CHECK(sum <= space.max_prefs);
    }
  }
  for (const auto& [key, entry] : archive.coherent)
    CHECK(coherent(raw_features(entry.game, {})));
  for (const auto& [key, entry] : archive.incoherent)
    CHECK_FALSE(coherent(raw_features(entry.game, {})));

  Rng again = make_rng(40, "test/init");
  Archive repeat = init_archive(space, pcfg, model, {}, 200, 10, again);
  CHECK(print_snapshot(repeat.coherent) == print_snapshot(archive.coherent));
  CHECK(print_snapshot(repeat.incoherent) == print_snapshot(archive.incoherent));
}

TEST_CASE("generations advance deterministically and cells never regress") {
  SearchSpace space = SearchSpace::desk();
  const Pcfg& pcfg = corpus_pcfg();
  const FitnessModel& model = spread_model();
  MutationConfig config;
  config.generations = 4;
  config.updates_per_generation = 30;
  config.seed = 21;

  SearchState state = init_search(space, config, pcfg, model, {}, 80, 12);
  REQUIRE(state.generation == 0);
  CHECK(state.candidates == 80);
  CHECK(state.inserts == state.archive.occupied());
  REQUIRE(state.stats.size() == 1);
  CHECK(state.stats[0].generation == 0);

  for (int gen = 1; gen <= config.generations; ++gen) {
    auto beforeCoherent = fitness_snapshot(state.archive.coherent);
    auto beforeIncoherent = fitness_snapshot(state.archive.incoherent);
    advance(state, pcfg, model, {}, gen);
    CHECK(state.generation == gen);
    for (const auto& [key, fit] : beforeCoherent) {
      REQUIRE(state.archive.coherent.count(key) == 1);
      CHECK(state.archive.coherent.at(key).fitness >= fit);
    }
    for (const auto& [key, fit] : beforeIncoherent) {
      REQUIRE(state.archive.incoherent.count(key) == 1);
      CHECK(state.archive.incoherent.at(key).fitness >= fit);
    }
  }
  CHECK(state.candidates == 80 + uint64_t(config.generations) * 30);
  REQUIRE(state.stats.size() == size_t(config.generations) + 1);
  CHECK(state.stats.back().generation == config.generations);
  CHECK(state.stats.back().candidates == state.candidates);
  CHECK(state.stats.back().inserts == state.inserts);
  CHECK(state.stats.back().coherent_cells == state.archive.coherent.size());

  // Advancing to a generation already reached changes nothing.
  advance(state, pcfg, model, {}, 2);
  CHECK(state.generation == 4);
  CHECK(state.stats.size() == 5);

  // A fresh run over the same budget retraces the same path, and a longer
  // one starts with the identical prefix.
  SearchState fresh = init_search(space, config, pcfg, model, {}, 80, 12);
  advance(fresh, pcfg, model, {}, config.generations);
  REQUIRE(fresh.stats.size() == state.stats.size());
  for (size_t i = 0; i < state.stats.size(); ++i)
    CHECK(stats_equal(fresh.stats[i], state.stats[i]));
  CHECK(print_snapshot(fresh.archive.coherent) == print_snapshot(state.archive.coherent));
  CHECK(print_snapshot(fresh.archive.incoherent) == print_snapshot(state.archive.incoherent));

  MutationConfig longer = config;
  longer.generations = 6;
  SearchState extended = init_search(space, longer, pcfg, model, {}, 80, 12);
  advance(extended, pcfg, model, {}, longer.generations);
  REQUIRE(extended.stats.size() == 7);
  for (size_t i = 0; i < state.stats.size(); ++i)
    CHECK(stats_equal(extended.stats[i], state.stats[i]));
}

TEST_CASE("checkpoints restore a run mid-flight") {
  SearchSpace space = SearchSpace::desk();
  const Pcfg& pcfg = corpus_pcfg();
  const FitnessModel& model = spread_model();
  MutationConfig config;
  config.generations = 5;
  config.updates_per_generation = 25;
  config.seed = 33;

  SearchState state = init_search(space, config, pcfg, model, {}, 60, 10);
  advance(state, pcfg, model, {}, 2);

  std::stringstream buffer;
  save_checkpoint(buffer, state);
  SearchState loaded = load_checkpoint(buffer);

  CHECK(loaded.generation == state.generation);
  CHECK(loaded.candidates == state.candidates);
  CHECK(loaded.inserts == state.inserts);
  CHECK(loaded.config.seed == config.seed);
  CHECK(loaded.config.generations == config.generations);
  CHECK(loaded.space.exemplars.size() == space.exemplars.size());
  CHECK(loaded.space.min_prefs == space.min_prefs);
  CHECK(loaded.space.max_prefs == space.max_prefs);
  for (size_t i = 0; i < space.exemplars.size(); ++i) {
    CHECK(loaded.space.exemplars.prefs[i].name == space.exemplars.prefs[i].name);
    CHECK(loaded.space.exemplars.prefs[i].bits == space.exemplars.prefs[i].bits);
  }
  REQUIRE(loaded.stats.size() == state.stats.size());
  for (size_t i = 0; i < state.stats.size(); ++i)
    CHECK(stats_equal(loaded.stats[i], state.stats[i]));
  CHECK(print_snapshot(loaded.archive.coherent) == print_snapshot(state.archive.coherent));
  CHECK(print_snapshot(loaded.archive.incoherent) == print_snapshot(state.archive.incoherent));
  CHECK(fitness_snapshot(loaded.archive.coherent) == fitness_snapshot(state.archive.coherent));

  // The restored generator continues exactly where the original left off.
  advance(state, pcfg, model, {}, 5);
  advance(loaded, pcfg, model, {}, 5);
  REQUIRE(loaded.stats.size() == state.stats.size());
  for (size_t i = 0; i < state.stats.size(); ++i)
    CHECK(stats_equal(loaded.stats[i], state.stats[i]));
  CHECK(print_snapshot(loaded.archive.coherent) == print_snapshot(state.archive.coherent));
  CHECK(print_snapshot(loaded.archive.incoherent) == print_snapshot(state.archive.incoherent));

  std::stringstream junk("{\"kind\":\"fitness-model\"}");
  CHECK_THROWS_AS(load_checkpoint(junk), std::invalid_argument);
}

TEST_CASE("the grammar-only baseline fills cells without mutating") {
  SearchSpace space = SearchSpace::desk();
  const Pcfg& pcfg = corpus_pcfg();
  const FitnessModel& model = spread_model();
  MutationConfig config;
  config.generations = 2;
  config.updates_per_generation = 50;
  config.pcfg_only = true;
  config.seed = 9;

  SearchState state = init_search(space, config, pcfg, model, {}, 60, 10);
  advance(state, pcfg, model, {}, config.generations);
  CHECK(state.candidates == 60 + 2 * 50);
  CHECK(state.archive.occupied() >= 1);

  SearchState repeat = init_search(space, config, pcfg, model, {}, 60, 10);
  advance(repeat, pcfg, model, {}, config.generations);
  CHECK(print_snapshot(repeat.archive.coherent) == print_snapshot(state.archive.coherent));
  CHECK(print_snapshot(repeat.archive.incoherent) == print_snapshot(state.archive.incoherent));
}

TEST_CASE("one-call searches match a manual init plus advance") {
  SearchSpace space = SearchSpace::desk();
  const Pcfg& pcfg = corpus_pcfg();
  const FitnessModel& model = spread_model();
  MutationConfig config;
  config.generations = 1;
  config.updates_per_generation = 20;
  config.seed = 57;

  SearchState oneCall = run_map_elites(space, config, pcfg, model, {});
  SearchState manual = init_search(space, config, pcfg, model, {});
  advance(manual, pcfg, model, {}, config.generations);

  CHECK(oneCall.generation == config.generations);
  REQUIRE(oneCall.stats.size() == manual.stats.size());
  for (size_t i = 0; i < manual.stats.size(); ++i)
    CHECK(stats_equal(oneCall.stats[i], manual.stats[i]));
  CHECK(print_snapshot(oneCall.archive.coherent) == print_snapshot(manual.archive.coherent));
}

TEST_CASE("the stats table round-trips through its tsv form") {
  std::vector<GenerationStats> stats(3);
  for (int i = 0; i < 3; ++i) {
    stats[i].generation = i;
    stats[i].coherent_cells = size_t(i * 2);
    stats[i].incoherent_cells = size_t(i);
    stats[i].candidates = uint64_t(100 * i);
    stats[i].inserts = uint64_t(10 * i);
    stats[i].fit_min = i + 0.125;
    stats[i].fit_q25 = i + 0.25;
    stats[i].fit_q50 = i + 0.5;
    stats[i].fit_q75 = i + 0.75;
    stats[i].fit_max = i + 1.0;
  }
  stats[0].fit_min = std::nan("");

  std::ostringstream out;
  save_stats_tsv(out, stats);
  std::istringstream in(out.str());
  std::string header;
  REQUIRE(std::getline(in, header));
  CHECK(header.find("generation\t") == 0);
  CHECK(header.find("coherent_cells") != std::string::npos);
  int rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    REQUIRE_FALSE(line.empty());
    std::istringstream cells(line);
    int generation = -1;
    cells >> generation;
    CHECK(generation == rows);
    ++rows;
  }
  CHECK(rows == 3);
}
