#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "goalgen/features.hpp"
#include "goalgen/ngram.hpp"
#include "goalgen/parser.hpp"
#include "goalgen/printer.hpp"
#include "goalgen/trace.hpp"
#include "support.hpp"

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

GameAst fixture(const std::string& sub, const std::string& name) {
  return parse_game(read_file(fs::path(GOALGEN_DATA_DIR) / sub / name));
}

// A one-preference game whose then-body and scoring are supplied by the test.
std::string throw_game(const std::string& vars, const std::string& thenBody,
                       const std::string& scoring = "(count throwAttempt)") {
  return "(define (game feat-case) (:domain room-v1)\n(:constraints\n"
         "  (preference throwAttempt (exists (" +
         vars + ") (then " + thenBody + "))))\n(:scoring " + scoring + "))";
}

RawFeatures raw_of(const std::string& text, const ExtractionContext& ctx = {}) {
  return raw_features(parse_game(text), ctx);
}

double value(const RawFeatures& r, const std::string& name) {
  auto it = r.find(name);
  REQUIRE(it != r.end());
  return it->second;
}

}  // namespace

TEST_CASE("registry lists every feature in a fixed order") {
  const FeatureRegistry& reg = FeatureRegistry::full();
  CHECK(reg.defs().size() == 56);
  CHECK(reg.vector_size() == 88);

  const auto& names = reg.vector_names();
  CHECK(names.front() == "ast_ngram_full_n_5_score");
  CHECK(names.back() == "pref_forall_pref_forall_correct_types_incorrect");
  for (const char* expanded : {"node_count_setup_0", "node_count_setup_4", "max_depth_scoring_0",
                               "max_depth_scoring_4", "node_count_constraints_2"})
    CHECK(std::count(names.begin(), names.end(), expanded) == 1);
  CHECK(std::count(names.begin(), names.end(), "node_count_setup") == 0);

  int binary = 0, proportion = 0, discretized = 0, floats = 0;
  for (const auto& def : reg.defs()) {
    switch (def.kind) {
      case FeatureKind::Binary: ++binary; break;
      case FeatureKind::Proportion: ++proportion; break;
      case FeatureKind::Discretized: ++discretized; break;
      case FeatureKind::Float: ++floats; break;
    }
  }
  CHECK(binary == 35);
  CHECK(proportion == 8);
  CHECK(discretized == 8);
  CHECK(floats == 5);

  // every raw feature the extractor emits is a registered name and vice versa
  RawFeatures raw = raw_features(fixture("exemplars", "throw-attempt.game"), {});
  CHECK(raw.size() == reg.defs().size());
  for (const auto& def : reg.defs()) CHECK(raw.count(def.name) == 1);
}

TEST_CASE("unused definitions are detected") {
  RawFeatures unusedVar = raw_of(throw_game("?b - dodgeball ?q - cube_block",
                                            "(once (agent_holds ?b))"
                                            "(hold (and (not (agent_holds ?b)) (in_motion ?b)))"
                                            "(once (not (in_motion ?b)))"));
  CHECK(value(unusedVar, "variables_used_all") == 0.0);
  CHECK(value(unusedVar, "variables_used_prop") == doctest::Approx(0.5));
  CHECK(value(unusedVar, "preferences_used_all") == 1.0);

  RawFeatures clean = raw_features(fixture("exemplars", "throw-attempt.game"), {});
  CHECK(value(clean, "variables_used_all") == 1.0);
  CHECK(value(clean, "variables_used_prop") == 1.0);
  CHECK(value(clean, "preferences_used_all") == 1.0);
  CHECK(value(clean, "preferences_used_prop") == 1.0);
  CHECK(value(clean, "section_doesnt_exist_setup") == 1.0);
  CHECK(value(clean, "section_doesnt_exist_terminal") == 1.0);

  // second preference never counted by terminal or scoring
  RawFeatures unusedPref = raw_of(
      "(define (game feat-case) (:domain room-v1)\n(:constraints (and\n"
      "  (preference throwAttempt (exists (?b - dodgeball) (then"
      " (once (agent_holds ?b)) (hold (in_motion ?b)) (once (not (in_motion ?b))))))\n"
      "  (preference ballOnBed (exists (?b - ball) (at-end (on bed ?b))))))\n"
      "(:scoring (count throwAttempt)))");
  CHECK(value(unusedPref, "preferences_used_all") == 0.0);
  CHECK(value(unusedPref, "preferences_used_prop") == doctest::Approx(0.5));
  CHECK(value(unusedPref, "scoring_preferences_used_identically") == 0.0);

  RawFeatures withSetup = raw_features(fixture("samples", "throw-to-bin-setup.game"), {});
  CHECK(value(withSetup, "section_doesnt_exist_setup") == 0.0);
  CHECK(value(withSetup, "section_doesnt_exist_terminal") == 0.0);
  CHECK(value(withSetup, "setup_quantified_objects_used") == 1.0);
  CHECK(value(withSetup, "any_setup_objects_used") == 1.0);

  // setup about a pillow, preferences about a dodgeball
  RawFeatures strandedSetup = raw_of(
      "(define (game feat-case) (:domain room-v1)\n"
      "(:setup (exists (?p - pillow) (game-conserved (on bed ?p))))\n"
      "(:constraints (preference throwAttempt (exists (?b - dodgeball) (then"
      " (once (agent_holds ?b)) (hold (in_motion ?b)) (once (not (in_motion ?b)))))))\n"
      "(:scoring (count throwAttempt)))");
  CHECK(value(strandedSetup, "setup_quantified_objects_used") == 0.0);
  CHECK(value(strandedSetup, "any_setup_objects_used") == 0.0);
  // no setup section: nothing quantified there, vacuously all used
  CHECK(value(clean, "setup_quantified_objects_used") == 1.0);
  CHECK(value(clean, "any_setup_objects_used") == 0.0);
}

TEST_CASE("sequence modal misuse flags") {
  RawFeatures adjacentOnce = raw_of(throw_game(
      "?b - dodgeball", "(once (agent_holds ?b)) (once (in_motion ?b))"));
  CHECK(value(adjacentOnce, "adjacent_once_found") == 1.0);
  CHECK(value(adjacentOnce, "adjacent_same_modal_found") == 1.0);
  CHECK(value(adjacentOnce, "pref_without_hold_found") == 1.0);
  CHECK(value(adjacentOnce, "once_in_middle_of_pref_found") == 0.0);

  RawFeatures onceMiddle = raw_of(throw_game(
      "?b - dodgeball",
      "(hold (agent_holds ?b)) (once (in_motion ?b)) (hold (touch floor ?b))"));
  CHECK(value(onceMiddle, "once_in_middle_of_pref_found") == 1.0);
  CHECK(value(onceMiddle, "adjacent_once_found") == 0.0);
  CHECK(value(onceMiddle, "adjacent_same_modal_found") == 0.0);
  CHECK(value(onceMiddle, "pref_without_hold_found") == 0.0);
  CHECK(value(onceMiddle, "identical_consecutive_seq_func_predicates_found") == 0.0);

  RawFeatures sameBody = raw_of(throw_game(
      "?b - dodgeball", "(once (agent_holds ?b)) (hold (agent_holds ?b))"));
  CHECK(value(sameBody, "identical_consecutive_seq_func_predicates_found") == 1.0);
  CHECK(value(sameBody, "adjacent_same_modal_found") == 0.0);

  RawFeatures clean = raw_features(fixture("exemplars", "throw-attempt.game"), {});
  for (const char* flag :
       {"adjacent_once_found", "adjacent_same_modal_found", "once_in_middle_of_pref_found",
        "pref_without_hold_found", "identical_consecutive_seq_func_predicates_found"})
    CHECK_MESSAGE(value(clean, flag) == 0.0, flag);
}

TEST_CASE("expression misuse flags") {
  RawFeatures ungrounded = raw_of(
      "(define (game feat-case) (:domain room-v1)\n(:constraints\n"
      "  (preference watchOnShelf (exists (?w - watch ?s - shelf)"
      " (at-end (and (on ?s ?w) (on bed floor))))))\n"
      "(:scoring (count watchOnShelf)))");
  CHECK(value(ungrounded, "predicate_without_variables_or_agent") == 1.0);

  // zero-argument predicates and agent references do not count as ungrounded
  RawFeatures grounded = raw_of(throw_game(
      "?b - dodgeball",
      "(once (game_start)) (hold (adjacent desk agent)) (hold (in_motion ?b))"));
  CHECK(value(grounded, "predicate_without_variables_or_agent") == 0.0);

  RawFeatures nested = raw_of(throw_game(
      "?b - dodgeball",
      "(once (agent_holds ?b))"
      " (hold (and (and (not (agent_holds ?b)) (in_motion ?b)) (on rug ?b)))"));
  CHECK(value(nested, "nested_logicals_found") == 1.0);
  CHECK(value(nested, "identical_logical_children_found") == 0.0);

  RawFeatures duplicated = raw_of(throw_game(
      "?b - dodgeball",
      "(once (agent_holds ?b)) (hold (and (in_motion ?b) (in_motion ?b)))"));
  CHECK(value(duplicated, "identical_logical_children_found") == 1.0);
  CHECK(value(duplicated, "redundant_expression_found") == 1.0);

  // the inner conjunct never changes the outcome
  RawFeatures absorbed = raw_of(throw_game(
      "?b - dodgeball",
      "(once (or (agent_holds ?b) (and (agent_holds ?b) (in_motion ?b))))"
      " (hold (in_motion ?b))"));
  CHECK(value(absorbed, "redundant_expression_found") == 1.0);
  CHECK(value(absorbed, "unnecessary_expression_found") == 0.0);
  CHECK(value(absorbed, "identical_logical_children_found") == 0.0);

  RawFeatures contradiction = raw_of(throw_game(
      "?b - dodgeball",
      "(once (and (in_motion ?b) (not (in_motion ?b)))) (hold (agent_holds ?b))"));
  CHECK(value(contradiction, "unnecessary_expression_found") == 1.0);

  RawFeatures tautology = raw_of(throw_game(
      "?b - dodgeball",
      "(once (or (in_motion ?b) (not (in_motion ?b)))) (hold (agent_holds ?b))"));
  CHECK(value(tautology, "unnecessary_expression_found") == 1.0);

  RawFeatures repeated = raw_of(throw_game(
      "?b - dodgeball", "(once (touch ?b ?b)) (hold (in_motion ?b))"));
  CHECK(value(repeated, "repeated_variables_found") == 1.0);

  RawFeatures eitherDup = raw_of(throw_game(
      "?b - (either dodgeball dodgeball)",
      "(once (agent_holds ?b)) (hold (in_motion ?b))"));
  CHECK(value(eitherDup, "repeated_variable_type_in_either") == 1.0);

  RawFeatures clean = raw_features(fixture("exemplars", "throw-in-bin.game"), {});
  for (const char* flag :
       {"predicate_without_variables_or_agent", "nested_logicals_found",
        "identical_logical_children_found", "redundant_expression_found",
        "unnecessary_expression_found", "repeated_variables_found",
        "repeated_variable_type_in_either"})
    CHECK_MESSAGE(value(clean, flag) == 0.0, flag);

  // a single-operand conjunction is a style quirk people actually write; it
  // must not count as redundancy
  RawFeatures pillow = raw_features(fixture("exemplars", "pillow-moved-to-room-center.game"), {});
  CHECK(value(pillow, "redundant_expression_found") == 0.0);
}

TEST_CASE("scoring and terminal misuse flags") {
  RawFeatures twoNumbers = raw_of(throw_game(
      "?b - dodgeball", "(once (agent_holds ?b)) (hold (in_motion ?b))",
      "(+ (count throwAttempt) (+ 5 3))"));
  CHECK(value(twoNumbers, "two_number_operation_found") == 1.0);
  CHECK(value(twoNumbers, "identical_scoring_children_found") == 0.0);

  RawFeatures duplicated = raw_of(throw_game(
      "?b - dodgeball", "(once (agent_holds ?b)) (hold (in_motion ?b))",
      "(+ (count throwAttempt) (count throwAttempt))"));
  CHECK(value(duplicated, "identical_scoring_children_found") == 1.0);

  RawFeatures timesOne = raw_of(throw_game(
      "?b - dodgeball", "(once (agent_holds ?b)) (hold (in_motion ?b))",
      "(* (count throwAttempt) 1)"));
  CHECK(value(timesOne, "redundant_scoring_terminal_expression_found") == 1.0);

  RawFeatures constantComp = raw_of(throw_game(
      "?b - dodgeball", "(once (agent_holds ?b)) (hold (in_motion ?b))",
      "(* (count throwAttempt) (>= 5 3))"));
  CHECK(value(constantComp, "unnecessary_scoring_terminal_expression_found") == 1.0);

  // terminal condition that always holds
  RawFeatures terminalTautology = raw_of(
      "(define (game feat-case) (:domain room-v1)\n(:constraints\n"
      "  (preference throwAttempt (exists (?b - dodgeball) (then"
      " (once (agent_holds ?b)) (hold (in_motion ?b))))))\n"
      "(:terminal (or (>= (count throwAttempt) 3) (not (>= (count throwAttempt) 3))))\n"
      "(:scoring (count throwAttempt)))");
  CHECK(value(terminalTautology, "unnecessary_scoring_terminal_expression_found") == 1.0);
  CHECK(value(terminalTautology, "identical_scoring_children_found") == 0.0);

  RawFeatures negated = raw_of(throw_game(
      "?b - dodgeball", "(once (agent_holds ?b)) (hold (in_motion ?b))",
      "(- (count throwAttempt))"));
  CHECK(value(negated, "total_score_non_positive") == 1.0);

  RawFeatures scaledNegative = raw_of(throw_game(
      "?b - dodgeball", "(once (agent_holds ?b)) (hold (in_motion ?b))",
      "(* (count throwAttempt) (- 2))"));
  CHECK(value(scaledNegative, "total_score_non_positive") == 1.0);

  RawFeatures positive = raw_features(fixture("samples", "throw-to-bin-setup.game"), {});
  CHECK(value(positive, "total_score_non_positive") == 0.0);
  // one preference scored positively, the other as a scaled penalty
  CHECK(value(positive, "scoring_preferences_used_identically") == 0.0);

  RawFeatures symmetric = raw_of(
      "(define (game feat-case) (:domain room-v1)\n(:constraints (and\n"
      "  (preference throwAttempt (exists (?b - dodgeball) (then"
      " (once (agent_holds ?b)) (hold (in_motion ?b)))))\n"
      "  (preference ballOnBed (exists (?b - ball) (at-end (on bed ?b))))))\n"
      "(:scoring (+ (count throwAttempt) (count ballOnBed))))");
  CHECK(value(symmetric, "scoring_preferences_used_identically") == 1.0);

  RawFeatures single = raw_features(fixture("exemplars", "throw-attempt.game"), {});
  CHECK(value(single, "scoring_preferences_used_identically") == 1.0);
  CHECK(value(single, "identical_scoring_children_found") == 0.0);
  CHECK(value(single, "redundant_scoring_terminal_expression_found") == 0.0);
  CHECK(value(single, "unnecessary_scoring_terminal_expression_found") == 0.0);
  CHECK(value(single, "two_number_operation_found") == 0.0);
}

TEST_CASE("element disjointness") {
  RawFeatures split = raw_of(
      "(define (game feat-case) (:domain room-v1)\n(:constraints (and\n"
      "  (preference ballThrow (exists (?b - dodgeball) (then"
      " (once (agent_holds ?b)) (hold (in_motion ?b)) (once (not (in_motion ?b))))))\n"
      "  (preference blockRest (exists (?c - cube_block) (at-end (on floor ?c))))))\n"
      "(:scoring (+ (count ballThrow) (count blockRest))))");
  CHECK(value(split, "disjoint_preferences_found") == 1.0);
  CHECK(value(split, "disjoint_preferences_scoring_terminal_types") == 1.0);
  CHECK(value(split, "disjoint_preferences_scoring_terminal_predicates") == 1.0);

  // subtype overlap counts as shared
  RawFeatures related = raw_of(
      "(define (game feat-case) (:domain room-v1)\n(:constraints (and\n"
      "  (preference ballThrow (exists (?b - dodgeball) (then"
      " (once (agent_holds ?b)) (hold (in_motion ?b)) (once (not (in_motion ?b))))))\n"
      "  (preference ballRest (exists (?b - ball) (at-end (in_motion ?b))))))\n"
      "(:scoring (+ (count ballThrow) (count ballRest))))");
  CHECK(value(related, "disjoint_preferences_found") == 0.0);
  CHECK(value(related, "disjoint_preferences_scoring_terminal_types") == 0.0);
  CHECK(value(related, "disjoint_preferences_scoring_terminal_predicates") == 0.0);

  RawFeatures splitStages = raw_of(throw_game(
      "?b - dodgeball ?c - cube_block",
      "(once (agent_holds ?b)) (hold (in_motion ?b)) (once (on floor ?c))"));
  CHECK(value(splitStages, "disjoint_seq_funcs_found") == 1.0);
  CHECK(value(splitStages, "disjoint_modal_predicates_found") == 1.0);
  CHECK(value(splitStages, "disjoint_modal_predicates_prop") == 1.0);

  RawFeatures chained = raw_features(fixture("exemplars", "throw-attempt.game"), {});
  CHECK(value(chained, "disjoint_seq_funcs_found") == 0.0);
  CHECK(value(chained, "disjoint_modal_predicates_found") == 0.0);
  CHECK(value(chained, "disjoint_modal_predicates_prop") == 0.0);

  RawFeatures splitAtEnd = raw_of(
      "(define (game feat-case) (:domain room-v1)\n(:constraints\n"
      "  (preference endState (exists (?d - dodgeball)"
      " (at-end (and (on bed ?d) (open top_drawer))))))\n"
      "(:scoring (count endState)))");
  CHECK(value(splitAtEnd, "disjoint_at_end_found") == 1.0);

  RawFeatures linkedAtEnd = raw_features(fixture("exemplars", "item-in-closed-drawer.game"), {});
  CHECK(value(linkedAtEnd, "disjoint_at_end_found") == 0.0);

  // a stage mentioning no object at all stays neutral
  RawFeatures phased = raw_features(fixture("exemplars", "game-block-found.game"), {});
  CHECK(value(phased, "disjoint_seq_funcs_found") == 0.0);
  CHECK(value(phased, "disjoint_modal_predicates_found") == 1.0);
}

TEST_CASE("per-object preference accounting") {
  RawFeatures sample = raw_features(fixture("samples", "block-stacking.game"), {});
  CHECK(value(sample, "pref_forall_used_correct") == 1.0);
  CHECK(value(sample, "pref_forall_used_incorrect") == 0.0);
  CHECK(value(sample, "pref_forall_external_forall_used_correct") == 1.0);
  CHECK(value(sample, "pref_forall_external_forall_used_incorrect") == 0.0);
  CHECK(value(sample, "pref_forall_pref_forall_correct_arity_correct") == 1.0);
  CHECK(value(sample, "pref_forall_pref_forall_correct_arity_incorrect") == 0.0);
  CHECK(value(sample, "pref_forall_pref_forall_correct_types_correct") == 1.0);
  CHECK(value(sample, "pref_forall_pref_forall_correct_types_incorrect") == 0.0);

  // per-object definition counted with a plain mode only
  RawFeatures plainCounted = raw_of(
      "(define (game feat-case) (:domain room-v1)\n(:constraints\n"
      "  (forall (?c - cube_block) (preference blockPlaced (then"
      " (once (agent_holds ?c)) (hold (in_motion ?c)) (once (on desk ?c))))))\n"
      "(:scoring (count blockPlaced)))");
  CHECK(value(plainCounted, "pref_forall_used_correct") == 0.0);
  CHECK(value(plainCounted, "pref_forall_used_incorrect") == 1.0);
  CHECK(value(plainCounted, "pref_forall_external_forall_used_correct") == 0.0);
  CHECK(value(plainCounted, "pref_forall_external_forall_used_incorrect") == 0.0);

  // per-object counting of a preference that has no per-object definition
  RawFeatures externalOnPlain = raw_of(throw_game(
      "?b - dodgeball", "(once (agent_holds ?b)) (hold (in_motion ?b))",
      "(count-once-per-external-objects throwAttempt)"));
  CHECK(value(externalOnPlain, "pref_forall_used_correct") == 0.0);
  CHECK(value(externalOnPlain, "pref_forall_used_incorrect") == 0.0);
  CHECK(value(externalOnPlain, "pref_forall_external_forall_used_correct") == 0.0);
  CHECK(value(externalOnPlain, "pref_forall_external_forall_used_incorrect") == 1.0);

  RawFeatures wrongType = raw_of(
      "(define (game feat-case) (:domain room-v1)\n(:constraints\n"
      "  (forall (?c - cube_block) (preference blockPlaced (then"
      " (once (agent_holds ?c)) (hold (in_motion ?c)) (once (on desk ?c))))))\n"
      "(:scoring (count blockPlaced:dodgeball)))");
  CHECK(value(wrongType, "pref_forall_pref_forall_correct_arity_correct") == 1.0);
  CHECK(value(wrongType, "pref_forall_pref_forall_correct_types_correct") == 0.0);
  CHECK(value(wrongType, "pref_forall_pref_forall_correct_types_incorrect") == 1.0);

  RawFeatures overQualified = raw_of(
      "(define (game feat-case) (:domain room-v1)\n(:constraints\n"
      "  (forall (?c - cube_block) (preference blockPlaced (then"
      " (once (agent_holds ?c)) (hold (in_motion ?c)) (once (on desk ?c))))))\n"
      "(:scoring (count blockPlaced:cube_block_blue:cube_block_tan)))");
  CHECK(value(overQualified, "pref_forall_pref_forall_correct_arity_incorrect") == 1.0);
  CHECK(value(overQualified, "pref_forall_pref_forall_correct_arity_correct") == 0.0);

  // per-object counting over plain existentials is a different mode entirely
  RawFeatures perObject = raw_features(fixture("exemplars", "item-in-closed-drawer.game"), {});
  for (const char* name :
       {"pref_forall_used_correct", "pref_forall_used_incorrect",
        "pref_forall_external_forall_used_correct", "pref_forall_external_forall_used_incorrect",
        "pref_forall_pref_forall_correct_arity_correct",
        "pref_forall_pref_forall_correct_arity_incorrect",
        "pref_forall_pref_forall_correct_types_correct",
        "pref_forall_pref_forall_correct_types_incorrect"})
    CHECK_MESSAGE(value(perObject, name) == 0.0, name);
}

TEST_CASE("play trace grounding") {
  std::vector<Trace> both{testsupport::two_throw_trace(), testsupport::ramp_throw_trace(true)};
  std::vector<Trace> rampOnly{testsupport::ramp_throw_trace(true)};
  PredicateDatabase dbBoth(both);
  PredicateDatabase dbRamp(rampOnly);
  ExtractionContext ctxBoth{nullptr, &dbBoth};
  ExtractionContext ctxRamp{nullptr, &dbRamp};

  std::string binGame =
      "(define (game feat-case) (:domain room-v1)\n(:constraints\n"
      "  (preference throwToBin (exists (?b - dodgeball ?h - hexagonal_bin) (then"
      " (once (agent_holds ?b)) (hold (in_motion ?b))"
      " (once (in ?h ?b))))))\n(:scoring (count throwToBin)))";
  // every predicate witnessed across the two traces
  CHECK(value(raw_of(binGame, ctxBoth), "predicate_found_in_data_prop") == 1.0);
  // the ramp trace has no bin, so (in ?h ?b) never holds there
  double rampProp = value(raw_of(binGame, ctxRamp), "predicate_found_in_data_prop");
  CHECK(rampProp == doctest::Approx(2.0 / 3.0));
  CHECK(rampProp < 1.0);

  // more traces can only add witnesses
  for (const auto& game : fixture_corpus()) {
    RawFeatures small = raw_features(game, ctxRamp);
    RawFeatures large = raw_features(game, ctxBoth);
    CHECK(value(small, "predicate_found_in_data_prop") <=
          value(large, "predicate_found_in_data_prop"));
  }

  // held and in motion never overlap in the recorded states
  std::string contradictory = throw_game(
      "?b - dodgeball",
      "(once (and (agent_holds ?b) (in_motion ?b))) (hold (in_motion ?b))");
  CHECK(value(raw_of(contradictory, ctxBoth),
              "predicate_found_in_data_small_logicals_prop") == 0.0);
  std::string consistent = throw_game(
      "?b - dodgeball",
      "(once (and (not (agent_holds ?b)) (in_motion ?b))) (hold (in_motion ?b))");
  RawFeatures consistentRaw = raw_of(consistent, ctxBoth);
  CHECK(value(consistentRaw, "predicate_found_in_data_small_logicals_prop") == 1.0);

  // without a database everything counts as grounded
  CHECK(value(raw_of(contradictory), "predicate_found_in_data_prop") == 1.0);
  CHECK(value(raw_of(contradictory), "predicate_found_in_data_small_logicals_prop") == 1.0);
}

TEST_CASE("normalizer bins, ranges and serialization") {
  const FeatureRegistry& reg = FeatureRegistry::full();
  std::vector<RawFeatures> rows;
  for (double v : {10.0, 20.0, 30.0, 40.0, 50.0}) {
    RawFeatures r;
    r["node_count_constraints"] = v;
    r["ast_ngram_full_n_5_score"] = -v / 10.0;  // -1 .. -5
    rows.push_back(r);
  }
  FeatureNormalizer norm = FeatureNormalizer::fit(reg, rows);

  const auto& names = reg.vector_names();
  auto slot = [&](const std::string& name) {
    auto it = std::find(names.begin(), names.end(), name);
    REQUIRE(it != names.end());
    return size_t(it - names.begin());
  };

  auto bin_of = [&](double v) {
    RawFeatures r;
    r["node_count_constraints"] = v;
    std::vector<double> vec = norm.apply(r);
    int bin = -1;
    double sum = 0;
    for (int b = 0; b < FeatureRegistry::kBins; ++b) {
      double s = vec[slot("node_count_constraints_" + std::to_string(b))];
      sum += s;
      if (s == 1.0) bin = b;
    }
    CHECK(sum == 1.0);
    return bin;
  };
  CHECK(bin_of(10) == 0);
  CHECK(bin_of(20) == 0);
  CHECK(bin_of(25) == 1);
  CHECK(bin_of(35) == 2);
  CHECK(bin_of(45) == 3);
  CHECK(bin_of(55) == 4);
  CHECK(bin_of(0) == 0);

  RawFeatures mid;
  mid["ast_ngram_full_n_5_score"] = -3.0;
  std::vector<double> vec = norm.apply(mid);
  CHECK(vec[slot("ast_ngram_full_n_5_score")] == doctest::Approx(0.5));
  mid["ast_ngram_full_n_5_score"] = -5.0;
  CHECK(norm.apply(mid)[slot("ast_ngram_full_n_5_score")] == doctest::Approx(0.0));
  mid["ast_ngram_full_n_5_score"] = -7.0;  // below the fitted range
  CHECK(norm.apply(mid)[slot("ast_ngram_full_n_5_score")] == 0.0);
  mid["ast_ngram_full_n_5_score"] = std::nan("");
  CHECK(norm.apply(mid)[slot("ast_ngram_full_n_5_score")] == doctest::Approx(0.5));
  // a score column the fitting set never varies maps to the midpoint
  CHECK(norm.apply(mid)[slot("ast_ngram_setup_n_5_score")] == doctest::Approx(0.5));

  CHECK_THROWS_AS(FeatureNormalizer::fit(reg, {rows[0]}), std::invalid_argument);

  FeatureNormalizer reloaded = FeatureNormalizer::from_json(norm.to_json());
  RawFeatures sample;
  sample["node_count_constraints"] = 33.0;
  sample["ast_ngram_full_n_5_score"] = -2.5;
  CHECK(reloaded.apply(sample) == norm.apply(sample));
  CHECK(reloaded.registry().vector_size() == reg.vector_size());
}

TEST_CASE("full pipeline stays inside the unit interval") {
  std::vector<GameAst> corpus = fixture_corpus();
  REQUIRE(corpus.size() >= 12);
  NgramSet ngrams = NgramSet::fit(corpus);
  std::vector<Trace> traces{testsupport::two_throw_trace(), testsupport::ramp_throw_trace(true)};
  PredicateDatabase db(traces);
  ExtractionContext ctx{&ngrams, &db};

  std::vector<RawFeatures> rows;
  for (const auto& game : corpus) rows.push_back(raw_features(game, ctx));
  FeatureNormalizer norm = FeatureNormalizer::fit(FeatureRegistry::full(), rows);

  for (size_t g = 0; g < corpus.size(); ++g) {
    std::vector<double> vec = norm.apply(rows[g]);
    REQUIRE(vec.size() == 88);
    size_t slot = 0;
    for (const auto& def : FeatureRegistry::full().defs()) {
      size_t width = def.kind == FeatureKind::Discretized ? FeatureRegistry::kBins : 1;
      for (size_t k = 0; k < width; ++k, ++slot) {
        CHECK(std::isfinite(vec[slot]));
        CHECK(vec[slot] >= 0.0);
        CHECK(vec[slot] <= 1.0);
        if (def.kind == FeatureKind::Binary || def.kind == FeatureKind::Discretized)
          CHECK((vec[slot] == 0.0 || vec[slot] == 1.0));
      }
    }
  }

  // the same tree always produces the same vector
  GameAst copy = corpus[0];
  CHECK(norm.apply(raw_features(copy, ctx)) == norm.apply(rows[0]));

  RawFeatures cleanRaw = raw_features(fixture("exemplars", "throw-attempt.game"), ctx);
  CHECK(coherent(cleanRaw));
  RawFeatures unusedVar = raw_of(throw_game("?b - dodgeball ?q - cube_block",
                                            "(once (agent_holds ?b))"
                                            "(hold (and (not (agent_holds ?b)) (in_motion ?b)))"
                                            "(once (not (in_motion ?b)))"));
  auto failures = coherence_failures(unusedVar);
  CHECK(std::count(failures.begin(), failures.end(), "variables_used_all") == 1);
}

TEST_CASE("editing one preference leaves the setup features alone") {
  std::vector<GameAst> corpus = fixture_corpus();
  NgramSet ngrams = NgramSet::fit(corpus);
  ExtractionContext ctx{&ngrams, nullptr};

  GameAst game = fixture("samples", "throw-to-bin-setup.game");
  RawFeatures before = raw_features(game, ctx);

  auto setup_slice = [](const RawFeatures& r) {
    return std::vector<double>{
        r.at("ast_ngram_setup_n_5_score"), r.at("node_count_setup"), r.at("max_depth_setup"),
        r.at("section_doesnt_exist_setup")};
  };

  // corruption one: rename a predicate inside a preference body
  GameAst renamed = game;
  bool changed = false;
  visit_mut(renamed.constraints(), [&](Node& n) {
    if (!changed && n.nt == Nt::Predicate && n.token == "in_motion") {
      n.token = "broken";
      changed = true;
    }
  });
  REQUIRE(changed);
  renamed.reindex();
  RawFeatures after = raw_features(renamed, ctx);
  CHECK(setup_slice(after) == setup_slice(before));
  CHECK(after.at("ast_ngram_full_n_5_score") != before.at("ast_ngram_full_n_5_score"));

  // corruption two: duplicate a sequence stage
  GameAst duplicated = game;
  Node* then = nullptr;
  visit_mut(duplicated.constraints(), [&](Node& n) {
    if (!then && n.nt == Nt::Then) then = &n;
  });
  REQUIRE(then != nullptr);
  then->add(then->children.back()->clone());
  duplicated.reindex();
  RawFeatures dup = raw_features(duplicated, ctx);
  CHECK(setup_slice(dup) == setup_slice(before));
  CHECK(dup.at("node_count_constraints") > before.at("node_count_constraints"));
}

TEST_CASE("feature matrices round-trip through text") {
  FeatureMatrix m;
  m.names = {"alpha", "beta", "gamma"};
  m.ids = {"game-1", "game-2"};
  m.rows = {{0.0, 1.0, 1.0 / 3.0}, {0.25, 0.5, 0.75}};

  std::stringstream buf;
  save_matrix(buf, m);
  FeatureMatrix back = load_matrix(buf);
  CHECK(back.names == m.names);
  CHECK(back.ids == m.ids);
  REQUIRE(back.rows.size() == 2);
  for (size_t r = 0; r < 2; ++r)
    for (size_t c = 0; c < 3; ++c) CHECK(back.rows[r][c] == m.rows[r][c]);

  std::stringstream empty("");
  CHECK_THROWS(load_matrix(empty));
  std::stringstream ragged("id a b\nrow1 0.5\n");
  CHECK_THROWS(load_matrix(ragged));
}
