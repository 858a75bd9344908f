#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "goalgen/ast.hpp"
#include "goalgen/features.hpp"
#include "goalgen/fitness.hpp"
#include "goalgen/pcfg.hpp"
#include "goalgen/rng.hpp"

namespace goalgen {

// Behavioral signature of one preference: four predicate-group bits
// (agent_holds|in_motion, in, on, adjacent|near|touch) followed by five
// object-category bits (balls, receptacles, blocks|buildings,
// furniture|room features, small|large|any object).
inline constexpr size_t kBcBits = 9;
using BcVector = std::array<uint8_t, kBcBits>;

int bc_l1(const BcVector& a, const BcVector& b);
BcVector pref_bc_vector(const Node& prefDef);

struct ExemplarPref {
  std::string name;
  BcVector bits{};
};

// Archetypal gameplay preferences. A candidate preference counts as matching
// an exemplar when their signatures differ in at most one bit.
struct ExemplarSet {
  std::vector<ExemplarPref> prefs;

  size_t size() const { return prefs.size(); }
  // The nine defaults: throwing, placing, stacking and tidying archetypes.
  static const ExemplarSet& full();
  // Three-exemplar profile for small-scale runs and tests.
  static const ExemplarSet& desk();
};

// The archive axes: per-exemplar match counts, a setup flag and the allowed
// preference-count range.
struct SearchSpace {
  ExemplarSet exemplars;
  int min_prefs = 1;
  int max_prefs = 4;

  void check() const;
  uint64_t cell_count() const;
  static SearchSpace full();  // 9 exemplars, counts 1..4 -> 2000 cells
  static SearchSpace desk();  // 3 exemplars, counts 1..2 -> 28 cells
};

struct ArchiveKey {
  std::vector<int> counts;  // one per exemplar, then the no-match count
  bool setup = false;

  int total_prefs() const;
  bool operator==(const ArchiveKey& other) const;
  bool operator<(const ArchiveKey& other) const;
};

// Matches each preference against the exemplars (L1 distance at most 1);
// a multi-way match is resolved by a uniform draw so ties are reproducible
// under the run's seed. Throws when the preference count is out of range.
ArchiveKey behavioral_key(const GameAst& game, const SearchSpace& space, Rng& rng);
std::vector<ArchiveKey> enumerate_keys(const SearchSpace& space);

struct CellEntry {
  GameAst game;
  double fitness = 0.0;
  int generation = 0;  // when the resident was inserted, 0 for init samples
};

// Two elite maps: candidates passing the coherence conjunction land in the
// reported half, the rest in the exploratory half.
struct Archive {
  std::map<ArchiveKey, CellEntry> coherent;
  std::map<ArchiveKey, CellEntry> incoherent;

  size_t occupied() const { return coherent.size() + incoherent.size(); }
  // An empty cell always accepts; an occupied one only for strictly greater
  // fitness. Returns whether the entry became resident.
  bool try_insert(bool coherentHalf, const ArchiveKey& key, CellEntry entry);
};

enum class MutationOp : uint8_t {
  Regrow = 0,
  Insert,
  Delete,
  Crossover,
  ResampleVariables,
  ResampleFirstCondition,
  ResampleLastCondition,
  ResampleSetup,
  ResampleTerminal,
};
inline constexpr size_t kMutationOps = 9;
std::string_view mutation_op_name(MutationOp op);

struct MutationConfig {
  std::array<double, kMutationOps> weights{1, 1, 1, 1, 1, 1, 1, 1, 1};
  int generations = 8192;
  int updates_per_generation = 750;
  bool pcfg_only = false;  // baseline: fresh grammar samples instead of mutations
  uint64_t seed = 0;

  void check() const;
};

struct MutationResult {
  GameAst game;
  MutationOp op = MutationOp::Regrow;
  bool noop = false;  // no applicable operator produced a usable child
};

// Applies one weighted operator. Children that fail to print/parse or that
// contain duplicate gameplay preferences are rejected and resampled, a
// bounded number of times.
MutationResult mutate(const GameAst& parent, const std::vector<const CellEntry*>& pool,
                      const Pcfg& pcfg, const MutationConfig& config, Rng& rng);

struct GenerationStats {
  int generation = 0;
  size_t coherent_cells = 0;
  size_t incoherent_cells = 0;
  uint64_t candidates = 0;  // cumulative, including rejected ones
  uint64_t inserts = 0;     // cumulative accepted insertions
  // Fitness spread over the coherent half; NaN while it is empty.
  double fit_min = 0, fit_q25 = 0, fit_q50 = 0, fit_q75 = 0, fit_max = 0;
};

struct SearchState {
  SearchSpace space;
  MutationConfig config;
  Archive archive;
  std::vector<GenerationStats> stats;
  Rng rng;
  int generation = 0;
  uint64_t candidates = 0;
  uint64_t inserts = 0;
};

// Seeds the archive with grammar samples, best-first, stopping once every
// axis value is represented or `cap` cells are occupied.
Archive init_archive(const SearchSpace& space, const Pcfg& pcfg, const FitnessModel& model,
                     const ExtractionContext& ctx, int samples, int cap, Rng& rng);

SearchState init_search(const SearchSpace& space, const MutationConfig& config, const Pcfg& pcfg,
                        const FitnessModel& model, const ExtractionContext& ctx,
                        int samples = 1024, int cap = 128);

// Runs whole generations until `targetGeneration`. Within a generation all
// parents come from the archive as it stood at the generation start; staged
// insertions are applied afterwards in candidate order.
void advance(SearchState& state, const Pcfg& pcfg, const FitnessModel& model,
             const ExtractionContext& ctx, int targetGeneration);

SearchState run_map_elites(const SearchSpace& space, const MutationConfig& config,
                           const Pcfg& pcfg, const FitnessModel& model,
                           const ExtractionContext& ctx);

void save_checkpoint(std::ostream& out, const SearchState& state);
SearchState load_checkpoint(std::istream& in);

// Tab-separated time series of the per-generation statistics.
void save_stats_tsv(std::ostream& out, const std::vector<GenerationStats>& stats);

}  // namespace goalgen
