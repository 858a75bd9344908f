#pragma once

#include <map>
#include <string>
#include <vector>

#include "goalgen/ast.hpp"
#include "goalgen/ngram.hpp"
#include "goalgen/trace.hpp"

namespace goalgen {

// How a feature reaches the unit interval: binary and proportion features
// already live there, discretized features one-hot over five bins with
// fitted thresholds, float features min-max normalized over the fitting set.
enum class FeatureKind : uint8_t { Binary, Proportion, Discretized, Float };

struct FeatureDef {
  std::string name;
  FeatureKind kind;
};

// Ordered catalog of feature definitions. Discretized entries expand to one
// vector slot per bin ("<name>_<bin>"), everything else to a single slot.
class FeatureRegistry {
 public:
  static constexpr int kBins = 5;
  static constexpr const char* kVersion = "features-v1";

  explicit FeatureRegistry(std::vector<FeatureDef> defs);
  // the full default catalog (88 vector entries)
  static const FeatureRegistry& full();

  const std::vector<FeatureDef>& defs() const { return defs_; }
  const FeatureDef* find(const std::string& name) const;
  const std::vector<std::string>& vector_names() const { return names_; }
  size_t vector_size() const { return names_.size(); }

 private:
  std::vector<FeatureDef> defs_;
  std::vector<std::string> names_;
};

struct ExtractionContext {
  const NgramSet* ngrams = nullptr;      // absent: n-gram features are NaN
  const PredicateDatabase* db = nullptr;  // absent: data features report 1.0
};

// Raw feature values keyed by definition name: binary/proportion values are
// final, float values are unnormalized scores (possibly NaN), discretized
// values are raw magnitudes awaiting binning.
using RawFeatures = std::map<std::string, double>;

RawFeatures raw_features(const GameAst& game, const ExtractionContext& ctx);

// Maps raw features to the fixed-order unit-interval vector: min-max with
// clamping for floats (NaN and constant columns to 0.5), fitted quintile
// thresholds for discretized features, pass-through for the rest.
class FeatureNormalizer {
 public:
  FeatureNormalizer();

  static FeatureNormalizer fit(const FeatureRegistry& registry,
                               const std::vector<RawFeatures>& rows);

  std::vector<double> apply(const RawFeatures& raw) const;
  const FeatureRegistry& registry() const { return registry_; }

  std::string to_json() const;
  static FeatureNormalizer from_json(const std::string& text);

 private:
  FeatureRegistry registry_;
  std::map<std::string, std::pair<double, double>> ranges_;  // float features
  std::map<std::string, std::vector<double>> thresholds_;    // discretized
};

// Feature matrices move between tools as plain text: a header line with "id"
// plus the expanded vector names, then one line per game.
struct FeatureMatrix {
  std::vector<std::string> names;
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
};

void save_matrix(std::ostream& out, const FeatureMatrix& m);
FeatureMatrix load_matrix(std::istream& in);

// Structural sanity gate over raw features: all defined components used and
// none of the structure-misuse or disjointness flags raised. Games passing
// it go to the main archive during search.
bool coherent(const RawFeatures& raw);
std::vector<std::string> coherence_failures(const RawFeatures& raw);

}  // namespace goalgen
