#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "goalgen/ast.hpp"
#include "goalgen/features.hpp"
#include "goalgen/pcfg.hpp"
#include "goalgen/rng.hpp"

namespace goalgen {

struct TrainConfig {
  int positives_per_batch = 1;        // B
  int negatives_per_positive = 1024;  // K, sampled fresh each epoch from the pool
  int negatives_generated = 1024;     // M, pool size per positive
  double learning_rate = 4e-3;
  double weight_decay = 0.003;
  int max_epochs = 25000;
  int plateau = 500;  // stop after this many epochs without validation improvement
  double validation_fraction = 0.1;
  uint64_t seed = 0;

  void check() const;  // throws std::invalid_argument on nonsense values
};

// Normalized feature rows: one per positive game, plus for each positive the
// pool of corrupted variants standing in as negatives.
struct FitnessDataset {
  std::vector<std::vector<double>> positives;
  std::vector<std::vector<std::vector<double>>> negatives;  // [positive][variant]
  std::vector<std::string> ids;                             // optional, per positive
};

// Linear scorer over normalized feature vectors.
struct FitnessModel {
  std::vector<double> theta;
  FeatureNormalizer normalizer;
  TrainConfig config;
  double best_validation_loss = 0.0;
  int best_epoch = -1;
  double final_train_loss = 0.0;

  double score(const std::vector<double>& phi) const;
  double score(const RawFeatures& raw) const;
  double score(const GameAst& game, const ExtractionContext& ctx) const;

  std::string to_json() const;
  static FitnessModel from_json(const std::string& text);
};

// One corrupted variant per entry: a uniformly chosen subtree regrown from the
// grammar model, grouped by the positive it came from.
std::vector<std::vector<GameAst>> gen_negatives(const std::vector<GameAst>& corpus,
                                                const Pcfg& pcfg, int perPositive, Rng& rng);

// -log softmax probability of the positive among positive + negatives,
// stabilized by max subtraction.
double contrastive_loss(double positive, const std::vector<double>& negatives);

// Loss plus its gradient in θ for one positive row against negative rows.
struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};
LossGrad loss_and_gradient(const std::vector<double>& theta, const std::vector<double>& posPhi,
                           const std::vector<const std::vector<double>*>& negPhis);

FitnessModel train(const FitnessDataset& data, const FeatureNormalizer& normalizer,
                   const TrainConfig& config);

// Hyperparameter grid search with k-fold splits over positive games; negatives
// follow their positive. Ties keep the earliest grid entry.
struct CvEntry {
  TrainConfig config;
  double mean_loss = 0.0;
};
struct CvResult {
  TrainConfig best;
  double best_loss = 0.0;
  std::vector<CvEntry> table;
};
std::vector<TrainConfig> default_grid(const TrainConfig& base);
CvResult crossvalidate(const FitnessDataset& data, const FeatureNormalizer& normalizer,
                       const std::vector<TrainConfig>& grid, int folds);

// Dataset container: the feature matrix format with ids "pos<i>" and
// "neg<i>_<j>" carrying the grouping.
void save_dataset(std::ostream& out, const FitnessDataset& data,
                  const std::vector<std::string>& names);
FitnessDataset load_dataset(std::istream& in);

}  // namespace goalgen
