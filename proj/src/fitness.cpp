#include "goalgen/fitness.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace goalgen {
namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("feature vector length mismatch");
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Mean loss and gradient over a batch of positives, each against its sampled
// negatives. Gradient includes the batch mean only; weight decay is applied by
// the caller.
LossGrad batch_loss(const std::vector<double>& theta, const FitnessDataset& data,
                    const std::vector<size_t>& batch,
                    const std::vector<std::vector<size_t>>& picks) {
  LossGrad total;
  total.grad.assign(theta.size(), 0.0);
  for (size_t b : batch) {
    std::vector<const std::vector<double>*> negs;
    negs.reserve(picks[b].size());
    for (size_t j : picks[b]) negs.push_back(&data.negatives[b][j]);
    LossGrad one = loss_and_gradient(theta, data.positives[b], negs);
    total.loss += one.loss;
    for (size_t i = 0; i < theta.size(); ++i) total.grad[i] += one.grad[i];
  }
  double inv = 1.0 / double(batch.size());
  total.loss *= inv;
  for (double& gi : total.grad) gi *= inv;
  return total;
}

// Validation loss: every held-out positive against its full negative pool.
double evaluation_loss(const std::vector<double>& theta, const FitnessDataset& data,
                       const std::vector<size_t>& positives) {
  double sum = 0.0;
  for (size_t p : positives) {
    double pos = dot(theta, data.positives[p]);
    std::vector<double> negs;
    negs.reserve(data.negatives[p].size());
    for (const auto& row : data.negatives[p]) negs.push_back(dot(theta, row));
    sum += contrastive_loss(pos, negs);
  }
  return positives.empty() ? 0.0 : sum / double(positives.size());
}

bool same_search_point(const TrainConfig& a, const TrainConfig& b) {
  return a.positives_per_batch == b.positives_per_batch &&
         a.negatives_per_positive == b.negatives_per_positive &&
         a.learning_rate == b.learning_rate && a.weight_decay == b.weight_decay &&
         a.max_epochs == b.max_epochs && a.plateau == b.plateau;
}

}  // namespace

void TrainConfig::check() const {
  if (positives_per_batch < 1) throw std::invalid_argument("batch size must be positive");
  if (negatives_per_positive < 1 || negatives_generated < 1 ||
      negatives_per_positive > negatives_generated)
    throw std::invalid_argument("need 1 <= sampled negatives <= generated negatives");
  if (learning_rate <= 0.0) throw std::invalid_argument("learning rate must be positive");
  if (weight_decay < 0.0) throw std::invalid_argument("weight decay cannot be negative");
  if (max_epochs < 1) throw std::invalid_argument("epoch budget must be positive");
  if (plateau < 1) throw std::invalid_argument("plateau window must be positive");
  if (validation_fraction < 0.0 || validation_fraction >= 1.0)
    throw std::invalid_argument("validation fraction must be in [0, 1)");
}

double FitnessModel::score(const std::vector<double>& phi) const { return dot(theta, phi); }

double FitnessModel::score(const RawFeatures& raw) const { return dot(theta, normalizer.apply(raw)); }

double FitnessModel::score(const GameAst& game, const ExtractionContext& ctx) const {
  return score(raw_features(game, ctx));
}

std::vector<std::vector<GameAst>> gen_negatives(const std::vector<GameAst>& corpus,
                                                const Pcfg& pcfg, int perPositive, Rng& rng) {
  std::vector<std::vector<GameAst>> out;
  out.reserve(corpus.size());
  for (const GameAst& game : corpus) {
    std::vector<int> targets = pcfg.regrow_targets(game);
    if (targets.empty()) throw std::runtime_error("game has no regrowth targets");
    std::vector<GameAst> variants;
    variants.reserve(perPositive);
    for (int m = 0; m < perPositive; ++m) {
      int node = targets[uniform_below(rng, targets.size())];
      variants.push_back(pcfg.regrow(game, node, rng));
    }
    out.push_back(std::move(variants));
  }
  return out;
}

double contrastive_loss(double positive, const std::vector<double>& negatives) {
  if (negatives.empty()) throw std::invalid_argument("loss needs at least one negative");
  double m = positive;
  for (double v : negatives) m = std::max(m, v);
  double z = std::exp(positive - m);
  for (double v : negatives) z += std::exp(v - m);
  return -(positive - m) + std::log(z);
}

LossGrad loss_and_gradient(const std::vector<double>& theta, const std::vector<double>& posPhi,
                           const std::vector<const std::vector<double>*>& negPhis) {
  if (negPhis.empty()) throw std::invalid_argument("loss needs at least one negative");
  double pos = dot(theta, posPhi);
  double m = pos;
  std::vector<double> scores(negPhis.size());
  for (size_t j = 0; j < negPhis.size(); ++j) {
    scores[j] = dot(theta, *negPhis[j]);
    m = std::max(m, scores[j]);
  }
  double z = std::exp(pos - m);
  for (double s : scores) z += std::exp(s - m);

  LossGrad out;
  out.loss = -(pos - m) + std::log(z);
  out.grad.assign(theta.size(), 0.0);
  double pPos = std::exp(pos - m) / z;
  for (size_t i = 0; i < theta.size(); ++i) out.grad[i] = (pPos - 1.0) * posPhi[i];
  for (size_t j = 0; j < negPhis.size(); ++j) {
    double pj = std::exp(scores[j] - m) / z;
    const std::vector<double>& phi = *negPhis[j];
    for (size_t i = 0; i < theta.size(); ++i) out.grad[i] += pj * phi[i];
  }
  return out;
}

FitnessModel train(const FitnessDataset& data, const FeatureNormalizer& normalizer,
                   const TrainConfig& config) {
  config.check();
  if (data.positives.empty()) throw std::invalid_argument("no positive games");
  if (data.negatives.size() != data.positives.size())
    throw std::invalid_argument("negatives must be grouped per positive");
  size_t dim = data.positives[0].size();
  for (const auto& row : data.positives)
    if (row.size() != dim) throw std::invalid_argument("feature vector length mismatch");
  for (const auto& group : data.negatives) {
    if (group.empty()) throw std::invalid_argument("every positive needs negatives");
    for (const auto& row : group)
      if (row.size() != dim) throw std::invalid_argument("feature vector length mismatch");
  }

  size_t n = data.positives.size();
  // held-out positives (with their pools) used only for the stopping rule
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng splitRng = make_rng(config.seed, "fitness/split");
  std::shuffle(order.begin(), order.end(), splitRng);
  size_t valCount = 0;
  if (n >= 2) {
    valCount = size_t(std::lround(config.validation_fraction * double(n)));
    valCount = std::min(n - 1, std::max<size_t>(1, valCount));
  }
  std::vector<size_t> valSet(order.begin(), order.begin() + valCount);
  std::vector<size_t> trainSet(order.begin() + valCount, order.end());
  // a single positive trains and validates on itself
  const std::vector<size_t>& evalSet = valSet.empty() ? trainSet : valSet;

  std::vector<double> theta(dim, 0.0);
  std::vector<double> best = theta;
  double bestLoss = evaluation_loss(theta, data, evalSet);
  int bestEpoch = 0;
  double lastTrainLoss = 0.0;

  Rng epochRng = make_rng(config.seed, "fitness/epochs");
  std::vector<std::vector<size_t>> picks(n);
  std::vector<size_t> shuffled = trainSet;

  int epoch = 1;
  for (; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(shuffled.begin(), shuffled.end(), epochRng);
    for (size_t p : shuffled) {
      const auto& pool = data.negatives[p];
      size_t take = std::min<size_t>(config.negatives_per_positive, pool.size());
      std::vector<size_t>& pick = picks[p];
      pick.resize(pool.size());
      std::iota(pick.begin(), pick.end(), 0);
      for (size_t i = 0; i < take; ++i)
        std::swap(pick[i], pick[i + uniform_below(epochRng, pick.size() - i)]);
      pick.resize(take);
    }

    double epochLoss = 0.0;
    size_t batches = 0;
    for (size_t start = 0; start < shuffled.size();
         start += size_t(config.positives_per_batch)) {
      size_t end = std::min(shuffled.size(), start + size_t(config.positives_per_batch));
      std::vector<size_t> batch(shuffled.begin() + start, shuffled.begin() + end);
      LossGrad lg = batch_loss(theta, data, batch, picks);
      for (size_t i = 0; i < dim; ++i)
        theta[i] -= config.learning_rate * (lg.grad[i] + config.weight_decay * theta[i]);
      epochLoss += lg.loss;
      ++batches;
    }
    lastTrainLoss = batches ? epochLoss / double(batches) : 0.0;

    double valLoss = evaluation_loss(theta, data, evalSet);
    if (valLoss < bestLoss) {
      bestLoss = valLoss;
      best = theta;
      bestEpoch = epoch;
    } else if (epoch - bestEpoch >= config.plateau) {
      break;
    }
  }

  FitnessModel model;
  model.theta = std::move(best);
  model.normalizer = normalizer;
  model.config = config;
  model.best_validation_loss = bestLoss;
  model.best_epoch = bestEpoch;
  model.final_train_loss = lastTrainLoss;
  return model;
}

std::vector<TrainConfig> default_grid(const TrainConfig& base) {
  std::vector<TrainConfig> grid;
  for (int b : {1, 2, 4})
    for (int k : {256, 512, 1024})
      for (double eta : {1e-3, 4e-3}) {
        TrainConfig c = base;
        c.positives_per_batch = b;
        c.negatives_per_positive = std::min(k, base.negatives_generated);
        c.learning_rate = eta;
        grid.push_back(c);
      }
  return grid;
}

CvResult crossvalidate(const FitnessDataset& data, const FeatureNormalizer& normalizer,
                       const std::vector<TrainConfig>& grid, int folds) {
  if (grid.empty()) throw std::invalid_argument("empty hyperparameter grid");
  size_t n = data.positives.size();
  if (folds < 2 || size_t(folds) > n)
    throw std::invalid_argument("dataset too small for the requested folds");

  Rng foldRng = make_rng(grid.front().seed, "fitness/folds");
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), foldRng);

  CvResult result;
  result.best_loss = std::numeric_limits<double>::infinity();
  for (size_t g = 0; g < grid.size(); ++g) {
    bool seen = false;
    for (size_t prev = 0; prev < g; ++prev)
      if (same_search_point(grid[prev], grid[g])) seen = true;
    if (seen) continue;

    double total = 0.0;
    for (int f = 0; f < folds; ++f) {
      FitnessDataset trainData, valData;
      for (size_t i = 0; i < n; ++i) {
        size_t p = order[i];
        FitnessDataset& side = (int(i % size_t(folds)) == f) ? valData : trainData;
        side.positives.push_back(data.positives[p]);
        side.negatives.push_back(data.negatives[p]);
      }
      TrainConfig c = grid[g];
      c.seed = derive_seed(grid[g].seed, "fitness/cv-fold-" + std::to_string(f));
      FitnessModel model = train(trainData, normalizer, c);
      std::vector<size_t> all(valData.positives.size());
      std::iota(all.begin(), all.end(), 0);
      total += evaluation_loss(model.theta, valData, all);
    }
    double mean = total / double(folds);
    result.table.push_back({grid[g], mean});
    if (mean < result.best_loss) {
      result.best_loss = mean;
      result.best = grid[g];
    }
  }
  return result;
}

std::string FitnessModel::to_json() const {
  nlohmann::json j;
  j["kind"] = "fitness-model";
  j["theta"] = theta;
  j["normalizer"] = nlohmann::json::parse(normalizer.to_json());
  j["config"] = {{"positives_per_batch", config.positives_per_batch},
                 {"negatives_per_positive", config.negatives_per_positive},
                 {"negatives_generated", config.negatives_generated},
                 {"learning_rate", config.learning_rate},
                 {"weight_decay", config.weight_decay},
                 {"max_epochs", config.max_epochs},
                 {"plateau", config.plateau},
                 {"validation_fraction", config.validation_fraction},
                 {"seed", config.seed}};
  j["best_validation_loss"] = best_validation_loss;
  j["best_epoch"] = best_epoch;
  j["final_train_loss"] = final_train_loss;
  return j.dump(2);
}

FitnessModel FitnessModel::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.value("kind", "") != "fitness-model") throw std::runtime_error("not a fitness model file");
  FitnessModel model;
  model.theta = j.at("theta").get<std::vector<double>>();
  model.normalizer = FeatureNormalizer::from_json(j.at("normalizer").dump());
  if (model.theta.size() != model.normalizer.registry().vector_size())
    throw std::runtime_error("weight count does not match the feature registry");
  const auto& c = j.at("config");
  model.config.positives_per_batch = c.at("positives_per_batch").get<int>();
  model.config.negatives_per_positive = c.at("negatives_per_positive").get<int>();
  model.config.negatives_generated = c.at("negatives_generated").get<int>();
  model.config.learning_rate = c.at("learning_rate").get<double>();
  model.config.weight_decay = c.at("weight_decay").get<double>();
  model.config.max_epochs = c.at("max_epochs").get<int>();
  model.config.plateau = c.at("plateau").get<int>();
  model.config.validation_fraction = c.at("validation_fraction").get<double>();
  model.config.seed = c.at("seed").get<uint64_t>();
  model.best_validation_loss = j.at("best_validation_loss").get<double>();
  model.best_epoch = j.at("best_epoch").get<int>();
  model.final_train_loss = j.at("final_train_loss").get<double>();
  return model;
}

void save_dataset(std::ostream& out, const FitnessDataset& data,
                  const std::vector<std::string>& names) {
  FeatureMatrix m;
  m.names = names;
  for (size_t p = 0; p < data.positives.size(); ++p) {
    std::string base = p < data.ids.size() ? data.ids[p] : std::to_string(p);
    m.ids.push_back("pos:" + base);
    m.rows.push_back(data.positives[p]);
    for (size_t j = 0; j < data.negatives[p].size(); ++j) {
      m.ids.push_back("neg:" + std::to_string(p) + ":" + std::to_string(j));
      m.rows.push_back(data.negatives[p][j]);
    }
  }
  save_matrix(out, m);
}

FitnessDataset load_dataset(std::istream& in) {
  FeatureMatrix m = load_matrix(in);
  FitnessDataset data;
  for (size_t r = 0; r < m.rows.size(); ++r) {
    const std::string& id = m.ids[r];
    if (id.rfind("pos:", 0) == 0) {
      data.ids.push_back(id.substr(4));
      data.positives.push_back(m.rows[r]);
      data.negatives.emplace_back();
    } else if (id.rfind("neg:", 0) == 0) {
      if (data.negatives.empty()) throw std::runtime_error("negative row before any positive");
      data.negatives.back().push_back(m.rows[r]);
    } else {
      throw std::runtime_error("unknown row kind in dataset file: " + id);
    }
  }
  return data;
}

}  // namespace goalgen
