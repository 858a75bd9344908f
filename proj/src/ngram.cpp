#include "goalgen/ngram.hpp"

#include <cmath>
#include <limits>

#include "goalgen/printer.hpp"
#include "json.hpp"

namespace goalgen {

namespace {

std::string join(const std::vector<std::string>& tokens, size_t from, size_t count) {
  std::string out;
  for (size_t i = from; i < from + count; ++i) {
    if (!out.empty()) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace

std::vector<std::string> NgramModel::padded(const std::vector<std::string>& tokens) const {
  std::vector<std::string> out;
  out.reserve(tokens.size() + static_cast<size_t>(n_));
  for (int i = 0; i + 1 < n_; ++i) out.emplace_back(kStart);
  out.insert(out.end(), tokens.begin(), tokens.end());
  out.emplace_back(kEnd);
  return out;
}

void NgramModel::add_sequence(const std::vector<std::string>& tokens) {
  std::vector<std::string> seq = padded(tokens);
  for (size_t i = 0; i < seq.size(); ++i) {
    for (int k = 1; k <= n_; ++k) {
      if (i + 1 < static_cast<size_t>(k)) break;
      counts_[join(seq, i + 1 - k, k)] += 1;
    }
  }
  total_ += static_cast<double>(seq.size());
}

double NgramModel::gram_count(const std::vector<std::string>& gram) const {
  auto it = counts_.find(join(gram, 0, gram.size()));
  return it == counts_.end() ? 0.0 : it->second;
}

double NgramModel::token_score(const std::vector<std::string>& context,
                               const std::string& token) const {
  size_t use = std::min(context.size(), static_cast<size_t>(n_ - 1));
  std::vector<std::string> window(context.end() - use, context.end());
  window.push_back(token);

  double factor = 1.0;
  for (size_t k = window.size(); k >= 2; --k) {
    size_t from = window.size() - k;
    auto it = counts_.find(join(window, from, k));
    if (it != counts_.end() && it->second > 0) {
      auto ctx = counts_.find(join(window, from, k - 1));
      double denom = ctx == counts_.end() ? 0.0 : ctx->second;
      if (denom > 0) return factor * it->second / denom;
    }
    factor *= discount_;
  }
  auto uni = counts_.find(token);
  double c = uni == counts_.end() ? 0.0 : uni->second;
  if (total_ <= 0) return std::numeric_limits<double>::quiet_NaN();
  return factor * (c > 0 ? c / total_ : 1.0 / (2.0 * total_));
}

double NgramModel::sequence_score(const std::vector<std::string>& tokens) const {
  std::vector<std::string> seq = padded(tokens);
  size_t first = static_cast<size_t>(n_ - 1);
  double sum = 0;
  size_t scored = 0;
  for (size_t i = first; i < seq.size(); ++i) {
    std::vector<std::string> context(seq.begin(), seq.begin() + i);
    sum += std::log(token_score(context, seq[i]));
    ++scored;
  }
  return scored == 0 ? std::numeric_limits<double>::quiet_NaN()
                     : sum / static_cast<double>(scored);
}

std::string NgramModel::to_json() const {
  nlohmann::json j;
  j["n"] = n_;
  j["discount"] = discount_;
  j["total"] = total_;
  j["counts"] = counts_;
  return j.dump();
}

NgramModel NgramModel::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  NgramModel m(j.at("n").get<int>(), j.at("discount").get<double>());
  m.total_ = j.at("total").get<double>();
  m.counts_ = j.at("counts").get<std::map<std::string, double>>();
  return m;
}

NgramSet::NgramSet(int n, double discount) {
  for (auto& m : models_) m = NgramModel(n, discount);
}

std::string_view NgramSet::part_name(int part) {
  switch (part) {
    case Full: return "full";
    case Setup: return "setup";
    case Constraints: return "constraints";
    case Terminal: return "terminal";
    default: return "scoring";
  }
}

void NgramSet::add_game(const GameAst& game) {
  models_[Full].add_sequence(tokenize_game(game));
  if (game.has_setup())
    models_[Setup].add_sequence(tokenize_node(*game.setup_section().children[0]));
  models_[Constraints].add_sequence(tokenize_node(game.constraints()));
  if (game.has_terminal())
    models_[Terminal].add_sequence(tokenize_node(*game.terminal_section().children[0]));
  models_[Scoring].add_sequence(tokenize_node(*game.scoring().children[0]));
}

NgramSet NgramSet::fit(const std::vector<GameAst>& corpus, int n, double discount) {
  NgramSet set(n, discount);
  for (const GameAst& game : corpus) set.add_game(game);
  return set;
}

std::array<double, NgramSet::kParts> NgramSet::scores(const GameAst& game) const {
  std::array<double, kParts> out;
  out[Full] = models_[Full].sequence_score(tokenize_game(game));
  out[Setup] = game.has_setup()
                   ? models_[Setup].sequence_score(
                         tokenize_node(*game.setup_section().children[0]))
                   : std::numeric_limits<double>::quiet_NaN();
  out[Constraints] = models_[Constraints].sequence_score(tokenize_node(game.constraints()));
  out[Terminal] = game.has_terminal()
                      ? models_[Terminal].sequence_score(
                            tokenize_node(*game.terminal_section().children[0]))
                      : std::numeric_limits<double>::quiet_NaN();
  out[Scoring] = models_[Scoring].sequence_score(tokenize_node(*game.scoring().children[0]));
  return out;
}

std::string NgramSet::to_json() const {
  nlohmann::json j;
  for (int p = 0; p < kParts; ++p)
    j[std::string(part_name(p))] = nlohmann::json::parse(models_[p].to_json());
  return j.dump();
}

NgramSet NgramSet::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  NgramSet set;
  for (int p = 0; p < kParts; ++p)
    set.models_[p] = NgramModel::from_json(j.at(std::string(part_name(p))).dump());
  return set;
}

}  // namespace goalgen
