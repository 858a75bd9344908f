#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "goalgen/ast.hpp"

namespace goalgen {

// Backoff n-gram scorer over program token streams. Probabilities use the
// stupid-backoff scheme: the raw count ratio when the full n-gram was seen,
// otherwise a discounted score from the next shorter context; unigrams fall
// back to count/total with a floor of 1/(2*total) for unseen tokens.
// Sequences are padded with n-1 start markers and one end marker.
class NgramModel {
 public:
  NgramModel() = default;
  NgramModel(int n, double discount) : n_(n), discount_(discount) {}

  void add_sequence(const std::vector<std::string>& tokens);

  // Backoff score of `token` given the last n-1 entries of `context`.
  double token_score(const std::vector<std::string>& context, const std::string& token) const;
  // Mean natural log of the per-token scores, end marker included.
  double sequence_score(const std::vector<std::string>& tokens) const;

  int n() const { return n_; }
  double discount() const { return discount_; }
  double total_tokens() const { return total_; }
  double gram_count(const std::vector<std::string>& gram) const;

  std::string to_json() const;
  static NgramModel from_json(const std::string& text);

  static constexpr const char* kStart = "<s>";
  static constexpr const char* kEnd = "</s>";

 private:
  std::vector<std::string> padded(const std::vector<std::string>& tokens) const;

  int n_ = 5;
  double discount_ = 0.4;
  double total_ = 0;                     // unigram total, padding included
  std::map<std::string, double> counts_;  // k-grams for k = 1..n, space-joined
};

// One model per section plus one over the whole token stream. Absent
// sections contribute nothing when fitting and score NaN.
class NgramSet {
 public:
  NgramSet() = default;
  NgramSet(int n, double discount);

  static NgramSet fit(const std::vector<GameAst>& corpus, int n = 5, double discount = 0.4);

  void add_game(const GameAst& game);

  enum Part { Full = 0, Setup, Constraints, Terminal, Scoring };
  static constexpr int kParts = 5;
  static std::string_view part_name(int part);

  // Scores in Part order; Setup/Terminal are NaN when the section is absent.
  std::array<double, kParts> scores(const GameAst& game) const;

  const NgramModel& model(int part) const { return models_[part]; }

  std::string to_json() const;
  static NgramSet from_json(const std::string& text);

 private:
  std::array<NgramModel, kParts> models_;
};

}  // namespace goalgen
