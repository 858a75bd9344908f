#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "goalgen/ngram.hpp"
#include "goalgen/parser.hpp"
#include "goalgen/printer.hpp"

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

std::vector<GameAst> load_exemplars() {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(fs::path(GOALGEN_DATA_DIR) / "exemplars"))
    if (entry.path().extension() == ".game") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<GameAst> corpus;
  for (const auto& path : files) corpus.push_back(parse_game(read_file(path)));
  return corpus;
}

// Reference scorer that recounts n-gram occurrences by scanning the stored
// sequences on every query, written independently of the model's tables.
struct BruteForceBackoff {
  int n;
  double discount;
  std::vector<std::vector<std::string>> seqs;

  void add(const std::vector<std::string>& tokens) {
    std::vector<std::string> seq;
    for (int i = 0; i + 1 < n; ++i) seq.emplace_back(NgramModel::kStart);
    seq.insert(seq.end(), tokens.begin(), tokens.end());
    seq.emplace_back(NgramModel::kEnd);
    seqs.push_back(std::move(seq));
  }

  double occurrences(const std::vector<std::string>& gram) const {
    double count = 0;
    for (const auto& seq : seqs) {
      if (seq.size() < gram.size()) continue;
      for (size_t i = 0; i + gram.size() <= seq.size(); ++i)
        if (std::equal(gram.begin(), gram.end(), seq.begin() + i)) ++count;
    }
    return count;
  }

  double total() const {
    double t = 0;
    for (const auto& seq : seqs) t += static_cast<double>(seq.size());
    return t;
  }

  double score(std::vector<std::string> window) const {
    if (window.size() == 1) {
      double c = occurrences(window);
      return c > 0 ? c / total() : 1.0 / (2.0 * total());
    }
    double c = occurrences(window);
    if (c > 0) {
      std::vector<std::string> ctx(window.begin(), window.end() - 1);
      double denom = occurrences(ctx);
      if (denom > 0) return c / denom;
    }
    return discount * score({window.begin() + 1, window.end()});
  }

  double token_score(const std::vector<std::string>& context, const std::string& token) const {
    size_t use = std::min(context.size(), static_cast<size_t>(n - 1));
    std::vector<std::string> window(context.end() - use, context.end());
    window.push_back(token);
    return score(window);
  }

  double sequence_score(const std::vector<std::string>& tokens) const {
    std::vector<std::string> seq;
    for (int i = 0; i + 1 < n; ++i) seq.emplace_back(NgramModel::kStart);
    seq.insert(seq.end(), tokens.begin(), tokens.end());
    seq.emplace_back(NgramModel::kEnd);
    double sum = 0;
    size_t scored = 0;
    for (size_t i = static_cast<size_t>(n - 1); i < seq.size(); ++i) {
      sum += std::log(token_score({seq.begin(), seq.begin() + i}, seq[i]));
      ++scored;
    }
    return sum / static_cast<double>(scored);
  }
};

}  // namespace

TEST_CASE("backoff probabilities on a corpus computed by hand") {
  // corpus: "a b c" and "a b d" with n = 3. Padded, each sequence is
  // <s> <s> a b c|d </s>, so the unigram total is 12.
  NgramModel model(3, 0.4);
  model.add_sequence({"a", "b", "c"});
  model.add_sequence({"a", "b", "d"});

  CHECK(model.total_tokens() == 12.0);
  CHECK(model.gram_count({"a"}) == 2.0);
  CHECK(model.gram_count({"<s>", "<s>", "a"}) == 2.0);
  CHECK(model.gram_count({"a", "b"}) == 2.0);

  // seen trigram: count ratio
  CHECK(model.token_score({"a", "b"}, "c") == doctest::Approx(0.5).epsilon(1e-12));
  // padded context: <s> a b occurs in both sequences
  CHECK(model.token_score({"<s>", "a"}, "b") == doctest::Approx(1.0).epsilon(1e-12));
  // trigram <s> b d unseen, bigram b d seen once out of c(b) = 2
  CHECK(model.token_score({"<s>", "b"}, "d") == doctest::Approx(0.4 * 0.5).epsilon(1e-12));
  // nothing seen at any order: two discounts times the unseen-unigram floor
  CHECK(model.token_score({"b", "c"}, "z") ==
        doctest::Approx(0.4 * 0.4 * (1.0 / 24.0)).epsilon(1e-12));
  // seen unigram after two backoffs
  CHECK(model.token_score({"c", "d"}, "a") ==
        doctest::Approx(0.4 * 0.4 * (2.0 / 12.0)).epsilon(1e-12));

  // positions: a|<s> <s> = 1, b|<s> a = 1, c|a b = 1/2, </s>|b c = 1
  double expected = std::log(0.5) / 4.0;
  CHECK(model.sequence_score({"a", "b", "c"}) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("model scores match a brute-force recount") {
  std::vector<GameAst> corpus = load_exemplars();
  REQUIRE(corpus.size() >= 9);

  NgramModel model(5, 0.4);
  BruteForceBackoff oracle{5, 0.4, {}};
  for (const GameAst& game : corpus) {
    model.add_sequence(tokenize_game(game));
    oracle.add(tokenize_game(game));
  }

  int queries = 0;
  for (const GameAst& game : corpus) {
    std::vector<std::string> tokens = tokenize_game(game);
    CAPTURE(game.name());
    CHECK(model.sequence_score(tokens) ==
          doctest::Approx(oracle.sequence_score(tokens)).epsilon(1e-12));
    ++queries;

    // individual positions, including contexts shorter than n-1
    for (size_t i = 1; i < tokens.size() && queries < 40; i += 7) {
      std::vector<std::string> context(tokens.begin(), tokens.begin() + i);
      CHECK(model.token_score(context, tokens[i]) ==
            doctest::Approx(oracle.token_score(context, tokens[i])).epsilon(1e-12));
      ++queries;
    }
  }
  CHECK(queries >= 20);

  // tokens never seen anywhere
  CHECK(model.token_score({"<var>", "dodgeball"}, "made-up-token") ==
        doctest::Approx(oracle.token_score({"<var>", "dodgeball"}, "made-up-token"))
            .epsilon(1e-12));
}

TEST_CASE("section models score their own section and NaN when absent") {
  std::vector<GameAst> corpus = load_exemplars();
  NgramSet set = NgramSet::fit(corpus, 5, 0.4);

  // exemplars carry neither setup nor terminal sections
  auto scores = set.scores(corpus[0]);
  CHECK(std::isfinite(scores[NgramSet::Full]));
  CHECK(std::isnan(scores[NgramSet::Setup]));
  CHECK(std::isfinite(scores[NgramSet::Constraints]));
  CHECK(std::isnan(scores[NgramSet::Terminal]));
  CHECK(std::isfinite(scores[NgramSet::Scoring]));

  GameAst full = parse_game(R"((define (game ngram-full) (:domain room-v1)
(:setup (exists (?h - hexagonal_bin) (game-conserved (not (broken ?h)))))
(:constraints (and (preference throwAttempt (exists (?b - dodgeball)
  (then
    (once (agent_holds ?b))
    (hold (and (not (agent_holds ?b)) (in_motion ?b)))
    (once (not (in_motion ?b))))))))
(:terminal (>= (total-time) 30))
(:scoring (count throwAttempt))))");
  NgramSet withAll = NgramSet::fit({corpus[0], full}, 5, 0.4);
  auto scores2 = withAll.scores(full);
  for (double s : scores2) CHECK(std::isfinite(s));

  // a game the models were fit on scores higher than a shuffled variant
  CHECK(scores[NgramSet::Full] > -10.0);
}

TEST_CASE("ngram serialization round-trips scores exactly") {
  std::vector<GameAst> corpus = load_exemplars();
  NgramSet set = NgramSet::fit(corpus, 5, 0.4);
  NgramSet back = NgramSet::from_json(set.to_json());
  for (const GameAst& game : corpus) {
    auto a = set.scores(game);
    auto b = back.scores(game);
    for (int p = 0; p < NgramSet::kParts; ++p) {
      if (std::isnan(a[p]))
        CHECK(std::isnan(b[p]));
      else
        CHECK(a[p] == b[p]);
    }
  }
}
