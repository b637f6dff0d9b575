#include "opengraph/text.hpp"

#include "support.hpp"

#include <cmath>
#include <map>

using namespace opengraph::text;

namespace {

/// Hand-rolled smoothed TF-IDF cosine, independent of CaptionCorpus.
double tfidf_oracle(const std::vector<std::string>& a, const std::vector<std::string>& b,
                    const std::vector<std::vector<std::string>>& docs) {
  auto idf = [&](const std::string& t) {
    double df = 0;
    for (const auto& d : docs) {
      for (const auto& w : d) {
        if (w == t) {
          df += 1;
          break;
        }
      }
    }
    return std::log((1.0 + docs.size()) / (1.0 + df)) + 1.0;
  };
  std::map<std::string, double> va, vb;
  for (const auto& t : a) va[t] += 1;
  for (const auto& t : b) vb[t] += 1;
  for (auto& [t, v] : va) v *= idf(t);
  for (auto& [t, v] : vb) v *= idf(t);
  double dot = 0, na = 0, nb = 0;
  for (auto& [t, v] : va) {
    na += v * v;
    if (vb.count(t)) dot += v * vb[t];
  }
  for (auto& [t, v] : vb) nb += v * v;
  return dot / std::sqrt(na * nb);
}

}  // namespace

TEST_CASE("tokenize") {
  CHECK(tokenize("A Red-car,  parked!") == std::vector<std::string>{"a", "redcar", "parked"});
  CHECK(tokenize("  ").empty());
  CHECK(tokenize("caf\xc3\xa9 Bar") == std::vector<std::string>{"caf\xc3\xa9", "bar"});
  CHECK(token_set("the the car") == std::set<std::string>{"the", "car"});
}

TEST_CASE("token_jaccard") {
  CHECK(token_jaccard("a car", "a red car parked") == 0.5);
  CHECK(token_jaccard("a tree", "a mailbox") == doctest::Approx(1.0 / 3));
  CHECK(token_jaccard("", "") == 1.0);
  CHECK(token_jaccard("x", "") == 0.0);
}

TEST_CASE("smoothed tf-idf") {
  const CaptionCorpus corpus({"a red car", "a blue car"});
  CHECK(corpus.size() == 2);
  CHECK(corpus.document_frequency("a") == 2);
  CHECK(corpus.document_frequency("red") == 1);
  CHECK(corpus.document_frequency("green") == 0);
  CHECK(corpus.idf("a") == doctest::Approx(1.0));
  CHECK(corpus.idf("red") == doctest::Approx(std::log(1.5) + 1));

  const double s = tfidf_cosine("a red car", "a blue car", corpus);
  CHECK(std::abs(s - 0.5033) <= 1e-3);
  CHECK(s == doctest::Approx(tfidf_oracle({"a", "red", "car"}, {"a", "blue", "car"},
                                          {{"a", "red", "car"}, {"a", "blue", "car"}}))
                 .epsilon(1e-12));
  CHECK(tfidf_cosine("a red car", "a red car", corpus) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(tfidf_cosine("red", "blue", corpus) == 0.0);

  CaptionCorpus bigger;
  const std::vector<std::string> docs{"the tall tree", "a tall street lamp", "a red car near the tree",
                                      "car car car", "lamp"};
  std::vector<std::vector<std::string>> tokenized;
  for (const auto& d : docs) {
    bigger.add(d);
    tokenized.push_back(tokenize(d));
  }
  for (std::size_t i = 0; i < docs.size(); ++i) {
    for (std::size_t j = 0; j < docs.size(); ++j) {
      CHECK(tfidf_cosine(docs[i], docs[j], bigger) ==
            doctest::Approx(tfidf_oracle(tokenized[i], tokenized[j], tokenized)).epsilon(1e-12));
    }
  }
}
