#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace opengraph::text {

/// Lowercases ASCII letters, deletes ASCII punctuation and splits on
/// whitespace. Non-ASCII bytes pass through untouched.
std::vector<std::string> tokenize(std::string_view text);

std::set<std::string> token_set(std::string_view text);

/// |A ∩ B| / |A ∪ B| over token sets; 1 when both are empty.
double token_jaccard(std::string_view a, std::string_view b);

/// Document frequencies over a caption collection, for smoothed TF-IDF.
class CaptionCorpus {
 public:
  CaptionCorpus() = default;
  explicit CaptionCorpus(const std::vector<std::string>& documents);

  void add(std::string_view document);

  std::size_t size() const { return documents_; }
  std::size_t document_frequency(const std::string& token) const;
  /// ln((1 + N) / (1 + df)) + 1
  double idf(const std::string& token) const;

 private:
  std::size_t documents_ = 0;
  std::map<std::string, std::size_t, std::less<>> df_;
};

/// Cosine of raw-count TF times smoothed IDF vectors.
double tfidf_cosine(std::string_view a, std::string_view b, const CaptionCorpus& corpus);

}  // namespace opengraph::text
