#include "opengraph/text.hpp"

#include <cctype>
#include <cmath>

namespace opengraph::text {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 128 && std::isspace(c)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else if (c < 128 && std::ispunct(c)) {
      continue;
    } else {
      current += static_cast<char>(c < 128 ? std::tolower(c) : c);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::set<std::string> token_set(std::string_view text) {
  const auto tokens = tokenize(text);
  return {tokens.begin(), tokens.end()};
}

double token_jaccard(std::string_view a, std::string_view b) {
  const auto sa = token_set(a);
  const auto sb = token_set(b);
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t common = 0;
  for (const auto& t : sa) common += sb.count(t);
  return static_cast<double>(common) / static_cast<double>(sa.size() + sb.size() - common);
}

CaptionCorpus::CaptionCorpus(const std::vector<std::string>& documents) {
  for (const auto& d : documents) add(d);
}

void CaptionCorpus::add(std::string_view document) {
  ++documents_;
  for (const auto& t : token_set(document)) ++df_[t];
}

std::size_t CaptionCorpus::document_frequency(const std::string& token) const {
  const auto it = df_.find(token);
  return it == df_.end() ? 0 : it->second;
}

double CaptionCorpus::idf(const std::string& token) const {
  return std::log((1.0 + static_cast<double>(documents_)) /
                  (1.0 + static_cast<double>(document_frequency(token)))) +
         1.0;
}

namespace {

std::map<std::string, double> tfidf_vector(std::string_view text, const CaptionCorpus& corpus) {
  std::map<std::string, double> v;
  for (auto& t : tokenize(text)) v[t] += 1.0;
  for (auto& [t, w] : v) w *= corpus.idf(t);
  return v;
}

}  // namespace

double tfidf_cosine(std::string_view a, std::string_view b, const CaptionCorpus& corpus) {
  const auto va = tfidf_vector(a, corpus);
  const auto vb = tfidf_vector(b, corpus);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [t, w] : va) {
    na += w * w;
    if (auto it = vb.find(t); it != vb.end()) dot += w * it->second;
  }
  for (const auto& [t, w] : vb) nb += w * w;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::min(1.0, dot / std::sqrt(na * nb));
}

}  // namespace opengraph::text
