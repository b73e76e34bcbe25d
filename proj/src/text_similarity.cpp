#include "panicfix/text_similarity.hpp"

#include <cctype>
#include <cmath>
#include <set>

namespace panicfix {

std::vector<std::string> tokenize_words(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    unsigned char uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc) || c == '_') {
      cur.push_back(static_cast<char>(std::tolower(uc)));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

TfIdfModel::TfIdfModel(const std::vector<std::string>& corpus) {
  corpus_size_ = corpus.size();
  std::map<std::string, size_t> df;
  for (const std::string& doc : corpus) {
    std::set<std::string> seen;
    for (const std::string& tok : tokenize_words(doc)) seen.insert(tok);
    for (const std::string& tok : seen) ++df[tok];
  }
  for (const auto& [tok, count] : df) {
    idf_[tok] = std::log((1.0 + static_cast<double>(corpus_size_)) /
                         (1.0 + static_cast<double>(count))) +
                1.0;
  }
}

std::map<std::string, double> TfIdfModel::vectorize(const std::string& text) const {
  std::map<std::string, size_t> tf;
  for (const std::string& tok : tokenize_words(text)) ++tf[tok];
  std::map<std::string, double> vec;
  double norm = 0.0;
  for (const auto& [tok, count] : tf) {
    auto it = idf_.find(tok);
    // Out-of-corpus terms get the maximal idf, as if df were zero.
    double idf = it != idf_.end()
                     ? it->second
                     : std::log(1.0 + static_cast<double>(corpus_size_)) + 1.0;
    double w = static_cast<double>(count) * idf;
    vec[tok] = w;
    norm += w * w;
  }
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (auto& [tok, w] : vec) w /= norm;
  }
  return vec;
}

double TfIdfModel::cosine(const std::map<std::string, double>& a,
                          const std::map<std::string, double>& b) {
  double dot = 0.0;
  for (const auto& [tok, w] : a) {
    auto it = b.find(tok);
    if (it != b.end()) dot += w * it->second;
  }
  if (dot > 1.0) dot = 1.0;  // guard fp drift
  if (dot < 0.0) dot = 0.0;
  return dot;
}

double TfIdfModel::similarity(const std::string& a, const std::string& b) const {
  auto va = vectorize(a);
  auto vb = vectorize(b);
  if (va.empty() || vb.empty()) return 0.0;
  return cosine(va, vb);
}

double similarity(const std::string& a, const std::string& b,
                  const std::vector<std::string>& extra_corpus) {
  std::vector<std::string> corpus;
  corpus.reserve(extra_corpus.size() + 2);
  corpus.push_back(a);
  corpus.push_back(b);
  for (const std::string& doc : extra_corpus) corpus.push_back(doc);
  TfIdfModel model(corpus);
  return model.similarity(a, b);
}

}  // namespace panicfix
