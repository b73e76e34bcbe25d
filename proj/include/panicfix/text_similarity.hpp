#pragma once

#include <map>
#include <string>
#include <vector>

namespace panicfix {

/// Lowercased word tokens: maximal [a-z0-9_] runs.
std::vector<std::string> tokenize_words(const std::string& text);

/// TF-IDF vector space over a fixed document corpus. Weights use raw term
/// frequency scaled by the smoothed inverse document frequency
/// ln((1 + N) / (1 + df)) + 1, then L2 normalization, so two identical
/// documents always score 1 even when every term is corpus-wide.
class TfIdfModel {
public:
  explicit TfIdfModel(const std::vector<std::string>& corpus);

  std::map<std::string, double> vectorize(const std::string& text) const;
  static double cosine(const std::map<std::string, double>& a,
                       const std::map<std::string, double>& b);

  double similarity(const std::string& a, const std::string& b) const;

private:
  std::map<std::string, double> idf_;
  size_t corpus_size_ = 0;
};

/// Cosine similarity of TF-IDF vectors in [0, 1]. Document frequencies come
/// from {a, b} plus any extra corpus documents the caller supplies (patch
/// ranking passes every candidate interpretation of the run). Empty token
/// sets score 0. Symmetric in a and b.
double similarity(const std::string& a, const std::string& b,
                  const std::vector<std::string>& extra_corpus = {});

}  // namespace panicfix
