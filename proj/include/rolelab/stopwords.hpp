#pragma once

#include <fstream>
#include <string>
#include <unordered_set>

#include "rolelab/common.hpp"

namespace rolelab {

using StopwordSet = std::unordered_set<std::string>;

// Default English stopword list for span-embedding pooling. This is the
// standard NLTK English list with prepositions and pronouns removed, since
// those carry argument-level signal and stay in the span mean.
inline const StopwordSet& default_stopwords() {
  static const StopwordSet set = {
      "am",      "is",       "are",      "was",       "were",     "be",      "been",     "being",
      "have",    "has",      "had",      "having",    "do",       "does",    "did",      "doing",
      "a",       "an",       "the",      "and",       "but",      "if",      "or",       "because",
      "as",      "until",    "while",    "again",     "further",  "then",    "once",     "here",
      "there",   "when",     "where",    "why",       "how",      "all",     "any",      "both",
      "each",    "few",      "more",     "most",      "other",    "some",    "such",     "no",
      "nor",     "not",      "only",     "own",       "same",     "so",      "than",     "too",
      "very",    "s",        "t",        "can",       "will",     "just",    "don",      "don't",
      "should",  "should've", "now",     "d",         "ll",       "m",       "o",        "re",
      "ve",      "y",        "ain",      "aren",      "aren't",   "couldn",  "couldn't", "didn",
      "didn't",  "doesn",    "doesn't",  "hadn",      "hadn't",   "hasn",    "hasn't",   "haven",
      "haven't", "isn",      "isn't",    "ma",        "mightn",   "mightn't", "mustn",   "mustn't",
      "needn",   "needn't",  "shan",     "shan't",    "shouldn",  "shouldn't", "wasn",   "wasn't",
      "weren",   "weren't",  "won",      "won't",     "wouldn",   "wouldn't"};
  return set;
}

inline StopwordSet load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("load_stopwords: cannot open '" + path + "'");
  StopwordSet set;
  std::string word;
  while (in >> word) set.insert(word);
  return set;
}

}  // namespace rolelab
