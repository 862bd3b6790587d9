#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "crisislda/corpus.hpp"
#include "crisislda/rng.hpp"

namespace test_helpers {

struct DocSpec {
  std::vector<std::string> tokens;
  std::string user = "u0";
  int day = 0;
};

// Corpus with a lexicographic vocabulary, mirroring the production builder.
inline clda::Corpus make_corpus(const std::vector<DocSpec>& specs,
                                std::string epoch = "2012-10-14") {
  std::map<std::string, std::int64_t> freq;
  for (const auto& spec : specs) {
    for (const auto& t : spec.tokens) ++freq[t];
  }
  clda::Corpus corpus;
  corpus.epoch = std::move(epoch);
  for (const auto& [word, count] : freq) {
    corpus.vocab.id_of.emplace(word, corpus.vocab.size());
    corpus.vocab.words.push_back(word);
    corpus.vocab.count_of.push_back(count);
  }
  for (const auto& spec : specs) {
    clda::Document doc;
    doc.user_id = spec.user;
    doc.day = spec.day;
    for (const auto& t : spec.tokens) doc.tokens.push_back(corpus.vocab.id_of.at(t));
    corpus.docs.push_back(std::move(doc));
  }
  return corpus;
}

// Random corpus over a small synthetic vocabulary.
inline clda::Corpus random_corpus(int num_docs, int vocab_size, int max_len,
                                  std::uint64_t seed, int num_users = 10,
                                  int num_days = 7) {
  clda::Rng rng(seed);
  std::vector<DocSpec> specs;
  for (int m = 0; m < num_docs; ++m) {
    DocSpec spec;
    spec.user = "user" + std::to_string(rng.next_below(num_users));
    spec.day = static_cast<int>(rng.next_below(num_days));
    std::size_t len = 1 + rng.next_below(max_len);
    for (std::size_t i = 0; i < len; ++i) {
      spec.tokens.push_back("tok" + std::to_string(rng.next_below(vocab_size)));
    }
    specs.push_back(std::move(spec));
  }
  return make_corpus(specs);
}

inline double total_variation(const std::vector<double>& a,
                              const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / 2.0;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace test_helpers
