#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "crisislda/corpus.hpp"
#include "crisislda/lda.hpp"

namespace clda {

struct TopicReport {
  int topic_id = 0;
  std::vector<std::pair<std::string, double>> top_words;  // descending prob
  double mass = 0.0;  // fraction of corpus tokens attributed to the topic
};

struct PrevalenceSeries {
  int topic_id = 0;
  std::vector<int> days;      // day bins with at least one token
  std::vector<double> weight; // per-day token-weighted mean theta
};

// The n largest phi entries of topic k, lexicographic tie-break.
TopicReport top_words(const TopicModel& model, int k, int n);

// Token-weighted topic mass: sum_m theta[m][k] * N_m / total tokens.
std::vector<double> topic_masses(const TopicModel& model, const Corpus& corpus);

// Per-day topic weights; weights across topics sum to 1 on every day.
std::vector<PrevalenceSeries> topic_prevalence(const TopicModel& model,
                                               const Corpus& corpus);

// Writes topics.json, prevalence.csv, wordcloud.csv, heatmap.csv into
// out_dir; returns the written paths.
std::vector<std::filesystem::path> export_reports(const TopicModel& model,
                                                  const Corpus& corpus,
                                                  const std::filesystem::path& out_dir,
                                                  int n_words);

}  // namespace clda
