#include "crisislda/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>

#include "crisislda/errors.hpp"
#include "json.hpp"

namespace clda {

TopicReport top_words(const TopicModel& model, int k, int n) {
  if (k < 0 || k >= model.phi.rows()) throw ArgumentError("topic index out of range");
  if (n < 1) throw ArgumentError("n must be >= 1");
  const int W = model.phi.cols();
  std::vector<int> order(W);
  for (int w = 0; w < W; ++w) order[w] = w;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (model.phi(k, a) != model.phi(k, b)) return model.phi(k, a) > model.phi(k, b);
    return model.words[a] < model.words[b];
  });
  TopicReport report;
  report.topic_id = k;
  for (int i = 0; i < std::min(n, W); ++i) {
    report.top_words.emplace_back(model.words[order[i]], model.phi(k, order[i]));
  }
  return report;
}

std::vector<double> topic_masses(const TopicModel& model, const Corpus& corpus) {
  if (model.theta.rows() != static_cast<int>(corpus.docs.size())) {
    throw ArgumentError("model and corpus document counts differ");
  }
  const int K = model.theta.cols();
  std::vector<double> mass(K, 0.0);
  double total = 0.0;
  for (int m = 0; m < model.theta.rows(); ++m) {
    const double n_m = static_cast<double>(corpus.docs[m].tokens.size());
    for (int k = 0; k < K; ++k) mass[k] += model.theta(m, k) * n_m;
    total += n_m;
  }
  for (double& x : mass) x /= total;
  return mass;
}

std::vector<PrevalenceSeries> topic_prevalence(const TopicModel& model,
                                               const Corpus& corpus) {
  if (model.theta.rows() != static_cast<int>(corpus.docs.size())) {
    throw ArgumentError("model and corpus document counts differ");
  }
  const int K = model.theta.cols();
  std::map<int, std::pair<std::vector<double>, double>> by_day;  // day -> (sums, tokens)
  for (int m = 0; m < model.theta.rows(); ++m) {
    const auto& doc = corpus.docs[m];
    const double n_m = static_cast<double>(doc.tokens.size());
    if (n_m == 0.0) continue;
    auto& [sums, tokens] = by_day[doc.day];
    if (sums.empty()) sums.assign(K, 0.0);
    for (int k = 0; k < K; ++k) sums[k] += model.theta(m, k) * n_m;
    tokens += n_m;
  }
  std::vector<PrevalenceSeries> series(K);
  for (int k = 0; k < K; ++k) series[k].topic_id = k;
  for (const auto& [day, entry] : by_day) {
    for (int k = 0; k < K; ++k) {
      series[k].days.push_back(day);
      series[k].weight.push_back(entry.first[k] / entry.second);
    }
  }
  return series;
}

std::vector<std::filesystem::path> export_reports(const TopicModel& model,
                                                  const Corpus& corpus,
                                                  const std::filesystem::path& out_dir,
                                                  int n_words) {
  if (n_words < 1) throw ArgumentError("n_words must be >= 1");
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> manifest;
  const int K = model.phi.rows();

  {
    auto mass = topic_masses(model, corpus);
    nlohmann::json topics = nlohmann::json::array();
    for (int k = 0; k < K; ++k) {
      TopicReport report = top_words(model, k, n_words);
      nlohmann::json words = nlohmann::json::array();
      for (const auto& [word, p] : report.top_words) {
        words.push_back({{"word", word}, {"p", p}});
      }
      topics.push_back(
          {{"topic_id", k}, {"mass", mass[k]}, {"top_words", std::move(words)}});
    }
    auto path = out_dir / "topics.json";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << topics.dump(2) << '\n';
    manifest.push_back(path);
  }

  {
    auto series = topic_prevalence(model, corpus);
    auto path = out_dir / "prevalence.csv";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "date";
    for (int k = 0; k < K; ++k) out << ",topic_" << k;
    out << '\n';
    const std::int64_t epoch_days = parse_iso_date(corpus.epoch);
    char buf[32];
    for (std::size_t d = 0; d < series[0].days.size(); ++d) {
      out << format_iso_date(epoch_days + series[0].days[d]);
      // Round to micro-units, then push the residual into the largest cell
      // so the printed row still sums to exactly 1.
      std::vector<long> micro(K);
      long row_sum = 0;
      int largest = 0;
      for (int k = 0; k < K; ++k) {
        micro[k] = std::lround(series[k].weight[d] * 1e6);
        row_sum += micro[k];
        if (series[k].weight[d] > series[largest].weight[d]) largest = k;
      }
      micro[largest] += 1000000 - row_sum;
      for (int k = 0; k < K; ++k) {
        std::snprintf(buf, sizeof(buf), "%.6f", static_cast<double>(micro[k]) / 1e6);
        out << ',' << buf;
      }
      out << '\n';
    }
    manifest.push_back(path);
  }

  {
    auto path = out_dir / "wordcloud.csv";
    export_wordcloud_csv(wordcloud_data(corpus, 50), path);
    manifest.push_back(path);
  }

  {
    auto cloud = wordcloud_data(corpus, 50);
    std::vector<std::string> words;
    words.reserve(cloud.size());
    for (const auto& [word, count] : cloud) words.push_back(word);
    auto path = out_dir / "heatmap.csv";
    export_temporal_csv(temporal_word_matrix(corpus, words), corpus.epoch, path);
    manifest.push_back(path);
  }

  return manifest;
}

}  // namespace clda
