#include "crisislda/selection.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>

#include "crisislda/errors.hpp"
#include "crisislda/rng.hpp"

namespace clda {

HeldoutSplit split_heldout(const Corpus& corpus, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ArgumentError("ratio must be in (0,1)");
  const std::size_t M = corpus.docs.size();
  if (M < 2) throw ArgumentError("need at least 2 documents to split");
  std::size_t n_test = static_cast<std::size_t>(
      std::llround(static_cast<double>(M) * ratio));
  if (n_test == 0 || n_test == M) {
    throw ArgumentError("split ratio leaves one side empty");
  }

  // Seeded Fisher-Yates; the first n_test shuffled indices form the test set.
  std::vector<std::size_t> order(M);
  for (std::size_t i = 0; i < M; ++i) order[i] = i;
  Rng rng(seed);
  for (std::size_t i = M - 1; i > 0; --i) {
    std::size_t j = rng.next_below(i + 1);
    std::swap(order[i], order[j]);
  }
  std::vector<bool> in_test(M, false);
  for (std::size_t i = 0; i < n_test; ++i) in_test[order[i]] = true;

  HeldoutSplit split;
  split.ratio = ratio;
  split.seed = seed;
  std::vector<bool> in_train(M);
  for (std::size_t i = 0; i < M; ++i) in_train[i] = !in_test[i];
  split.train = subset_corpus(corpus, in_train);

  // Test docs carry train-vocabulary ids; unseen words are dropped.
  split.test.epoch = corpus.epoch;
  split.test.vocab.words = split.train.vocab.words;
  split.test.vocab.id_of = split.train.vocab.id_of;
  split.test.vocab.count_of.assign(split.train.vocab.words.size(), 0);
  for (std::size_t m = 0; m < M; ++m) {
    if (!in_test[m]) continue;
    const auto& src = corpus.docs[m];
    Document doc;
    doc.user_id = src.user_id;
    doc.day = src.day;
    for (int id : src.tokens) {
      int mapped = split.test.vocab.lookup(corpus.vocab.words[id]);
      if (mapped < 0) {
        ++split.unseen_tokens_dropped;
      } else {
        doc.tokens.push_back(mapped);
        ++split.test.vocab.count_of[mapped];
      }
    }
    if (doc.tokens.empty()) {
      ++split.empty_test_docs_dropped;
    } else {
      split.test.docs.push_back(std::move(doc));
    }
  }
  return split;
}

std::optional<double> heldout_doc_loglik(const TopicModel& model,
                                         const Document& doc,
                                         const Hyperparams& hyper,
                                         const EvalSchedule& schedule,
                                         std::uint64_t seed) {
  const int K = model.phi.rows();
  const std::size_t N = doc.tokens.size();
  if (N == 0) return std::nullopt;

  // Bag-of-words: scoring must not depend on token order, so the fold-in
  // chain always visits tokens in sorted order.
  std::vector<int> tokens = doc.tokens;
  std::sort(tokens.begin(), tokens.end());

  double loglik = 0.0;
  if (K == 1) {
    for (int w : tokens) loglik += std::log(model.phi(0, w));
  } else {
    // Fold-in: Gibbs over this document's assignments with phi frozen.
    Rng rng(seed);
    std::vector<int> z(N);
    std::vector<int> doc_topic(K, 0);
    for (std::size_t i = 0; i < N; ++i) {
      z[i] = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(K)));
      ++doc_topic[z[i]];
    }
    std::vector<double> theta_sum(K, 0.0);
    int samples = 0;
    const int total_sweeps =
        schedule.burn_in + (schedule.sample_count - 1) * schedule.sample_lag;
    std::vector<double> weights(K);
    auto collect = [&](int sweep) {
      while (samples < schedule.sample_count &&
             schedule.burn_in + samples * schedule.sample_lag <= sweep) {
        for (int k = 0; k < K; ++k) {
          theta_sum[k] += (doc_topic[k] + hyper.alpha) /
                          (static_cast<double>(N) + K * hyper.alpha);
        }
        ++samples;
      }
    };
    collect(0);
    for (int sweep = 1; sweep <= total_sweeps; ++sweep) {
      for (std::size_t i = 0; i < N; ++i) {
        const int w = tokens[i];
        --doc_topic[z[i]];
        for (int k = 0; k < K; ++k) {
          weights[k] = model.phi(k, w) * (doc_topic[k] + hyper.alpha);
        }
        z[i] = static_cast<int>(rng.next_discrete(weights));
        ++doc_topic[z[i]];
      }
      collect(sweep);
    }
    for (int w : tokens) {
      double p = 0.0;
      for (int k = 0; k < K; ++k) {
        p += model.phi(k, w) * theta_sum[k] / samples;
      }
      loglik += std::log(p);
    }
  }
  if (!std::isfinite(loglik)) {
    throw NumericalError("non-finite held-out log-likelihood");
  }
  return loglik;
}

double perplexity(const TopicModel& model, const Corpus& test,
                  const Hyperparams& hyper, const EvalSchedule& schedule,
                  std::uint64_t seed) {
  std::vector<double> logliks;
  std::int64_t total_tokens = 0;
  for (const auto& doc : test.docs) {
    // Seed from the document's word multiset, so the score is invariant
    // under permuting documents or tokens.
    std::vector<int> sorted_tokens = doc.tokens;
    std::sort(sorted_tokens.begin(), sorted_tokens.end());
    std::string label = "doc";
    for (int id : sorted_tokens) {
      label += ':';
      label += std::to_string(id);
    }
    auto ll = heldout_doc_loglik(model, doc, hyper, schedule,
                                 Rng::derive_seed(seed, label));
    if (!ll) continue;
    logliks.push_back(*ll);
    total_tokens += static_cast<std::int64_t>(doc.tokens.size());
  }
  if (total_tokens == 0) throw EmptyResultError("no scorable test documents");
  // Canonical summation order keeps the result invariant under permuting
  // the test documents.
  std::sort(logliks.begin(), logliks.end());
  double total_loglik = 0.0;
  for (double ll : logliks) total_loglik += ll;
  return std::exp(-total_loglik / static_cast<double>(total_tokens));
}

PerplexityCurve k_sweep(const Corpus& corpus, const KSweepConfig& config,
                        std::uint64_t seed) {
  if (config.k_list.empty()) throw ArgumentError("k_list must be non-empty");
  if (!(config.plateau_epsilon > 0.0 && config.plateau_epsilon < 1.0)) {
    throw ArgumentError("plateau_epsilon must be in (0,1)");
  }
  if (!std::is_sorted(config.k_list.begin(), config.k_list.end())) {
    throw ArgumentError("k_list must be ascending");
  }

  HeldoutSplit split =
      split_heldout(corpus, config.ratio, Rng::derive_seed(seed, "split"));

  PerplexityCurve curve;
  for (int k : config.k_list) {
    CurvePoint point;
    point.k = k;
    Hyperparams hyper = config.base;
    hyper.num_topics = k;
    if (config.rescale_alpha) hyper.alpha = 50.0 / k;
    auto start = std::chrono::steady_clock::now();
    try {
      TrainResult fit = train(split.train, hyper, config.schedule,
                              Rng::derive_seed(seed, "fit" + std::to_string(k)));
      point.perplexity =
          perplexity(fit.model, split.test, hyper, config.eval,
                     Rng::derive_seed(seed, "eval" + std::to_string(k)));
    } catch (const std::exception& e) {
      point.failed = true;
      point.error = e.what();
      std::cerr << "warning: K=" << k << " failed: " << e.what() << '\n';
    }
    point.fit_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    curve.points.push_back(std::move(point));
  }

  curve.chosen_k = choose_k(curve.points, config.plateau_epsilon);
  return curve;
}

int choose_k(const std::vector<CurvePoint>& points, double epsilon) {
  int chosen = 0;
  double prev = 0.0;
  bool have_prev = false;
  double best = std::numeric_limits<double>::infinity();
  int best_k = 0;
  for (const auto& point : points) {
    if (point.failed) continue;
    if (point.perplexity < best) {
      best = point.perplexity;
      best_k = point.k;
    }
    if (have_prev && chosen == 0 &&
        (prev - point.perplexity) / prev < epsilon) {
      chosen = point.k;
    }
    prev = point.perplexity;
    have_prev = true;
  }
  if (best_k == 0) throw EmptyResultError("every K in the sweep failed");
  return chosen != 0 ? chosen : best_k;
}

void export_curve_csv(const PerplexityCurve& curve, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write: " + path.string());
  out << "k,perplexity,fit_seconds,chosen\n";
  char buf[64];
  for (const auto& point : curve.points) {
    out << point.k << ',';
    if (point.failed) {
      out << "nan";
    } else {
      std::snprintf(buf, sizeof(buf), "%.17g", point.perplexity);
      out << buf;
    }
    std::snprintf(buf, sizeof(buf), "%.3f", point.fit_seconds);
    out << ',' << buf << ','
        << (!point.failed && point.k == curve.chosen_k ? 1 : 0) << '\n';
  }
}

}  // namespace clda
