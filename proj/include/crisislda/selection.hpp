#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "crisislda/corpus.hpp"
#include "crisislda/lda.hpp"

namespace clda {

struct HeldoutSplit {
  Corpus train;
  Corpus test;  // shares the train vocabulary; unseen words dropped
  double ratio = 0.1;
  std::uint64_t seed = 0;
  std::int64_t unseen_tokens_dropped = 0;
  std::int64_t empty_test_docs_dropped = 0;
};

// Fold-in Gibbs schedule used for held-out evaluation.
struct EvalSchedule {
  int burn_in = 200;
  int sample_count = 20;
  int sample_lag = 5;
};

struct CurvePoint {
  int k = 0;
  double perplexity = 0.0;
  double fit_seconds = 0.0;
  bool failed = false;
  std::string error;
};

struct PerplexityCurve {
  std::vector<CurvePoint> points;  // sorted by k ascending
  int chosen_k = 0;
};

struct KSweepConfig {
  std::vector<int> k_list;
  Hyperparams base;           // base.num_topics ignored; alpha/beta used
  bool rescale_alpha = true;  // alpha = 50/K per grid point
  TrainSchedule schedule;
  EvalSchedule eval;
  double ratio = 0.1;
  double plateau_epsilon = 0.01;
};

// Uniform random document-level split, deterministic in seed. Test documents
// are remapped onto the train vocabulary; words unseen in training are
// dropped and counted.
HeldoutSplit split_heldout(const Corpus& corpus, double ratio, std::uint64_t seed);

// Predictive log-likelihood of one document under a frozen phi: the
// document's topic mix is inferred by Gibbs on its assignments alone, the
// smoothed theta estimates are averaged over post-burn-in samples, and the
// mixture likelihood of each word is scored against that average.
// Empty documents yield nullopt (skipped by perplexity).
std::optional<double> heldout_doc_loglik(const TopicModel& model,
                                         const Document& doc,
                                         const Hyperparams& hyper,
                                         const EvalSchedule& schedule,
                                         std::uint64_t seed);

// exp of the negative per-token predictive log-likelihood over the test set.
double perplexity(const TopicModel& model, const Corpus& test,
                  const Hyperparams& hyper, const EvalSchedule& schedule,
                  std::uint64_t seed);

// Plateau rule: smallest K whose relative improvement over the previous
// successful grid point is below epsilon, else the argmin of perplexity.
int choose_k(const std::vector<CurvePoint>& points, double epsilon);

// One split, one fit+eval per K. chosen_k is the smallest K whose relative
// improvement over the previous grid point drops below plateau_epsilon;
// failing that, the argmin of perplexity. Failed fits are recorded and
// skipped.
PerplexityCurve k_sweep(const Corpus& corpus, const KSweepConfig& config,
                        std::uint64_t seed);

// CSV: k,perplexity,fit_seconds,chosen (chosen=1 on exactly one row).
void export_curve_csv(const PerplexityCurve& curve, const std::filesystem::path& path);

}  // namespace clda
