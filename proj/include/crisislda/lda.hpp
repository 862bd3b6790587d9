#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "crisislda/corpus.hpp"
#include "crisislda/rng.hpp"

namespace clda {

// Dense row-major matrix, just enough for count and probability tables.
template <typename T>
class Mat {
 public:
  Mat() = default;
  Mat(int rows, int cols, T init = T{})
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, init) {}

  T& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  const T& operator()(int r, int c) const {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool operator==(const Mat&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

struct Hyperparams {
  int num_topics = 1;   // K
  double alpha = 1.0;   // symmetric Dirichlet concentration for theta
  double beta = 1.0;    // symmetric Dirichlet concentration for phi
};

struct SamplerState {
  std::vector<std::vector<int>> z;  // per-doc, per-token topic assignment
  Mat<int> topic_word;              // K x W
  std::vector<int> topic_total;     // K
  Mat<int> doc_topic;               // M x K
  std::vector<int> doc_total;       // M
  std::uint64_t rng_seed = 0;
  int sweep_count = 0;

  int num_topics() const { return topic_word.rows(); }
  int vocab_size() const { return topic_word.cols(); }
  int num_docs() const { return doc_topic.rows(); }
};

struct TopicModel {
  Mat<double> phi;    // K x W, row-stochastic
  Mat<double> theta;  // M x K, row-stochastic
  Hyperparams hyper;
  std::vector<std::string> words;  // vocabulary at fit time
};

struct SyntheticTruth {
  Mat<double> phi_true;
  Mat<double> theta_true;
  Corpus corpus;
  std::vector<std::vector<int>> z_true;  // latent topic of every token
};

struct DocLenSpec {
  enum Kind { kFixed, kPoisson };
  Kind kind = kPoisson;
  double mean = 40.0;
};

struct TrainSchedule {
  int burn_in = 500;
  int sample_count = 10;
  int sample_lag = 50;
};

// ---------------------------------------------------------------------------
// Operations.

// Draws phi rows from Dirichlet(beta), per-document theta from
// Dirichlet(alpha), then tokens from the mixture. Returns the realized
// corpus together with the generating distributions.
SyntheticTruth generate_corpus(const Hyperparams& hyper, int vocab_size,
                               int num_docs, const DocLenSpec& len_spec,
                               std::uint64_t seed);

// Uniform random topic per token; count aggregates built to match.
SamplerState init_assignments(const Corpus& corpus, const Hyperparams& hyper,
                              std::uint64_t seed);

// Collapsed Gibbs conditional for a token of word w in document m, with the
// token's own assignment already removed from the counts. Normalized.
std::vector<double> gibbs_conditional(const SamplerState& state, int doc,
                                      int word, const Hyperparams& hyper);

// One full sweep in document-major order: each token is removed, resampled
// from the conditional, and reinserted.
void gibbs_sweep(SamplerState& state, const Corpus& corpus,
                 const Hyperparams& hyper, Rng& rng);

// log P(w, z) from the collapsed joint, in log-gamma form.
double joint_log_prob(const SamplerState& state, const Hyperparams& hyper);

// Smoothed point estimates of phi and theta from the current counts.
TopicModel estimate_model(const SamplerState& state, const Hyperparams& hyper,
                          const Vocabulary& vocab);

// Number of cells where a full recount of z disagrees with the cached
// aggregates. Zero for a healthy state.
int count_discrepancies(const SamplerState& state, const Corpus& corpus);

// ---------------------------------------------------------------------------
// Training.

struct TrainResult {
  TopicModel model;       // average of collected samples
  SamplerState state;     // final chain state
  std::vector<double> trace;  // joint_log_prob after each sweep
};

// Incremental trainer: burn-in sweeps, then samples of the point estimates
// every sample_lag sweeps, averaged into the final model. Supports exact
// checkpoint/resume (a resumed run is bit-identical to an uninterrupted one).
class Trainer {
 public:
  Trainer(const Corpus& corpus, const Hyperparams& hyper,
          const TrainSchedule& schedule, std::uint64_t seed);

  static Trainer resume(const Corpus& corpus, const std::filesystem::path& checkpoint);

  // Runs one sweep; returns false once the schedule is complete.
  bool step();
  bool done() const;
  int sweep() const { return state_.sweep_count; }
  int total_sweeps() const { return total_sweeps_; }

  void save_checkpoint(const std::filesystem::path& path) const;
  TrainResult finish() const;

 private:
  void collect_due_samples();

  const Corpus* corpus_;
  Hyperparams hyper_;
  TrainSchedule schedule_;
  std::uint64_t seed_;
  SamplerState state_;
  Rng rng_;
  std::vector<double> phi_sum_;
  std::vector<double> theta_sum_;
  int samples_taken_ = 0;
  int total_sweeps_ = 0;
  std::vector<double> trace_;
};

TrainResult train(const Corpus& corpus, const Hyperparams& hyper,
                  const TrainSchedule& schedule, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Model directory: phi.csv, theta.csv, hyper.json, trace.csv.

void export_model(const TopicModel& model, const std::vector<double>& trace,
                  std::uint64_t seed, const TrainSchedule& schedule,
                  const std::filesystem::path& dir);

TopicModel load_model(const std::filesystem::path& dir);

}  // namespace clda
