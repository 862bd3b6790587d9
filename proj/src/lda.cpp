#include "crisislda/lda.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

#include "crisislda/errors.hpp"
#include "json.hpp"

namespace clda {

namespace {

std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void check_hyper(const Hyperparams& hyper) {
  if (hyper.num_topics < 1) throw ArgumentError("K must be >= 1");
  if (!(hyper.alpha > 0.0)) throw ArgumentError("alpha must be > 0");
  if (!(hyper.beta > 0.0)) throw ArgumentError("beta must be > 0");
}

}  // namespace

// ---------------------------------------------------------------------------
// Generation.

SyntheticTruth generate_corpus(const Hyperparams& hyper, int vocab_size,
                               int num_docs, const DocLenSpec& len_spec,
                               std::uint64_t seed) {
  check_hyper(hyper);
  if (vocab_size < 1 || num_docs < 1) {
    throw ArgumentError("vocab_size and num_docs must be positive");
  }
  if (len_spec.mean < 1.0) throw ArgumentError("mean document length must be >= 1");
  const int K = hyper.num_topics;
  if (vocab_size < K) {
    std::cerr << "warning: W < K (" << vocab_size << " < " << K
              << "); topics cannot all be distinct\n";
  }

  SyntheticTruth truth;
  truth.phi_true = Mat<double>(K, vocab_size);
  truth.theta_true = Mat<double>(num_docs, K);

  Rng phi_rng(Rng::derive_seed(seed, "phi"));
  for (int k = 0; k < K; ++k) {
    std::span<double> row(&truth.phi_true(k, 0), static_cast<std::size_t>(vocab_size));
    phi_rng.next_dirichlet(hyper.beta, row);
  }

  // Zero-padded names keep lexicographic vocabulary order aligned with ids.
  int width = 1;
  for (int w = vocab_size - 1; w >= 10; w /= 10) ++width;
  Corpus& corpus = truth.corpus;
  corpus.epoch = "2012-10-14";
  for (int w = 0; w < vocab_size; ++w) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "w%0*d", width, w);
    corpus.vocab.id_of.emplace(buf, w);
    corpus.vocab.words.emplace_back(buf);
    corpus.vocab.count_of.push_back(0);
  }

  Rng theta_rng(Rng::derive_seed(seed, "theta"));
  Rng token_rng(Rng::derive_seed(seed, "tokens"));
  corpus.docs.reserve(num_docs);
  for (int m = 0; m < num_docs; ++m) {
    std::span<double> theta_row(&truth.theta_true(m, 0), static_cast<std::size_t>(K));
    theta_rng.next_dirichlet(hyper.alpha, theta_row);

    std::size_t len = len_spec.kind == DocLenSpec::kFixed
                          ? static_cast<std::size_t>(len_spec.mean)
                          : std::max<std::uint64_t>(1, token_rng.next_poisson(len_spec.mean));
    Document doc;
    doc.user_id = "u" + std::to_string(m);
    doc.day = 0;
    doc.tokens.reserve(len);
    std::vector<int> z_doc;
    z_doc.reserve(len);
    for (std::size_t i = 0; i < len; ++i) {
      int topic = static_cast<int>(token_rng.next_discrete(theta_row));
      std::span<const double> phi_row(&truth.phi_true(topic, 0),
                                      static_cast<std::size_t>(vocab_size));
      int word = static_cast<int>(token_rng.next_discrete(phi_row));
      doc.tokens.push_back(word);
      z_doc.push_back(topic);
      ++corpus.vocab.count_of[word];
    }
    corpus.docs.push_back(std::move(doc));
    truth.z_true.push_back(std::move(z_doc));
  }
  return truth;
}

// ---------------------------------------------------------------------------
// Sampler.

SamplerState init_assignments(const Corpus& corpus, const Hyperparams& hyper,
                              std::uint64_t seed) {
  check_hyper(hyper);
  if (corpus.docs.empty()) throw EmptyResultError("corpus is empty");
  const int K = hyper.num_topics;
  const int W = corpus.vocab.size();
  const int M = static_cast<int>(corpus.docs.size());

  SamplerState state;
  state.rng_seed = seed;
  state.topic_word = Mat<int>(K, W);
  state.topic_total.assign(K, 0);
  state.doc_topic = Mat<int>(M, K);
  state.doc_total.assign(M, 0);
  state.z.resize(M);

  Rng rng(seed);
  for (int m = 0; m < M; ++m) {
    const auto& tokens = corpus.docs[m].tokens;
    state.z[m].resize(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      int k = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(K)));
      state.z[m][i] = k;
      ++state.topic_word(k, tokens[i]);
      ++state.topic_total[k];
      ++state.doc_topic(m, k);
      ++state.doc_total[m];
    }
  }
  return state;
}

std::vector<double> gibbs_conditional(const SamplerState& state, int doc,
                                      int word, const Hyperparams& hyper) {
  const int K = state.num_topics();
  const int W = state.vocab_size();
  std::vector<double> p(K);
  double total = 0.0;
  for (int k = 0; k < K; ++k) {
    int nkw = state.topic_word(k, word);
    int nk = state.topic_total[k];
    int nmk = state.doc_topic(doc, k);
    int nm = state.doc_total[doc];
    if (nkw < 0 || nk < 0 || nmk < 0 || nm < 0) {
      throw StateCorruptionError("negative count in sampler state");
    }
    p[k] = (nkw + hyper.beta) / (nk + W * hyper.beta) *
           (nmk + hyper.alpha) / (nm + K * hyper.alpha);
    total += p[k];
  }
  for (double& x : p) x /= total;
  return p;
}

void gibbs_sweep(SamplerState& state, const Corpus& corpus,
                 const Hyperparams& hyper, Rng& rng) {
  const int K = hyper.num_topics;
  const int W = state.vocab_size();
  const double w_beta = W * hyper.beta;
  const double k_alpha = K * hyper.alpha;
  std::vector<double> weights(K);

  for (int m = 0; m < state.num_docs(); ++m) {
    const auto& tokens = corpus.docs[m].tokens;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const int w = tokens[i];
      const int old_k = state.z[m][i];
      if (--state.topic_word(old_k, w) < 0 || --state.topic_total[old_k] < 0 ||
          --state.doc_topic(m, old_k) < 0 || --state.doc_total[m] < 0) {
        throw StateCorruptionError("count went negative during sweep");
      }
      const double nm = state.doc_total[m] + k_alpha;
      for (int k = 0; k < K; ++k) {
        weights[k] = (state.topic_word(k, w) + hyper.beta) /
                     (state.topic_total[k] + w_beta) *
                     (state.doc_topic(m, k) + hyper.alpha) / nm;
      }
      const int new_k = static_cast<int>(rng.next_discrete(weights));
      state.z[m][i] = new_k;
      ++state.topic_word(new_k, w);
      ++state.topic_total[new_k];
      ++state.doc_topic(m, new_k);
      ++state.doc_total[m];
    }
  }
  ++state.sweep_count;
}

double joint_log_prob(const SamplerState& state, const Hyperparams& hyper) {
  const int K = state.num_topics();
  const int W = state.vocab_size();
  const int M = state.num_docs();
  const double alpha = hyper.alpha;
  const double beta = hyper.beta;

  double logp = K * (std::lgamma(W * beta) - W * std::lgamma(beta));
  for (int k = 0; k < K; ++k) {
    for (int w = 0; w < W; ++w) logp += std::lgamma(state.topic_word(k, w) + beta);
    logp -= std::lgamma(state.topic_total[k] + W * beta);
  }
  logp += M * (std::lgamma(K * alpha) - K * std::lgamma(alpha));
  for (int m = 0; m < M; ++m) {
    for (int k = 0; k < K; ++k) logp += std::lgamma(state.doc_topic(m, k) + alpha);
    logp -= std::lgamma(state.doc_total[m] + K * alpha);
  }
  return logp;
}

TopicModel estimate_model(const SamplerState& state, const Hyperparams& hyper,
                          const Vocabulary& vocab) {
  const int K = state.num_topics();
  const int W = state.vocab_size();
  const int M = state.num_docs();

  TopicModel model;
  model.hyper = hyper;
  model.words = vocab.words;
  model.phi = Mat<double>(K, W);
  model.theta = Mat<double>(M, K);
  for (int k = 0; k < K; ++k) {
    const double denom = state.topic_total[k] + W * hyper.beta;
    for (int w = 0; w < W; ++w) {
      model.phi(k, w) = (state.topic_word(k, w) + hyper.beta) / denom;
    }
  }
  for (int m = 0; m < M; ++m) {
    const double denom = state.doc_total[m] + K * hyper.alpha;
    for (int k = 0; k < K; ++k) {
      model.theta(m, k) = (state.doc_topic(m, k) + hyper.alpha) / denom;
    }
  }
  return model;
}

int count_discrepancies(const SamplerState& state, const Corpus& corpus) {
  const int K = state.num_topics();
  const int W = state.vocab_size();
  const int M = state.num_docs();
  Mat<int> kw(K, W);
  std::vector<int> kt(K, 0);
  Mat<int> mk(M, K);
  std::vector<int> mt(M, 0);
  for (int m = 0; m < M; ++m) {
    for (std::size_t i = 0; i < state.z[m].size(); ++i) {
      int k = state.z[m][i];
      int w = corpus.docs[m].tokens[i];
      ++kw(k, w);
      ++kt[k];
      ++mk(m, k);
      ++mt[m];
    }
  }
  int bad = 0;
  for (int k = 0; k < K; ++k) {
    if (kt[k] != state.topic_total[k]) ++bad;
    for (int w = 0; w < W; ++w) {
      if (kw(k, w) != state.topic_word(k, w)) ++bad;
    }
  }
  for (int m = 0; m < M; ++m) {
    if (mt[m] != state.doc_total[m]) ++bad;
    for (int k = 0; k < K; ++k) {
      if (mk(m, k) != state.doc_topic(m, k)) ++bad;
    }
  }
  return bad;
}

// ---------------------------------------------------------------------------
// Trainer.

Trainer::Trainer(const Corpus& corpus, const Hyperparams& hyper,
                 const TrainSchedule& schedule, std::uint64_t seed)
    : corpus_(&corpus),
      hyper_(hyper),
      schedule_(schedule),
      seed_(seed),
      state_(init_assignments(corpus, hyper, Rng::derive_seed(seed, "init"))),
      rng_(Rng::derive_seed(seed, "sweep")) {
  if (schedule.burn_in < 0 || schedule.sample_lag < 0) {
    throw ArgumentError("schedule values must be non-negative");
  }
  if (schedule.sample_count < 1) throw ArgumentError("sample_count must be >= 1");
  total_sweeps_ = schedule.burn_in + (schedule.sample_count - 1) * schedule.sample_lag;
  phi_sum_.assign(static_cast<std::size_t>(hyper.num_topics) * corpus.vocab.size(), 0.0);
  theta_sum_.assign(corpus.docs.size() * static_cast<std::size_t>(hyper.num_topics), 0.0);
  collect_due_samples();
}

bool Trainer::done() const { return state_.sweep_count >= total_sweeps_; }

void Trainer::collect_due_samples() {
  while (samples_taken_ < schedule_.sample_count &&
         schedule_.burn_in + samples_taken_ * schedule_.sample_lag <=
             state_.sweep_count) {
    TopicModel sample = estimate_model(state_, hyper_, corpus_->vocab);
    for (std::size_t i = 0; i < phi_sum_.size(); ++i) {
      phi_sum_[i] += sample.phi.data()[i];
    }
    for (std::size_t i = 0; i < theta_sum_.size(); ++i) {
      theta_sum_[i] += sample.theta.data()[i];
    }
    ++samples_taken_;
  }
}

bool Trainer::step() {
  if (done()) return false;
  gibbs_sweep(state_, *corpus_, hyper_, rng_);
  double logp = joint_log_prob(state_, hyper_);
  if (!std::isfinite(logp)) throw NumericalError("non-finite joint log probability");
  trace_.push_back(logp);
  collect_due_samples();
  return !done();
}

TrainResult Trainer::finish() const {
  if (!done()) throw ArgumentError("training schedule not complete");
  TrainResult result;
  result.model.hyper = hyper_;
  result.model.words = corpus_->vocab.words;
  result.model.phi = Mat<double>(hyper_.num_topics, corpus_->vocab.size());
  result.model.theta =
      Mat<double>(static_cast<int>(corpus_->docs.size()), hyper_.num_topics);
  const double n = samples_taken_;
  for (std::size_t i = 0; i < phi_sum_.size(); ++i) {
    result.model.phi.data()[i] = phi_sum_[i] / n;
  }
  for (std::size_t i = 0; i < theta_sum_.size(); ++i) {
    result.model.theta.data()[i] = theta_sum_[i] / n;
  }
  result.state = state_;
  result.trace = trace_;
  return result;
}

TrainResult train(const Corpus& corpus, const Hyperparams& hyper,
                  const TrainSchedule& schedule, std::uint64_t seed) {
  Trainer trainer(corpus, hyper, schedule, seed);
  while (trainer.step()) {
  }
  return trainer.finish();
}

// ---------------------------------------------------------------------------
// Checkpointing. Binary layout: header ints/doubles, raw count-free payload
// (z, accumulators, trace), then the RNG stream state as text.

namespace {

constexpr char kCkptMagic[8] = {'C', 'L', 'D', 'A', 'C', 'K', '1', '\0'};

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
}

template <typename T>
void write_vec(std::ostream& out, const std::vector<T>& v) {
  write_pod(out, static_cast<std::uint64_t>(v.size()));
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <typename T>
void read_vec(std::istream& in, std::vector<T>& v) {
  std::uint64_t n = 0;
  read_pod(in, n);
  v.resize(n);
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(n * sizeof(T)));
}

}  // namespace

void Trainer::save_checkpoint(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  out.write(kCkptMagic, sizeof(kCkptMagic));
  write_pod(out, seed_);
  write_pod(out, hyper_.num_topics);
  write_pod(out, hyper_.alpha);
  write_pod(out, hyper_.beta);
  write_pod(out, schedule_.burn_in);
  write_pod(out, schedule_.sample_count);
  write_pod(out, schedule_.sample_lag);
  write_pod(out, state_.sweep_count);
  write_pod(out, samples_taken_);
  std::vector<int> flat_z;
  for (const auto& doc : state_.z) flat_z.insert(flat_z.end(), doc.begin(), doc.end());
  write_vec(out, flat_z);
  write_vec(out, phi_sum_);
  write_vec(out, theta_sum_);
  write_vec(out, trace_);
  std::ostringstream rng_text;
  rng_text << rng_;
  std::string rng_str = rng_text.str();
  write_pod(out, static_cast<std::uint64_t>(rng_str.size()));
  out.write(rng_str.data(), static_cast<std::streamsize>(rng_str.size()));
  if (!out) throw IoError("short write on checkpoint: " + path.string());
}

Trainer Trainer::resume(const Corpus& corpus, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (std::memcmp(magic, kCkptMagic, sizeof(magic)) != 0) {
    throw IoError("not a checkpoint file: " + path.string());
  }
  std::uint64_t seed;
  Hyperparams hyper;
  TrainSchedule schedule;
  read_pod(in, seed);
  read_pod(in, hyper.num_topics);
  read_pod(in, hyper.alpha);
  read_pod(in, hyper.beta);
  read_pod(in, schedule.burn_in);
  read_pod(in, schedule.sample_count);
  read_pod(in, schedule.sample_lag);

  Trainer trainer(corpus, hyper, schedule, seed);
  int sweep_count, samples_taken;
  read_pod(in, sweep_count);
  read_pod(in, samples_taken);
  std::vector<int> flat_z;
  read_vec(in, flat_z);
  read_vec(in, trainer.phi_sum_);
  read_vec(in, trainer.theta_sum_);
  read_vec(in, trainer.trace_);
  std::uint64_t rng_len = 0;
  read_pod(in, rng_len);
  std::string rng_str(rng_len, '\0');
  in.read(rng_str.data(), static_cast<std::streamsize>(rng_len));
  if (!in) throw IoError("truncated checkpoint: " + path.string());

  if (flat_z.size() != static_cast<std::size_t>(corpus.total_tokens())) {
    throw IoError("checkpoint does not match corpus shape");
  }
  // Rebuild the sampler state from z.
  SamplerState& st = trainer.state_;
  st = SamplerState{};
  st.rng_seed = Rng::derive_seed(seed, "init");
  st.sweep_count = sweep_count;
  const int K = hyper.num_topics;
  const int W = corpus.vocab.size();
  const int M = static_cast<int>(corpus.docs.size());
  st.topic_word = Mat<int>(K, W);
  st.topic_total.assign(K, 0);
  st.doc_topic = Mat<int>(M, K);
  st.doc_total.assign(M, 0);
  st.z.resize(M);
  std::size_t pos = 0;
  for (int m = 0; m < M; ++m) {
    const auto& tokens = corpus.docs[m].tokens;
    st.z[m].resize(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      int k = flat_z[pos++];
      if (k < 0 || k >= K) throw IoError("invalid topic id in checkpoint");
      st.z[m][i] = k;
      ++st.topic_word(k, tokens[i]);
      ++st.topic_total[k];
      ++st.doc_topic(m, k);
      ++st.doc_total[m];
    }
  }
  trainer.samples_taken_ = samples_taken;
  std::istringstream rng_in(rng_str);
  rng_in >> trainer.rng_;
  return trainer;
}

// ---------------------------------------------------------------------------
// Model directory.

void export_model(const TopicModel& model, const std::vector<double>& trace,
                  std::uint64_t seed, const TrainSchedule& schedule,
                  const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "phi.csv", std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / "phi.csv").string());
    for (std::size_t w = 0; w < model.words.size(); ++w) {
      if (w) out << ',';
      out << model.words[w];
    }
    out << '\n';
    for (int k = 0; k < model.phi.rows(); ++k) {
      for (int w = 0; w < model.phi.cols(); ++w) {
        if (w) out << ',';
        out << fmt_double(model.phi(k, w));
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(dir / "theta.csv", std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / "theta.csv").string());
    for (int k = 0; k < model.theta.cols(); ++k) {
      if (k) out << ',';
      out << "topic_" << k;
    }
    out << '\n';
    for (int m = 0; m < model.theta.rows(); ++m) {
      for (int k = 0; k < model.theta.cols(); ++k) {
        if (k) out << ',';
        out << fmt_double(model.theta(m, k));
      }
      out << '\n';
    }
  }
  {
    nlohmann::json hj = {
        {"k", model.hyper.num_topics},
        {"alpha", model.hyper.alpha},
        {"beta", model.hyper.beta},
        {"seed", seed},
        {"schedule",
         {{"burn_in", schedule.burn_in},
          {"sample_count", schedule.sample_count},
          {"sample_lag", schedule.sample_lag}}},
    };
    std::ofstream out(dir / "hyper.json", std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / "hyper.json").string());
    out << hj.dump(2) << '\n';
  }
  {
    std::ofstream out(dir / "trace.csv", std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / "trace.csv").string());
    out << "sweep,joint_log_prob\n";
    for (std::size_t i = 0; i < trace.size(); ++i) {
      out << (i + 1) << ',' << fmt_double(trace[i]) << '\n';
    }
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ls(line);
  while (std::getline(ls, cell, ',')) cells.push_back(cell);
  return cells;
}

}  // namespace

TopicModel load_model(const std::filesystem::path& dir) {
  TopicModel model;
  {
    std::ifstream in(dir / "hyper.json");
    if (!in) throw IoError("cannot open model: " + (dir / "hyper.json").string());
    nlohmann::json hj = nlohmann::json::parse(in, nullptr, false);
    if (hj.is_discarded()) throw IoError("corrupt hyper.json in " + dir.string());
    model.hyper.num_topics = hj.at("k").get<int>();
    model.hyper.alpha = hj.at("alpha").get<double>();
    model.hyper.beta = hj.at("beta").get<double>();
  }
  {
    std::ifstream in(dir / "phi.csv");
    if (!in) throw IoError("cannot open " + (dir / "phi.csv").string());
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty phi.csv");
    model.words = split_csv_line(line);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto cells = split_csv_line(line);
      if (cells.size() != model.words.size()) throw IoError("ragged phi.csv row");
      std::vector<double> row;
      row.reserve(cells.size());
      for (const auto& c : cells) row.push_back(std::stod(c));
      rows.push_back(std::move(row));
    }
    model.phi = Mat<double>(static_cast<int>(rows.size()),
                            static_cast<int>(model.words.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      for (std::size_t w = 0; w < rows[k].size(); ++w) {
        model.phi(static_cast<int>(k), static_cast<int>(w)) = rows[k][w];
      }
    }
  }
  {
    std::ifstream in(dir / "theta.csv");
    if (!in) throw IoError("cannot open " + (dir / "theta.csv").string());
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto cells = split_csv_line(line);
      std::vector<double> row;
      row.reserve(cells.size());
      for (const auto& c : cells) row.push_back(std::stod(c));
      rows.push_back(std::move(row));
    }
    int K = model.phi.rows();
    model.theta = Mat<double>(static_cast<int>(rows.size()), K);
    for (std::size_t m = 0; m < rows.size(); ++m) {
      if (static_cast<int>(rows[m].size()) != K) throw IoError("ragged theta.csv row");
      for (int k = 0; k < K; ++k) model.theta(static_cast<int>(m), k) = rows[m][k];
    }
  }
  return model;
}

}  // namespace clda
