#include "crisislda/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "crisislda/errors.hpp"
#include "json.hpp"

namespace clda {

namespace detail {
extern const char* kDefaultStopwords;
}

// ---------------------------------------------------------------------------
// Calendar helpers. Algorithm from Howard Hinnant's chrono date notes.

std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& year, int& month, int& day) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  month = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  year = static_cast<int>(y + (month <= 2));
}

std::int64_t parse_iso_date(std::string_view s) {
  int y, m, d;
  if (s.size() != 10 ||
      std::sscanf(std::string(s).c_str(), "%4d-%2d-%2d", &y, &m, &d) != 3 ||
      m < 1 || m > 12 || d < 1 || d > 31) {
    throw ArgumentError("malformed ISO date: " + std::string(s));
  }
  return days_from_civil(y, m, d);
}

std::string format_iso_date(std::int64_t days) {
  int y, m, d;
  civil_from_days(days, y, m, d);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
  return buf;
}

std::optional<std::int64_t> parse_iso_instant(std::string_view s) {
  int y, mo, d, h, mi, sec;
  char z = 0;
  if (s.size() < 20 ||
      std::sscanf(std::string(s).c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &y, &mo,
                  &d, &h, &mi, &sec, &z) != 7 ||
      z != 'Z' || mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 ||
      mi < 0 || mi > 59 || sec < 0 || sec > 60) {
    return std::nullopt;
  }
  return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + sec;
}

// ---------------------------------------------------------------------------
// Tokenizer.

static std::unordered_set<std::string> parse_stopword_text(std::istream& in) {
  std::unordered_set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    // trim
    std::size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    std::size_t e = line.find_last_not_of(" \t\r");
    out.insert(line.substr(b, e - b + 1));
  }
  return out;
}

TokenizerRules TokenizerRules::defaults() {
  TokenizerRules rules;
  std::istringstream in(detail::kDefaultStopwords);
  rules.stopwords = parse_stopword_text(in);
  return rules;
}

TokenizerRules TokenizerRules::from_stopword_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open stopword file: " + path.string());
  TokenizerRules rules;
  rules.stopwords = parse_stopword_text(in);
  return rules;
}

static bool has_drop_prefix(const std::string& token, const TokenizerRules& rules) {
  for (const auto& p : rules.drop_prefixes) {
    if (token.compare(0, p.size(), p) == 0) return true;
  }
  return false;
}

std::vector<std::string> tokenize(std::string_view text, const TokenizerRules& rules) {
  std::vector<std::string> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  std::string raw;
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    raw.clear();
    while (i < n && !std::isspace(static_cast<unsigned char>(text[i]))) {
      raw.push_back(static_cast<char>(
          std::tolower(static_cast<unsigned char>(text[i]))));
      ++i;
    }
    if (raw.empty()) continue;
    // URL / mention markers kill the whole whitespace token.
    if (has_drop_prefix(raw, rules)) continue;
    // Split the remainder on non-alphanumeric runs.
    std::size_t j = 0;
    while (j < raw.size()) {
      while (j < raw.size() && !std::isalnum(static_cast<unsigned char>(raw[j]))) ++j;
      std::size_t start = j;
      bool all_digits = true;
      while (j < raw.size() && std::isalnum(static_cast<unsigned char>(raw[j]))) {
        if (!std::isdigit(static_cast<unsigned char>(raw[j]))) all_digits = false;
        ++j;
      }
      if (start == j) continue;
      std::string tok = raw.substr(start, j - start);
      if (tok.size() < rules.min_token_len) continue;
      if (rules.drop_numeric && all_digits) continue;
      if (has_drop_prefix(tok, rules)) continue;
      if (rules.stopwords.count(tok)) continue;
      out.push_back(std::move(tok));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Corpus construction.

std::int64_t Corpus::total_tokens() const {
  std::int64_t n = 0;
  for (const auto& d : docs) n += static_cast<std::int64_t>(d.tokens.size());
  return n;
}

// Builds a dense lexicographically ordered vocabulary from string documents.
static Corpus build_corpus(std::vector<std::vector<std::string>>&& token_docs,
                           std::vector<std::pair<std::string, int>>&& meta,
                           std::string epoch) {
  std::map<std::string, std::int64_t> freq;
  for (const auto& doc : token_docs) {
    for (const auto& t : doc) ++freq[t];
  }
  Corpus corpus;
  corpus.epoch = std::move(epoch);
  corpus.vocab.words.reserve(freq.size());
  for (auto& [word, count] : freq) {
    corpus.vocab.id_of.emplace(word, corpus.vocab.size());
    corpus.vocab.words.push_back(word);
    corpus.vocab.count_of.push_back(count);
  }
  corpus.docs.reserve(token_docs.size());
  for (std::size_t m = 0; m < token_docs.size(); ++m) {
    Document doc;
    doc.user_id = std::move(meta[m].first);
    doc.day = meta[m].second;
    doc.tokens.reserve(token_docs[m].size());
    for (const auto& t : token_docs[m]) doc.tokens.push_back(corpus.vocab.id_of.at(t));
    corpus.docs.push_back(std::move(doc));
  }
  return corpus;
}

Corpus subset_corpus(const Corpus& corpus, const std::vector<bool>& keep) {
  std::vector<std::vector<std::string>> token_docs;
  std::vector<std::pair<std::string, int>> meta;
  for (std::size_t m = 0; m < corpus.docs.size(); ++m) {
    if (!keep[m]) continue;
    const auto& doc = corpus.docs[m];
    std::vector<std::string> toks;
    toks.reserve(doc.tokens.size());
    for (int id : doc.tokens) toks.push_back(corpus.vocab.words[id]);
    token_docs.push_back(std::move(toks));
    meta.emplace_back(doc.user_id, doc.day);
  }
  return build_corpus(std::move(token_docs), std::move(meta), corpus.epoch);
}

std::pair<Corpus, IngestReport> ingest(std::istream& stream,
                                       const TokenizerRules& rules,
                                       std::string_view epoch) {
  const std::int64_t epoch_days = parse_iso_date(epoch);
  IngestReport report;
  std::vector<std::vector<std::string>> token_docs;
  std::vector<std::pair<std::string, int>> meta;
  std::int64_t lines = 0;
  std::string line;
  while (std::getline(stream, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++lines;
    nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object() || !rec.contains("id") ||
        !rec.contains("user_id") || !rec.contains("timestamp") ||
        !rec.contains("text") || !rec["text"].is_string() ||
        !rec["user_id"].is_string() || !rec["timestamp"].is_string()) {
      ++report.skipped_malformed;
      continue;
    }
    auto ts = parse_iso_instant(rec["timestamp"].get<std::string>());
    if (!ts) {
      ++report.skipped_malformed;
      continue;
    }
    if (rec.contains("lang") && rec["lang"].is_string()) {
      std::string lang = rec["lang"].get<std::string>();
      if (!lang.empty() && lang != "en") {
        ++report.skipped_lang;
        continue;
      }
    }
    auto tokens = tokenize(rec["text"].get<std::string>(), rules);
    if (tokens.empty()) {
      ++report.empty_dropped;
      continue;
    }
    ++report.accepted;
    int day = static_cast<int>(*ts / 86400 - epoch_days);
    token_docs.push_back(std::move(tokens));
    meta.emplace_back(rec["user_id"].get<std::string>(), day);
  }
  if (lines > 0 && report.skipped_malformed * 2 > lines) {
    throw IoError("more than half of input lines are malformed; wrong file format?");
  }
  return {build_corpus(std::move(token_docs), std::move(meta), std::string(epoch)),
          report};
}

std::pair<Corpus, IngestReport> ingest_file(const std::filesystem::path& path,
                                            const TokenizerRules& rules,
                                            std::string_view epoch) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open input: " + path.string());
  return ingest(in, rules, epoch);
}

// ---------------------------------------------------------------------------
// Filters.

Corpus keyword_filter(const Corpus& corpus, std::string_view keyword) {
  int kid = corpus.vocab.lookup(keyword);
  std::vector<bool> keep(corpus.docs.size(), false);
  std::size_t kept = 0;
  if (kid >= 0) {
    for (std::size_t m = 0; m < corpus.docs.size(); ++m) {
      const auto& toks = corpus.docs[m].tokens;
      if (std::find(toks.begin(), toks.end(), kid) != toks.end()) {
        keep[m] = true;
        ++kept;
      }
    }
  }
  if (kept == 0) {
    throw EmptyResultError("keyword '" + std::string(keyword) +
                           "' matches no document");
  }
  return subset_corpus(corpus, keep);
}

Corpus filter_users_by_activity(const Corpus& corpus, int min_messages) {
  if (min_messages < 1) throw ArgumentError("min_messages must be positive");
  std::unordered_map<std::string, int> activity;
  for (const auto& doc : corpus.docs) ++activity[doc.user_id];
  std::vector<bool> keep(corpus.docs.size(), false);
  std::size_t kept = 0;
  for (std::size_t m = 0; m < corpus.docs.size(); ++m) {
    if (activity[corpus.docs[m].user_id] >= min_messages) {
      keep[m] = true;
      ++kept;
    }
  }
  if (kept == 0) throw EmptyResultError("no user meets the activity threshold");
  return subset_corpus(corpus, keep);
}

Corpus prune_vocabulary(const Corpus& corpus, std::int64_t min_count) {
  std::vector<std::vector<std::string>> token_docs;
  std::vector<std::pair<std::string, int>> meta;
  for (const auto& doc : corpus.docs) {
    std::vector<std::string> toks;
    for (int id : doc.tokens) {
      if (corpus.vocab.count_of[id] >= min_count) {
        toks.push_back(corpus.vocab.words[id]);
      }
    }
    if (toks.empty()) continue;
    token_docs.push_back(std::move(toks));
    meta.emplace_back(doc.user_id, doc.day);
  }
  if (token_docs.empty()) {
    throw EmptyResultError("vocabulary pruning removed every document");
  }
  return build_corpus(std::move(token_docs), std::move(meta), corpus.epoch);
}

// ---------------------------------------------------------------------------
// Frequency statistics.

// Word ids sorted by descending count, lexicographic tie-break. Vocabulary
// ids are already lexicographic, so a stable sort on count suffices.
static std::vector<int> rank_by_frequency(const Vocabulary& vocab) {
  std::vector<int> order(vocab.words.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return vocab.count_of[a] > vocab.count_of[b];
  });
  return order;
}

double top_word_share(const Corpus& corpus, int n) {
  if (n <= 0) throw ArgumentError("n must be positive");
  if (corpus.docs.empty()) throw EmptyResultError("corpus is empty");
  auto order = rank_by_frequency(corpus.vocab);
  std::int64_t top = 0, total = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    total += corpus.vocab.count_of[order[i]];
    if (i < static_cast<std::size_t>(n)) top += corpus.vocab.count_of[order[i]];
  }
  return total == 0 ? 0.0 : static_cast<double>(top) / static_cast<double>(total);
}

TemporalMatrix temporal_word_matrix(const Corpus& corpus,
                                    const std::vector<std::string>& words) {
  std::vector<int> ids;
  for (const auto& w : words) {
    int id = corpus.vocab.lookup(w);
    if (id < 0) throw ArgumentError("word not in vocabulary: " + w);
    ids.push_back(id);
  }
  int day_min = 0, day_max = -1;
  for (const auto& doc : corpus.docs) {
    if (day_max < day_min) {
      day_min = day_max = doc.day;
    } else {
      day_min = std::min(day_min, doc.day);
      day_max = std::max(day_max, doc.day);
    }
  }
  TemporalMatrix matrix;
  matrix.words = words;
  for (int d = day_min; d <= day_max; ++d) matrix.days.push_back(d);
  matrix.counts.assign(words.size(),
                       std::vector<std::int64_t>(matrix.days.size(), 0));
  std::unordered_map<int, int> row_of;
  for (std::size_t i = 0; i < ids.size(); ++i) row_of[ids[i]] = static_cast<int>(i);
  for (const auto& doc : corpus.docs) {
    for (int id : doc.tokens) {
      auto it = row_of.find(id);
      if (it != row_of.end()) {
        ++matrix.counts[it->second][doc.day - day_min];
      }
    }
  }
  return matrix;
}

std::vector<std::pair<std::string, std::int64_t>> wordcloud_data(const Corpus& corpus,
                                                                 int n) {
  if (n <= 0) throw ArgumentError("n must be positive");
  auto order = rank_by_frequency(corpus.vocab);
  std::vector<std::pair<std::string, std::int64_t>> out;
  for (std::size_t i = 0; i < order.size() && i < static_cast<std::size_t>(n); ++i) {
    out.emplace_back(corpus.vocab.words[order[i]], corpus.vocab.count_of[order[i]]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization.

static std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write: " + path.string());
  return out;
}

void export_vocabulary_tsv(const Vocabulary& vocab, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "id\tword\tcount\n";
  for (int i = 0; i < vocab.size(); ++i) {
    out << i << '\t' << vocab.words[i] << '\t' << vocab.count_of[i] << '\n';
  }
}

void export_temporal_csv(const TemporalMatrix& matrix, std::string_view epoch,
                         const std::filesystem::path& path) {
  const std::int64_t epoch_days = parse_iso_date(epoch);
  auto out = open_out(path);
  out << "word";
  for (int d : matrix.days) out << ',' << format_iso_date(epoch_days + d);
  out << '\n';
  for (std::size_t w = 0; w < matrix.words.size(); ++w) {
    out << matrix.words[w];
    for (std::size_t d = 0; d < matrix.days.size(); ++d) {
      out << ',' << matrix.counts[w][d];
    }
    out << '\n';
  }
}

void export_wordcloud_csv(const std::vector<std::pair<std::string, std::int64_t>>& rows,
                          const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "word,count\n";
  for (const auto& [word, count] : rows) out << word << ',' << count << '\n';
}

void save_corpus_archive(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  export_vocabulary_tsv(corpus.vocab, dir / "vocabulary.tsv");
  {
    auto out = open_out(dir / "documents.tsv");
    out << "user_id\tday\ttokens\n";
    for (const auto& doc : corpus.docs) {
      out << doc.user_id << '\t' << doc.day << '\t';
      for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
        if (i) out << ' ';
        out << doc.tokens[i];
      }
      out << '\n';
    }
  }
  nlohmann::json meta = {
      {"epoch", corpus.epoch},
      {"num_docs", corpus.docs.size()},
      {"vocab_size", corpus.vocab.size()},
      {"total_tokens", corpus.total_tokens()},
  };
  open_out(dir / "meta.json") << meta.dump(2) << '\n';
}

Corpus load_corpus_archive(const std::filesystem::path& dir) {
  Corpus corpus;
  {
    std::ifstream in(dir / "meta.json");
    if (!in) throw IoError("cannot open archive: " + (dir / "meta.json").string());
    nlohmann::json meta = nlohmann::json::parse(in, nullptr, false);
    if (meta.is_discarded() || !meta.contains("epoch")) {
      throw IoError("corrupt archive metadata in " + dir.string());
    }
    corpus.epoch = meta["epoch"].get<std::string>();
  }
  {
    std::ifstream in(dir / "vocabulary.tsv");
    if (!in) throw IoError("cannot open " + (dir / "vocabulary.tsv").string());
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string id_str, word, count_str;
      if (!std::getline(ls, id_str, '\t') || !std::getline(ls, word, '\t') ||
          !std::getline(ls, count_str)) {
        throw IoError("corrupt vocabulary row: " + line);
      }
      corpus.vocab.id_of.emplace(word, corpus.vocab.size());
      corpus.vocab.words.push_back(word);
      corpus.vocab.count_of.push_back(std::stoll(count_str));
    }
  }
  {
    std::ifstream in(dir / "documents.tsv");
    if (!in) throw IoError("cannot open " + (dir / "documents.tsv").string());
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      Document doc;
      std::string day_str, ids;
      if (!std::getline(ls, doc.user_id, '\t') || !std::getline(ls, day_str, '\t') ||
          !std::getline(ls, ids)) {
        throw IoError("corrupt document row: " + line);
      }
      doc.day = std::stoi(day_str);
      std::istringstream ts(ids);
      int id;
      while (ts >> id) {
        if (id < 0 || id >= corpus.vocab.size()) {
          throw IoError("token id out of range in archive: " + std::to_string(id));
        }
        doc.tokens.push_back(id);
      }
      corpus.docs.push_back(std::move(doc));
    }
  }
  return corpus;
}

}  // namespace clda
