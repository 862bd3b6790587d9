#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace clda {

// ---------------------------------------------------------------------------
// Calendar helpers (proleptic Gregorian, UTC).

// Days since 1970-01-01 for a civil date.
std::int64_t days_from_civil(int year, int month, int day);

// Inverse of days_from_civil.
void civil_from_days(std::int64_t days, int& year, int& month, int& day);

// Parses "YYYY-MM-DD"; throws ArgumentError on malformed input.
std::int64_t parse_iso_date(std::string_view s);

// Formats days-since-epoch-1970 as "YYYY-MM-DD".
std::string format_iso_date(std::int64_t days);

// Parses "YYYY-MM-DDTHH:MM:SSZ" to seconds since the Unix epoch.
// Returns nullopt on malformed input.
std::optional<std::int64_t> parse_iso_instant(std::string_view s);

// ---------------------------------------------------------------------------
// Domain types.

struct RawMessage {
  std::string message_id;
  std::string user_id;
  std::int64_t timestamp = 0;  // seconds since Unix epoch, UTC
  std::string text;
  std::string lang;  // empty when absent
};

struct TokenizerRules {
  std::unordered_set<std::string> stopwords;
  // A token (raw whitespace-delimited or cleaned) starting with any of
  // these is discarded. Defaults cover URLs and mentions.
  std::vector<std::string> drop_prefixes{"http", "@"};
  std::size_t min_token_len = 2;
  bool drop_numeric = true;

  // Built-in English stopword list.
  static TokenizerRules defaults();
  // Stopwords loaded from a one-word-per-line file ('#' comments allowed).
  static TokenizerRules from_stopword_file(const std::filesystem::path& path);
};

struct Vocabulary {
  std::vector<std::string> words;                 // id -> word, lexicographic
  std::unordered_map<std::string, int> id_of;     // word -> id
  std::vector<std::int64_t> count_of;             // id -> corpus frequency

  int size() const { return static_cast<int>(words.size()); }
  int lookup(std::string_view w) const {
    auto it = id_of.find(std::string(w));
    return it == id_of.end() ? -1 : it->second;
  }
};

struct Document {
  std::vector<int> tokens;  // vocabulary ids
  std::string user_id;
  int day = 0;  // day-bin index relative to corpus epoch
};

struct Corpus {
  std::vector<Document> docs;
  Vocabulary vocab;
  std::string epoch;  // ISO date of day-bin 0

  std::size_t num_docs() const { return docs.size(); }
  std::int64_t total_tokens() const;
};

struct TemporalMatrix {
  std::vector<std::string> words;
  std::vector<int> days;                           // day-bin indices, ascending
  std::vector<std::vector<std::int64_t>> counts;   // words x days
};

struct IngestReport {
  std::int64_t accepted = 0;
  std::int64_t skipped_malformed = 0;
  std::int64_t skipped_lang = 0;
  std::int64_t empty_dropped = 0;
};

// ---------------------------------------------------------------------------
// Operations.

// Lowercases, splits on non-alphanumeric boundaries, removes stopwords,
// drop-prefix tokens (URLs, mentions), pure-numeric and too-short tokens.
std::vector<std::string> tokenize(std::string_view text, const TokenizerRules& rules);

// Reads JSONL records {"id","user_id","timestamp","text"[,"lang"]} and
// builds one document per message. Malformed lines are counted; more than
// 50% malformed aborts. Non-empty lang other than "en" is skipped.
// epoch is the ISO date of day-bin 0.
std::pair<Corpus, IngestReport> ingest(std::istream& stream,
                                       const TokenizerRules& rules,
                                       std::string_view epoch);

std::pair<Corpus, IngestReport> ingest_file(const std::filesystem::path& path,
                                            const TokenizerRules& rules,
                                            std::string_view epoch);

// Sub-corpus of the documents flagged in keep; vocabulary recomputed.
Corpus subset_corpus(const Corpus& corpus, const std::vector<bool>& keep);

// Sub-corpus of documents containing the keyword; vocabulary recomputed.
Corpus keyword_filter(const Corpus& corpus, std::string_view keyword);

// Keeps documents whose user has at least min_messages documents.
Corpus filter_users_by_activity(const Corpus& corpus, int min_messages);

// Removes words with corpus frequency < min_count; empty documents are
// dropped.
Corpus prune_vocabulary(const Corpus& corpus, std::int64_t min_count);

// Fraction of all token occurrences covered by the n most frequent words.
double top_word_share(const Corpus& corpus, int n);

// Per-word per-day occurrence counts over the corpus day range.
TemporalMatrix temporal_word_matrix(const Corpus& corpus,
                                    const std::vector<std::string>& words);

// Top-n (word, count) pairs, descending count, lexicographic tie-break.
std::vector<std::pair<std::string, std::int64_t>> wordcloud_data(const Corpus& corpus,
                                                                 int n);

// ---------------------------------------------------------------------------
// Serialization.

// Archive layout: vocabulary.tsv, documents.tsv, meta.json under dir.
void save_corpus_archive(const Corpus& corpus, const std::filesystem::path& dir);
Corpus load_corpus_archive(const std::filesystem::path& dir);

void export_vocabulary_tsv(const Vocabulary& vocab, const std::filesystem::path& path);
void export_temporal_csv(const TemporalMatrix& matrix, std::string_view epoch,
                         const std::filesystem::path& path);
void export_wordcloud_csv(const std::vector<std::pair<std::string, std::int64_t>>& rows,
                          const std::filesystem::path& path);

}  // namespace clda
