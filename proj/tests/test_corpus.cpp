#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <map>
#include <sstream>

#include "crisislda/corpus.hpp"
#include "crisislda/errors.hpp"
#include "helpers.hpp"

using namespace clda;
using test_helpers::DocSpec;
using test_helpers::make_corpus;
using test_helpers::random_corpus;

// ---------------------------------------------------------------------------
// Dates.

TEST_CASE("civil date round trip") {
  CHECK(days_from_civil(1970, 1, 1) == 0);
  CHECK(days_from_civil(2012, 10, 29) == 15642);
  for (std::int64_t d : {-1000, 0, 15642, 20000}) {
    int y, m, day;
    civil_from_days(d, y, m, day);
    CHECK(days_from_civil(y, m, day) == d);
  }
  CHECK(format_iso_date(parse_iso_date("2012-10-29")) == "2012-10-29");
  CHECK_THROWS_AS(parse_iso_date("29/10/2012"), ArgumentError);
}

TEST_CASE("instant parsing") {
  auto t = parse_iso_instant("2012-10-29T23:30:00Z");
  REQUIRE(t.has_value());
  CHECK(*t == 15642 * 86400 + 23 * 3600 + 30 * 60);
  CHECK_FALSE(parse_iso_instant("2012-10-29 23:30:00").has_value());
  CHECK_FALSE(parse_iso_instant("garbage").has_value());
}

// ---------------------------------------------------------------------------
// Tokenizer.

TEST_CASE("tokenize basic cleaning") {
  auto rules = TokenizerRules::defaults();
  CHECK(tokenize("Hurricane Sandy!!", rules) ==
        std::vector<std::string>{"hurricane", "sandy"});
  CHECK(tokenize("the storm is here http://t.co/x @NWS", rules) ==
        std::vector<std::string>{"storm"});
  CHECK(tokenize("", rules).empty());
  CHECK(tokenize("#SandyRelief donate", rules) ==
        std::vector<std::string>{"sandyrelief", "donate"});
  // numerics and one-letter tokens dropped
  CHECK(tokenize("42 mph x wind", rules) == std::vector<std::string>{"mph", "wind"});
}

TEST_CASE("tokenize is idempotent and honors drop rules") {
  auto rules = TokenizerRules::defaults();
  std::vector<std::string> inputs = {
      "The QUICK brown-fox, jumps!! over http://x.co @you 12 storms",
      "a.b.c http https://t.co/abc httpstorm #tag99 99",
      "   ",
      "sandy sandy sandy @sandy",
  };
  for (const auto& text : inputs) {
    auto once = tokenize(text, rules);
    std::string joined;
    for (const auto& t : once) joined += t + " ";
    CHECK(tokenize(joined, rules) == once);
    for (const auto& t : once) {
      CHECK(rules.stopwords.count(t) == 0);
      CHECK(t.rfind("http", 0) != 0);
      CHECK(t.rfind("@", 0) != 0);
      CHECK(t.size() >= rules.min_token_len);
    }
  }
}

TEST_CASE("stopword file loading") {
  auto dir = test_helpers::fresh_dir("clda_stopwords");
  {
    std::ofstream out(dir / "stop.txt");
    out << "# comment\nfoo\nbar  \n\n";
  }
  auto rules = TokenizerRules::from_stopword_file(dir / "stop.txt");
  CHECK(rules.stopwords.count("foo") == 1);
  CHECK(rules.stopwords.count("bar") == 1);
  CHECK(rules.stopwords.count("# comment") == 0);
  CHECK_THROWS_AS(TokenizerRules::from_stopword_file(dir / "missing.txt"), IoError);
}

// ---------------------------------------------------------------------------
// Ingest.

static std::string jsonl_record(const std::string& id, const std::string& user,
                                const std::string& ts, const std::string& text) {
  return "{\"id\":\"" + id + "\",\"user_id\":\"" + user + "\",\"timestamp\":\"" +
         ts + "\",\"text\":\"" + text + "\"}\n";
}

TEST_CASE("ingest counts records and drops empties") {
  std::string data;
  data += jsonl_record("1", "alice", "2012-10-29T10:00:00Z", "hurricane sandy storm");
  data += jsonl_record("2", "bob", "2012-10-30T10:00:00Z", "flooding everywhere");
  data += "this is not json\n";
  data += jsonl_record("3", "alice", "2012-10-31T10:00:00Z", "power outage");
  data += jsonl_record("4", "carol", "2012-10-31T11:00:00Z", "the a of");  // all stopwords
  std::istringstream in(data);
  auto [corpus, report] = ingest(in, TokenizerRules::defaults(), "2012-10-14");
  CHECK(corpus.docs.size() == 3);
  CHECK(report.accepted == 3);
  CHECK(report.skipped_malformed == 1);
  CHECK(report.empty_dropped == 1);
  CHECK(corpus.docs[0].user_id == "alice");
  CHECK(corpus.docs[0].day == 15);  // Oct 29 minus Oct 14
  CHECK(corpus.docs[1].day == 16);
}

TEST_CASE("ingest filters non-English records when lang is present") {
  std::string data;
  data += "{\"id\":\"1\",\"user_id\":\"u\",\"timestamp\":\"2012-10-29T10:00:00Z\","
          "\"text\":\"hurricane sandy\",\"lang\":\"es\"}\n";
  data += "{\"id\":\"2\",\"user_id\":\"u\",\"timestamp\":\"2012-10-29T10:00:00Z\","
          "\"text\":\"hurricane sandy\",\"lang\":\"en\"}\n";
  data += jsonl_record("3", "u", "2012-10-29T10:00:00Z", "hurricane sandy");
  std::istringstream in(data);
  auto [corpus, report] = ingest(in, TokenizerRules::defaults(), "2012-10-14");
  CHECK(corpus.docs.size() == 2);
  CHECK(report.skipped_lang == 1);
}

TEST_CASE("mostly malformed input aborts") {
  std::string data = "junk\nmore junk\n" +
                     jsonl_record("1", "u", "2012-10-29T10:00:00Z", "sandy storm");
  std::istringstream in(data);
  CHECK_THROWS_AS(ingest(in, TokenizerRules::defaults(), "2012-10-14"), IoError);
}

TEST_CASE("ingest token count matches an independent per-line pass") {
  auto rules = TokenizerRules::defaults();
  std::vector<std::string> texts = {
      "hurricane sandy approaching the east coast",
      "stay safe everyone, sandy is no joke!!",
      "sandy sandy sandy http://t.co/xyz",
      "power lines down near the river @con_ed",
  };
  std::string data;
  std::int64_t expected = 0;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    data += jsonl_record(std::to_string(i), "u", "2012-10-20T00:00:00Z", texts[i]);
    expected += static_cast<std::int64_t>(tokenize(texts[i], rules).size());
  }
  std::istringstream in(data);
  auto [corpus, report] = ingest(in, rules, "2012-10-14");
  CHECK(corpus.total_tokens() == expected);
  // vocabulary counts agree with document contents
  std::int64_t vocab_total = 0;
  for (auto c : corpus.vocab.count_of) vocab_total += c;
  CHECK(vocab_total == expected);
}

// ---------------------------------------------------------------------------
// Filters.

TEST_CASE("keyword filter membership") {
  auto corpus = make_corpus({{{"storm"}}, {{"sandy", "storm"}}});
  auto filtered = keyword_filter(corpus, "sandy");
  CHECK(filtered.docs.size() == 1);
  CHECK(filtered.vocab.lookup("sandy") >= 0);

  auto all = keyword_filter(make_corpus({{{"sandy"}}, {{"sandy", "x"}}}), "sandy");
  CHECK(all.docs.size() == 2);

  CHECK_THROWS_AS(keyword_filter(corpus, "absent"), EmptyResultError);
}

TEST_CASE("keyword filter matches a linear-scan oracle") {
  auto corpus = random_corpus(100, 20, 8, 77);
  int kid = corpus.vocab.lookup("tok3");
  REQUIRE(kid >= 0);
  std::size_t expected = 0;
  for (const auto& doc : corpus.docs) {
    if (std::find(doc.tokens.begin(), doc.tokens.end(), kid) != doc.tokens.end()) {
      ++expected;
    }
  }
  CHECK(keyword_filter(corpus, "tok3").docs.size() == expected);
}

TEST_CASE("activity filter thresholds per user") {
  auto corpus = make_corpus({{{"aa"}, "A"}, {{"bb"}, "A"}, {{"cc"}, "A"}, {{"dd"}, "B"}});
  auto filtered = filter_users_by_activity(corpus, 2);
  CHECK(filtered.docs.size() == 3);
  for (const auto& doc : filtered.docs) CHECK(doc.user_id == "A");

  CHECK(filter_users_by_activity(corpus, 1).docs.size() == 4);
  CHECK_THROWS_AS(filter_users_by_activity(corpus, 5), EmptyResultError);
}

TEST_CASE("activity filter matches a histogram oracle") {
  auto corpus = random_corpus(1000, 30, 5, 99, /*num_users=*/40);
  std::map<std::string, int> hist;
  for (const auto& doc : corpus.docs) ++hist[doc.user_id];
  std::size_t expected = 0;
  for (const auto& doc : corpus.docs) {
    if (hist[doc.user_id] >= 10) ++expected;
  }
  auto filtered = filter_users_by_activity(corpus, 10);
  CHECK(filtered.docs.size() == expected);
}

TEST_CASE("filters are monotone and shrinking") {
  auto corpus = random_corpus(200, 15, 6, 5, /*num_users=*/12);
  std::size_t prev = corpus.docs.size();
  for (int min_messages : {1, 5, 10}) {
    try {
      auto filtered = filter_users_by_activity(corpus, min_messages);
      CHECK(filtered.docs.size() <= prev);
      prev = filtered.docs.size();
    } catch (const EmptyResultError&) {
      break;
    }
  }
}

TEST_CASE("vocabulary pruning drops rare words and empty docs") {
  auto corpus = make_corpus({{{"common", "common", "rare"}}, {{"common"}}, {{"rare2"}}});
  auto pruned = prune_vocabulary(corpus, 2);
  CHECK(pruned.vocab.size() == 1);
  CHECK(pruned.vocab.words[0] == "common");
  CHECK(pruned.docs.size() == 2);
  for (auto c : pruned.vocab.count_of) CHECK(c >= 2);
  CHECK_THROWS_AS(prune_vocabulary(corpus, 100), EmptyResultError);
}

// ---------------------------------------------------------------------------
// Frequency statistics.

TEST_CASE("top word share arithmetic") {
  auto single = make_corpus({{{"only", "only"}}});
  CHECK(top_word_share(single, 1) == doctest::Approx(1.0));

  auto corpus = make_corpus(
      {{{"a1", "a1", "a1", "a1", "a1", "b1", "b1", "b1", "c1", "c1"}}});
  CHECK(top_word_share(corpus, 1) == doctest::Approx(0.5));
  CHECK_THROWS_AS(top_word_share(corpus, 0), ArgumentError);
}

TEST_CASE("top word share is non-decreasing in n and hits 1 at W") {
  auto corpus = random_corpus(50, 12, 10, 31);
  double prev = 0.0;
  for (int n = 1; n <= corpus.vocab.size() + 2; ++n) {
    double share = top_word_share(corpus, n);
    CHECK(share >= prev - 1e-12);
    prev = share;
  }
  CHECK(top_word_share(corpus, corpus.vocab.size()) == doctest::Approx(1.0));
}

TEST_CASE("temporal matrix direct counts") {
  auto corpus = make_corpus({{{"storm", "storm"}, "u0", 3}});
  auto matrix = temporal_word_matrix(corpus, {"storm"});
  REQUIRE(matrix.days == std::vector<int>{3});
  CHECK(matrix.counts[0][0] == 2);

  auto two_days = make_corpus({{{"storm"}, "u0", 0}, {{"calm"}, "u0", 1}});
  auto m2 = temporal_word_matrix(two_days, {"storm"});
  CHECK(m2.counts[0] == std::vector<std::int64_t>{1, 0});

  CHECK_THROWS_WITH_AS(temporal_word_matrix(corpus, {"nope"}),
                       "word not in vocabulary: nope", ArgumentError);
}

TEST_CASE("temporal matrix equals a nested-loop oracle") {
  auto corpus = random_corpus(120, 10, 8, 41, 10, 5);
  std::vector<std::string> words = corpus.vocab.words;
  auto matrix = temporal_word_matrix(corpus, words);
  for (std::size_t w = 0; w < words.size(); ++w) {
    int id = corpus.vocab.lookup(words[w]);
    std::int64_t row_total = 0;
    for (std::size_t d = 0; d < matrix.days.size(); ++d) {
      std::int64_t expected = 0;
      for (const auto& doc : corpus.docs) {
        if (doc.day != matrix.days[d]) continue;
        expected += std::count(doc.tokens.begin(), doc.tokens.end(), id);
      }
      CHECK(matrix.counts[w][d] == expected);
      row_total += matrix.counts[w][d];
    }
    // row sums recover vocabulary counts
    CHECK(row_total == corpus.vocab.count_of[id]);
  }
}

TEST_CASE("wordcloud ranking") {
  auto corpus = make_corpus({{{"aa", "aa", "aa", "aa", "aa", "bb", "bb", "bb"}}});
  auto cloud = wordcloud_data(corpus, 2);
  REQUIRE(cloud.size() == 2);
  CHECK(cloud[0] == std::pair<std::string, std::int64_t>{"aa", 5});
  CHECK(cloud[1] == std::pair<std::string, std::int64_t>{"bb", 3});
  CHECK(wordcloud_data(corpus, 10).size() == 2);  // clamps to W
}

TEST_CASE("wordcloud equals a full-sort oracle") {
  auto corpus = random_corpus(80, 25, 12, 53);
  auto cloud = wordcloud_data(corpus, 10);
  std::vector<std::pair<std::string, std::int64_t>> full;
  for (int i = 0; i < corpus.vocab.size(); ++i) {
    full.emplace_back(corpus.vocab.words[i], corpus.vocab.count_of[i]);
  }
  std::sort(full.begin(), full.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  full.resize(10);
  CHECK(cloud == full);
}

// ---------------------------------------------------------------------------
// Serialization.

TEST_CASE("corpus archive round trip") {
  auto corpus = random_corpus(30, 10, 6, 7);
  auto dir = test_helpers::fresh_dir("clda_archive");
  save_corpus_archive(corpus, dir);
  auto loaded = load_corpus_archive(dir);
  CHECK(loaded.epoch == corpus.epoch);
  CHECK(loaded.vocab.words == corpus.vocab.words);
  CHECK(loaded.vocab.count_of == corpus.vocab.count_of);
  REQUIRE(loaded.docs.size() == corpus.docs.size());
  for (std::size_t m = 0; m < corpus.docs.size(); ++m) {
    CHECK(loaded.docs[m].tokens == corpus.docs[m].tokens);
    CHECK(loaded.docs[m].user_id == corpus.docs[m].user_id);
    CHECK(loaded.docs[m].day == corpus.docs[m].day);
  }
  CHECK_THROWS_AS(load_corpus_archive(dir / "nope"), IoError);
}

TEST_CASE("exports are deterministic") {
  auto corpus = random_corpus(25, 8, 5, 3);
  auto dir = test_helpers::fresh_dir("clda_exports");
  export_vocabulary_tsv(corpus.vocab, dir / "v1.tsv");
  export_vocabulary_tsv(corpus.vocab, dir / "v2.tsv");
  CHECK(test_helpers::slurp(dir / "v1.tsv") == test_helpers::slurp(dir / "v2.tsv"));

  auto matrix = temporal_word_matrix(corpus, {"tok1"});
  export_temporal_csv(matrix, corpus.epoch, dir / "t1.csv");
  auto csv = test_helpers::slurp(dir / "t1.csv");
  CHECK(csv.rfind("word,2012-10-14", 0) == 0);
}
