#include <gtest/gtest.h>

#include <sstream>

#include "helpers.hpp"
#include "mlmbias/error.hpp"
#include "mlmbias/freq.hpp"

using namespace mlmbias;
namespace th = testing_helpers;

namespace {

std::map<std::string, std::uint64_t> naive_counts(const std::string& text, const std::set<std::string>& lex,
                                                  std::uint64_t* total) {
  std::map<std::string, std::uint64_t> out;
  for (const auto& w : lex) out[w] = 0;
  const auto words = th::naive_words(text);
  *total = words.size();
  for (const auto& w : words) {
    if (lex.count(w)) ++out[w];
  }
  return out;
}

const std::vector<std::string> kVocab = {"he", "she", "man", "woman", "black", "white", "poor", "rich",
                                         "the", "café", "naïve", "über", "年", "gay", "straight", "old"};

}  // namespace

TEST(Segment, BasicRules) {
  EXPECT_EQ(segment_words("  Hello, WORLD!  (he) \"She\" ... x"),
            (std::vector<std::string>{"hello", "world", "he", "she", "x"}));
  EXPECT_EQ(segment_words("don't mother-in-law"), (std::vector<std::string>{"don't", "mother-in-law"}));
  EXPECT_EQ(segment_words("\xE2\x80\x9CMan\xE2\x80\x9D\xC2\xA0woman\xE2\x80\xA6"), (std::vector<std::string>{"man", "woman"}));
  EXPECT_EQ(segment_words("a\xE3\x80\x80" "b\xE2\x80\xA8" "c\xC2\x85" "d"), (std::vector<std::string>{"a", "b", "c", "d"}));
  // Non-ASCII letters are kept as they are.
  EXPECT_EQ(segment_words("Über café"), (std::vector<std::string>{"Über", "café"}));
}

TEST(Segment, AgreesWithNaiveOracle) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto text = th::synthetic_corpus(4000, kVocab, seed);
    EXPECT_EQ(segment_words(text), th::naive_words(text)) << seed;
  }
}

TEST(Counter, ChunkBoundariesDoNotMatter) {
  const std::set<std::string> lex = {"man", "woman", "café", "年"};
  const auto text = th::synthetic_corpus(20000, kVocab, 42);
  const auto whole = count_text(text, lex);
  for (std::size_t chunk : {1u, 2u, 3u, 7u, 64u, 4093u}) {
    WordCounter c(lex);
    for (std::size_t i = 0; i < text.size(); i += chunk) c.feed(std::string_view(text).substr(i, chunk));
    c.finish();
    EXPECT_EQ(c.table(), whole) << chunk;
  }
  std::uint64_t total = 0;
  EXPECT_EQ(whole.counts, naive_counts(text, lex, &total));
  EXPECT_EQ(whole.total_tokens, total);
}

TEST(Counter, CorpusFilesShardedOverThreads) {
  const auto dir = th::temp_dir("freq");
  const std::set<std::string> lex = {"he", "she", "rich", "poor", "missing"};
  std::vector<std::filesystem::path> files;
  std::string all;
  for (int i = 0; i < 7; ++i) {
    const auto text = th::synthetic_corpus(30000 + 1000 * i, kVocab, 100 + i);
    files.push_back(dir / ("part" + std::to_string(i) + ".txt"));
    th::write_file(files.back(), text);
    all += text + "\n";
  }
  const auto one = count_corpus(files, lex, 1);
  EXPECT_EQ(count_corpus(files, lex, 3), one);
  EXPECT_EQ(count_corpus(files, lex, 16), one);
  std::uint64_t total = 0;
  EXPECT_EQ(one.counts, naive_counts(all, lex, &total));
  EXPECT_EQ(one.total_tokens, total);
  EXPECT_EQ(one.count("missing"), 0u);
}

TEST(Counter, UnreadableFileNamed) {
  const auto dir = th::temp_dir("freq_bad");
  th::write_file(dir / "ok.txt", "he she");
  try {
    count_corpus({dir / "ok.txt", dir / "absent.txt"}, {"he"}, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("absent.txt"), std::string::npos);
  }
  EXPECT_THROW(count_corpus({dir}, {"he"}, 1), Error);
}

TEST(Lexicon, ParseWriteRoundTrip) {
  std::istringstream in(
      "# groups\n[gender advantaged]\nHe\nman\t2.5\n\n[gender disadvantaged]\nshe\n[race advantaged]\nwhite\n");
  const auto e = parse_lexicon(in);
  ASSERT_EQ(e.size(), 4u);
  EXPECT_EQ(e[0], (LexiconEntry{"gender", Group::advantaged, "he", 1.0}));
  EXPECT_EQ(e[1].weight, 2.5);
  EXPECT_EQ(e[2].group, Group::disadvantaged);
  std::stringstream buf;
  write_lexicon(buf, e);
  EXPECT_EQ(parse_lexicon(buf), e);
}

TEST(Lexicon, ParseErrorsCarryLineNumbers) {
  for (const char* bad : {"word\n", "[gender]\nx\n", "[gender both]\n", "[gender advantaged]\nx\t-1\n",
                          "[gender advantaged\n"}) {
    std::istringstream in(bad);
    try {
      parse_lexicon(in);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_NE(std::string(e.what()).find("line"), std::string::npos);
    }
  }
}

TEST(Lexicon, StoplistAndOverlapResolution) {
  std::istringstream stop("# colour words\nWhite\nblack\n");
  const auto stoplist = parse_stoplist(stop);
  EXPECT_EQ(stoplist, (std::set<std::string>{"white", "black"}));
  const std::vector<LexiconEntry> entries = {
      {"race", Group::advantaged, "white", 5},     {"race", Group::disadvantaged, "black", 5},
      {"race", Group::advantaged, "european", 1},  {"race", Group::disadvantaged, "african", 1},
      {"race", Group::advantaged, "people", 3},    {"race", Group::disadvantaged, "people", 1},
      {"race", Group::advantaged, "man", 1},       {"race", Group::disadvantaged, "man", 1},
      {"race", Group::disadvantaged, "asian", 1},  {"gender", Group::advantaged, "He", 1},
      {"gender", Group::advantaged, "he", 1},      {"gender", Group::disadvantaged, "she", 1}};
  auto lex = assemble_lexicons(entries, stoplist);
  ASSERT_EQ(lex.size(), 2u);
  EXPECT_EQ(lex[0].bias_type, "gender");
  EXPECT_EQ(lex[0].advantaged, (std::vector<std::string>{"he"}));
  // Larger weight wins; an exact tie without corpus counts stays advantaged.
  EXPECT_EQ(lex[1].advantaged, (std::vector<std::string>{"european", "man", "people"}));
  EXPECT_EQ(lex[1].disadvantaged, (std::vector<std::string>{"african", "asian"}));
  // With counts, the tie goes to the group whose exclusive words are more frequent.
  FreqTable t;
  t.counts = {{"european", 10}, {"african", 30}, {"asian", 5}};
  lex = assemble_lexicons(entries, stoplist, &t);
  EXPECT_EQ(lex[1].disadvantaged, (std::vector<std::string>{"african", "asian", "man"}));
}

TEST(Lexicon, FromCrowsPairs) {
  TestInstance a;
  a.id = "0";
  a.bias_type = "gender";
  a.group = Group::disadvantaged;
  a.sentences = {th::sentence({"Women", "can't", "drive."}), th::sentence({"Men", "can't", "drive."}, {}, Role::antistereotype)};
  TestInstance b = a;
  b.id = "1";
  b.group = Group::advantaged;
  b.sentences = {th::sentence({"He", "is", "strong."}), th::sentence({"She", "is", "strong."}, {}, Role::antistereotype)};
  const auto e = lexicon_from_cp({a, b, a});
  const auto lex = assemble_lexicons(e, {});
  ASSERT_EQ(lex.size(), 1u);
  EXPECT_EQ(lex[0].advantaged, (std::vector<std::string>{"he", "men"}));
  EXPECT_EQ(lex[0].disadvantaged, (std::vector<std::string>{"she", "women"}));
  for (const auto& x : e) {
    if (x.word == "women") EXPECT_EQ(x.weight, 2.0);
  }
}

TEST(MeanRank, PerGroupSelection) {
  FreqTable t;
  t.counts = {{"a1", 100}, {"a2", 90}, {"a3", 5}, {"a4", 1}, {"a5", 0},
              {"d1", 80},  {"d2", 70}, {"d3", 60}, {"d4", 50}, {"d5", 40}};
  const GroupLexicon lex{"x", {"a1", "a2", "a3", "a4", "a5"}, {"d1", "d2", "d3", "d4", "d5"}};
  const auto r = mean_rank(t, lex, 8);
  // Pool: a1 a2 d1 d2 d3 d4 a3 a4 -> ranks 1 2 | 3 4 5 6 | 7 8.
  EXPECT_EQ(*r.advantaged, (1 + 2 + 7 + 8) / 4.0);
  EXPECT_EQ(*r.disadvantaged, (3 + 4 + 5 + 6) / 4.0);
  EXPECT_FALSE(r.short_list);
  EXPECT_EQ(r.ranked.size(), 10u);
  EXPECT_EQ(r.ranked[8].rank, 0u);

  const auto o = mean_rank(t, lex, 8, RankSelection::overall);
  // Top 8 overall: a1 a2 d1 d2 d3 d4 d5 a3.
  EXPECT_EQ(*o.advantaged, (1 + 2 + 8) / 3.0);
  EXPECT_EQ(*o.disadvantaged, (3 + 4 + 5 + 6 + 7) / 5.0);
}

TEST(MeanRank, TiesShortListsAndErrors) {
  FreqTable t;
  t.counts = {{"b", 5}, {"a", 5}, {"c", 0}};
  const auto r = mean_rank(t, {"x", {"b"}, {"a", "c"}}, 4);
  EXPECT_EQ(*r.disadvantaged, 1.0);  // "a" sorts before "b" on equal counts
  EXPECT_EQ(*r.advantaged, 2.0);
  EXPECT_TRUE(r.short_list);
  const auto m = mean_rank(t, {"x", {}, {"a"}}, 2);
  EXPECT_TRUE(m.missing_group);
  EXPECT_FALSE(m.advantaged);
  EXPECT_THROW(mean_rank(t, {"x", {"a"}, {"a"}}, 2), Error);
  EXPECT_THROW(mean_rank(t, {"x", {"a"}, {"b"}}, 3), Error);
}

TEST(MeanRank, CsvOutput) {
  FreqTable t;
  t.counts = {{"a", 2}, {"b", 1}, {"c", 0}};
  std::ostringstream out;
  write_rank_csv(out, {mean_rank(t, {"x,y", {"a"}, {"b", "c"}}, 2)});
  EXPECT_EQ(out.str(),
            "bias_type,word,count,group,rank\n\"x,y\",a,2,advantaged,1\n\"x,y\",b,1,disadvantaged,2\n"
            "\"x,y\",c,0,disadvantaged,\n");
}

TEST(GroupCounts, ParseAndDuplicates) {
  std::istringstream in("bias_type,group,word,count\nrace,advantaged,White,10\nrace,disadvantaged,black,20\n"
                        "age,advantaged,young,3\n");
  const auto gc = parse_group_counts(in);
  ASSERT_EQ(gc.size(), 2u);
  EXPECT_EQ(gc[1].lexicon.advantaged, (std::vector<std::string>{"white"}));
  EXPECT_EQ(gc[1].table.count("black"), 20u);
  std::istringstream dup("bias_type,group,word,count\nrace,advantaged,a,1\nrace,disadvantaged,a,2\n");
  EXPECT_THROW(parse_group_counts(dup), Error);
  std::istringstream bad("bias_type,group,word,count\nrace,advantaged,a,-1\n");
  EXPECT_THROW(parse_group_counts(bad), Error);
}
