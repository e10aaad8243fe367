#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mlmbias/dataset.hpp"

namespace mlmbias {

struct FreqTable {
  std::map<std::string, std::uint64_t> counts;  // every lexicon word, zeros included
  std::uint64_t total_tokens = 0;               // all words seen, lexicon or not

  std::uint64_t count(const std::string& word) const {
    auto it = counts.find(word);
    return it == counts.end() ? 0 : it->second;
  }
  void merge(const FreqTable& other);
  friend bool operator==(const FreqTable&, const FreqTable&) = default;
};

// Word segmentation used for counting: split on Unicode whitespace, strip
// leading and trailing punctuation, lowercase ASCII letters. Empty results
// are not words.
std::vector<std::string> segment_words(std::string_view text);

// Streaming counter. Feed bytes in arbitrary chunks; a word split across two
// chunks is handled.
class WordCounter {
 public:
  explicit WordCounter(const std::set<std::string>& lexicon);
  void feed(std::string_view bytes);
  void finish();  // flushes a trailing word
  FreqTable table() const;

 private:
  void end_word();

  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };
  std::unordered_map<std::string, std::size_t, Hash, std::equal_to<>> slot_of_;
  std::vector<std::string> words_;
  std::vector<std::uint64_t> counts_;
  std::size_t max_len_ = 0;
  std::uint64_t total_ = 0;
  std::string word_;
};

FreqTable count_text(std::string_view text, const std::set<std::string>& lexicon);
// Counts each file in a streaming pass; files are spread over `threads`
// workers (0 = hardware concurrency). Throws naming an unreadable file.
FreqTable count_corpus(const std::vector<std::filesystem::path>& paths, const std::set<std::string>& lexicon,
                       unsigned threads = 0);

// ---------------------------------------------------------------------------

struct LexiconEntry {
  std::string bias_type;
  Group group = Group::advantaged;
  std::string word;
  double weight = 1.0;  // occurrences of the word among the group's sentences

  friend bool operator==(const LexiconEntry&, const LexiconEntry&) = default;
};

struct GroupLexicon {
  std::string bias_type;
  std::vector<std::string> advantaged;  // sorted, disjoint from disadvantaged
  std::vector<std::string> disadvantaged;

  std::set<std::string> words() const;
  friend bool operator==(const GroupLexicon&, const GroupLexicon&) = default;
};

// Lexicon file: `[<bias_type> <advantaged|disadvantaged>]` headers, then one
// word per line, optionally followed by a tab and a weight. `#` starts a
// comment line.
std::vector<LexiconEntry> parse_lexicon(std::istream& in);
std::vector<LexiconEntry> load_lexicon(const std::filesystem::path& path);
void write_lexicon(std::ostream& out, const std::vector<LexiconEntry>& entries);

// One word per line; `#` comments.
std::set<std::string> parse_stoplist(std::istream& in);
std::set<std::string> load_stoplist(const std::filesystem::path& path);

// Candidate group words from CP pairs: the words that differ between the two
// sentences, assigned to the pair's group (sent_more) and the opposite group
// (sent_less). Weights count occurrences.
std::vector<LexiconEntry> lexicon_from_cp(const std::vector<TestInstance>& instances);

// Lowercases, drops stoplisted words, merges duplicates and resolves words
// listed under both groups: the group with the larger weight wins; on equal
// weights the group with the larger corpus total in `table` wins (when
// given); a remaining tie keeps the word advantaged. One lexicon per bias
// type, in lexicographic order.
std::vector<GroupLexicon> assemble_lexicons(const std::vector<LexiconEntry>& entries,
                                            const std::set<std::string>& stoplist, const FreqTable* table = nullptr);

// ---------------------------------------------------------------------------

struct RankedWord {
  std::string word;
  std::uint64_t count = 0;
  Group group = Group::advantaged;
  std::size_t rank = 0;  // 1-based; 0 when outside the top k
};

struct MeanRank {
  std::string bias_type;
  std::optional<double> advantaged;     // absent when the group has no ranked word
  std::optional<double> disadvantaged;
  std::vector<RankedWord> ranked;       // rank order, then unranked words by count
  std::size_t top_k = 8;
  bool short_list = false;              // fewer nonzero words than the selection needs
  bool missing_group = false;
};

enum class RankSelection {
  per_group,  // top_k/2 most frequent words of each group, ranked jointly
  overall,    // top_k most frequent words regardless of group
};

// Ranks by descending count, ties broken lexicographically; means are over
// the ranks held by each group's selected words. Zero-count words are never
// selected.
MeanRank mean_rank(const FreqTable& table, const GroupLexicon& lexicon, std::size_t top_k = 8,
                   RankSelection selection = RankSelection::per_group);

// CSV: bias_type,word,count,group,rank (rank empty outside the top k).
void write_rank_csv(std::ostream& out, const std::vector<MeanRank>& ranks);

// Per-group word counts as published (CSV: bias_type,group,word,count).
struct GroupCounts {
  GroupLexicon lexicon;
  FreqTable table;
};
std::vector<GroupCounts> parse_group_counts(std::istream& in);
std::vector<GroupCounts> load_group_counts(const std::filesystem::path& path);

}  // namespace mlmbias
