#include "mlmbias/freq.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <istream>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "mlmbias/alignment.hpp"
#include "mlmbias/csv.hpp"
#include "mlmbias/error.hpp"

namespace mlmbias {

void FreqTable::merge(const FreqTable& other) {
  for (const auto& [w, c] : other.counts) counts[w] += c;
  total_tokens += other.total_tokens;
}

namespace {

constexpr bool is_ascii_space(unsigned char b) { return b == ' ' || (b >= '\t' && b <= '\r'); }

constexpr bool is_ascii_punct(unsigned char b) {
  return (b >= '!' && b <= '/') || (b >= ':' && b <= '@') || (b >= '[' && b <= '`') || (b >= '{' && b <= '~');
}

// After appending continuation byte `b`, returns how many trailing bytes of
// `w` form a complete Unicode whitespace character, or 0.
std::size_t unicode_space_tail(const std::string& w) {
  const std::size_t n = w.size();
  const auto at = [&](std::size_t back) { return static_cast<unsigned char>(w[n - back]); };
  const unsigned char b = at(1);
  if (n >= 2 && at(2) == 0xC2 && (b == 0x85 || b == 0xA0)) return 2;  // U+0085, U+00A0
  if (n >= 3) {
    const unsigned char l = at(3), m = at(2);
    if (l == 0xE1 && m == 0x9A && b == 0x80) return 3;                                          // U+1680
    if (l == 0xE2 && m == 0x80 && (b <= 0x8A || b == 0xA8 || b == 0xA9 || b == 0xAF)) return 3;  // U+2000..
    if (l == 0xE2 && m == 0x81 && b == 0x9F) return 3;                                          // U+205F
    if (l == 0xE3 && m == 0x80 && b == 0x80) return 3;                                          // U+3000
  }
  return 0;
}

// Multi-byte punctuation stripped at word edges: curly quotes, dashes,
// ellipsis, guillemets, inverted marks.
constexpr std::array<std::string_view, 11> kUnicodePunct = {
    "\xE2\x80\x98", "\xE2\x80\x99", "\xE2\x80\x9C", "\xE2\x80\x9D", "\xE2\x80\x93", "\xE2\x80\x94",
    "\xE2\x80\xA6", "\xC2\xAB",     "\xC2\xBB",     "\xC2\xA1",     "\xC2\xBF"};

std::string_view strip_punct(std::string_view w) {
  for (bool again = true; again && !w.empty();) {
    again = false;
    if (is_ascii_punct(static_cast<unsigned char>(w.front()))) {
      w.remove_prefix(1);
      again = true;
      continue;
    }
    if (static_cast<unsigned char>(w.front()) < 0x80) break;
    for (auto p : kUnicodePunct) {
      if (w.substr(0, p.size()) == p) {
        w.remove_prefix(p.size());
        again = true;
        break;
      }
    }
  }
  for (bool again = true; again && !w.empty();) {
    again = false;
    if (is_ascii_punct(static_cast<unsigned char>(w.back()))) {
      w.remove_suffix(1);
      again = true;
      continue;
    }
    if (static_cast<unsigned char>(w.back()) < 0x80) break;
    for (auto p : kUnicodePunct) {
      if (w.size() >= p.size() && w.substr(w.size() - p.size()) == p) {
        w.remove_suffix(p.size());
        again = true;
        break;
      }
    }
  }
  return w;
}

constexpr std::array<bool, 128> kAsciiSpace = [] {
  std::array<bool, 128> t{};
  for (unsigned b = 0; b < 128; ++b) t[b] = is_ascii_space(static_cast<unsigned char>(b));
  return t;
}();

// Appends bytes to `word` (lowercased) and calls on_word(word) at each word
// boundary; `word` is cleared after the call. State carries across calls.
template <class F>
void scan(std::string_view bytes, std::string& word, F&& on_word) {
  const char* p = bytes.data();
  const char* const end = p + bytes.size();
  while (p < end) {
    const auto b = static_cast<unsigned char>(*p);
    if (b < 0x80) {
      if (kAsciiSpace[b]) {
        if (!word.empty()) {
          on_word(word);
          word.clear();
        }
        ++p;
        continue;
      }
      const char* q = p;
      while (q < end && static_cast<unsigned char>(*q) < 0x80 && !kAsciiSpace[static_cast<unsigned char>(*q)]) ++q;
      const std::size_t from = word.size();
      word.append(p, q);
      for (std::size_t i = from; i < word.size(); ++i) {
        if (word[i] >= 'A' && word[i] <= 'Z') word[i] = static_cast<char>(word[i] + 32);
      }
      p = q;
      continue;
    }
    word.push_back(*p++);
    if (b <= 0xBF) {
      if (const std::size_t k = unicode_space_tail(word)) {
        word.resize(word.size() - k);
        if (!word.empty()) on_word(word);
        word.clear();
      }
    }
  }
}

}  // namespace

std::vector<std::string> segment_words(std::string_view text) {
  std::vector<std::string> out;
  std::string word;
  auto emit = [&](const std::string& w) {
    auto s = strip_punct(w);
    if (!s.empty()) out.emplace_back(s);
  };
  scan(text, word, emit);
  if (!word.empty()) emit(word);
  return out;
}

WordCounter::WordCounter(const std::set<std::string>& lexicon) {
  for (const auto& w : lexicon) {
    slot_of_.emplace(w, words_.size());
    words_.push_back(w);
    max_len_ = std::max(max_len_, w.size());
  }
  counts_.assign(words_.size(), 0);
  word_.reserve(256);
}

void WordCounter::end_word() {
  const auto s = strip_punct(word_);
  if (s.empty()) return;
  ++total_;
  if (s.size() > max_len_) return;
  auto it = slot_of_.find(s);
  if (it != slot_of_.end()) ++counts_[it->second];
}

void WordCounter::feed(std::string_view bytes) {
  scan(bytes, word_, [this](const std::string&) { end_word(); });
}

void WordCounter::finish() {
  if (!word_.empty()) end_word();
  word_.clear();
}

FreqTable WordCounter::table() const {
  FreqTable t;
  for (std::size_t i = 0; i < words_.size(); ++i) t.counts[words_[i]] = counts_[i];
  t.total_tokens = total_;
  return t;
}

FreqTable count_text(std::string_view text, const std::set<std::string>& lexicon) {
  WordCounter c(lexicon);
  c.feed(text);
  c.finish();
  return c.table();
}

namespace {

FreqTable count_file(const std::filesystem::path& path, const std::set<std::string>& lexicon) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!f) throw Error("cannot read corpus file " + path.string());
  WordCounter c(lexicon);
  std::vector<char> buf(1 << 20);
  for (;;) {
    const std::size_t n = std::fread(buf.data(), 1, buf.size(), f.get());
    if (n > 0) c.feed(std::string_view(buf.data(), n));
    if (n < buf.size()) {
      if (std::ferror(f.get())) throw Error("cannot read corpus file " + path.string());
      break;
    }
  }
  c.finish();
  return c.table();
}

}  // namespace

FreqTable count_corpus(const std::vector<std::filesystem::path>& paths, const std::set<std::string>& lexicon,
                       unsigned threads) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(paths.size(), 1)));

  FreqTable total = count_text({}, lexicon);
  std::vector<FreqTable> partial(paths.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::string error;

  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < paths.size();) {
      try {
        partial[i] = count_file(paths[i], lexicon);
      } catch (const std::exception& e) {
        std::lock_guard lk(err_mu);
        if (error.empty()) error = e.what();
      }
    }
  };
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (!error.empty()) throw Error(error);
  for (const auto& p : partial) total.merge(p);
  return total;
}

// ---------------------------------------------------------------------------

std::set<std::string> GroupLexicon::words() const {
  std::set<std::string> s(advantaged.begin(), advantaged.end());
  s.insert(disadvantaged.begin(), disadvantaged.end());
  return s;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  for (auto& c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
  }
  return s;
}

}  // namespace

std::vector<LexiconEntry> parse_lexicon(std::istream& in) {
  std::vector<LexiconEntry> out;
  std::optional<std::pair<std::string, Group>> section;
  std::string raw;
  for (std::size_t line_no = 1; std::getline(in, raw); ++line_no) {
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const std::string where = "lexicon line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(where + ": unterminated header");
      std::istringstream hs(line.substr(1, line.size() - 2));
      std::string type, group, extra;
      hs >> type >> group;
      if (type.empty() || group.empty() || (hs >> extra)) throw Error(where + ": header must be [<bias_type> <group>]");
      try {
        section.emplace(type, group_from_string(group));
      } catch (const Error& e) {
        throw Error(where + ": " + e.what());
      }
      continue;
    }
    if (!section) throw Error(where + ": word before any group header");
    LexiconEntry e{section->first, section->second, line, 1.0};
    if (const auto tab = line.find('\t'); tab != std::string::npos) {
      e.word = trim(line.substr(0, tab));
      const std::string w = trim(line.substr(tab + 1));
      try {
        std::size_t used = 0;
        e.weight = std::stod(w, &used);
        if (used != w.size() || !(e.weight >= 0)) throw std::invalid_argument(w);
      } catch (const std::exception&) {
        throw Error(where + ": bad weight '" + w + "'");
      }
    }
    e.word = lower(e.word);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<LexiconEntry> load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return parse_lexicon(in);
}

void write_lexicon(std::ostream& out, const std::vector<LexiconEntry>& entries) {
  std::optional<std::pair<std::string, Group>> section;
  for (const auto& e : entries) {
    if (!section || section->first != e.bias_type || section->second != e.group) {
      section.emplace(e.bias_type, e.group);
      out << '[' << e.bias_type << ' ' << to_string(e.group) << "]\n";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", e.weight);
    out << e.word << '\t' << buf << '\n';
  }
}

std::set<std::string> parse_stoplist(std::istream& in) {
  std::set<std::string> out;
  std::string raw;
  while (std::getline(in, raw)) {
    const std::string w = trim(raw);
    if (!w.empty() && w[0] != '#') out.insert(lower(w));
  }
  return out;
}

std::set<std::string> load_stoplist(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return parse_stoplist(in);
}

std::vector<LexiconEntry> lexicon_from_cp(const std::vector<TestInstance>& instances) {
  std::map<std::tuple<std::string, Group, std::string>, double> weight;
  for (const auto& inst : instances) {
    if (!inst.group) throw Error("instance " + inst.id + " has no group label");
    const Group own = *inst.group;
    const Group other = own == Group::advantaged ? Group::disadvantaged : Group::advantaged;
    const auto a = segment_words(inst.sentence(Role::stereotype).text);
    const auto b = segment_words(inst.sentence(Role::antistereotype).text);
    const auto [sa, sb] = split_tokens(a, b);
    for (auto p : sa.modified) weight[{inst.bias_type, own, a[p]}] += 1.0;
    for (auto p : sb.modified) weight[{inst.bias_type, other, b[p]}] += 1.0;
  }
  std::vector<LexiconEntry> out;
  for (const auto& [key, w] : weight) out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), w});
  return out;
}

std::vector<GroupLexicon> assemble_lexicons(const std::vector<LexiconEntry>& entries,
                                            const std::set<std::string>& stoplist, const FreqTable* table) {
  // bias type -> word -> weight per group
  std::map<std::string, std::map<std::string, std::array<double, 2>>> merged;
  std::map<std::string, std::map<std::string, std::array<bool, 2>>> listed;
  for (const auto& e : entries) {
    const std::string w = lower(trim(e.word));
    if (w.empty() || stoplist.count(w)) continue;
    const auto g = static_cast<std::size_t>(e.group);
    merged[e.bias_type][w][g] += e.weight;
    listed[e.bias_type][w][g] = true;
  }

  std::vector<GroupLexicon> out;
  for (const auto& [type, words] : merged) {
    const auto& in = listed[type];
    // Corpus total per group over the words listed only there.
    std::array<std::uint64_t, 2> corpus{0, 0};
    if (table) {
      for (const auto& [w, g] : in) {
        if (g[0] != g[1]) corpus[g[0] ? 0 : 1] += table->count(w);
      }
    }
    GroupLexicon lex;
    lex.bias_type = type;
    for (const auto& [w, wt] : words) {
      const auto& g = in.at(w);
      Group to;
      if (g[0] && !g[1]) {
        to = Group::advantaged;
      } else if (g[1] && !g[0]) {
        to = Group::disadvantaged;
      } else if (wt[0] != wt[1]) {
        to = wt[0] > wt[1] ? Group::advantaged : Group::disadvantaged;
      } else {
        to = corpus[1] > corpus[0] ? Group::disadvantaged : Group::advantaged;
      }
      (to == Group::advantaged ? lex.advantaged : lex.disadvantaged).push_back(w);
    }
    out.push_back(std::move(lex));
  }
  return out;
}

// ---------------------------------------------------------------------------

MeanRank mean_rank(const FreqTable& table, const GroupLexicon& lexicon, std::size_t top_k, RankSelection selection) {
  if (top_k == 0) throw Error("mean rank: top_k must be positive");
  if (selection == RankSelection::per_group && top_k % 2 != 0) throw Error("mean rank: per-group selection needs even top_k");
  for (const auto& w : lexicon.advantaged) {
    if (std::find(lexicon.disadvantaged.begin(), lexicon.disadvantaged.end(), w) != lexicon.disadvantaged.end()) {
      throw Error("mean rank: '" + w + "' is listed in both groups of " + lexicon.bias_type);
    }
  }

  auto by_count = [](const RankedWord& a, const RankedWord& b) {
    return a.count != b.count ? a.count > b.count : a.word < b.word;
  };
  auto collect = [&](const std::vector<std::string>& words, Group g) {
    std::vector<RankedWord> v;
    for (const auto& w : words) v.push_back({w, table.count(w), g, 0});
    std::sort(v.begin(), v.end(), by_count);
    return v;
  };
  auto adv = collect(lexicon.advantaged, Group::advantaged);
  auto dis = collect(lexicon.disadvantaged, Group::disadvantaged);

  MeanRank r;
  r.bias_type = lexicon.bias_type;
  r.top_k = top_k;

  std::vector<RankedWord> pool;
  std::vector<RankedWord> rest;
  auto take = [&](std::vector<RankedWord>& from, std::size_t k) {
    std::size_t taken = 0;
    for (auto& w : from) {
      if (taken < k && w.count > 0) {
        pool.push_back(w);
        ++taken;
      } else {
        rest.push_back(w);
      }
    }
    return taken;
  };
  if (selection == RankSelection::per_group) {
    const std::size_t half = top_k / 2;
    const bool full_a = take(adv, half) == half;
    const bool full_d = take(dis, half) == half;
    r.short_list = !full_a || !full_d;
  } else {
    std::vector<RankedWord> all = adv;
    all.insert(all.end(), dis.begin(), dis.end());
    std::sort(all.begin(), all.end(), by_count);
    r.short_list = take(all, top_k) < top_k;
  }
  std::sort(pool.begin(), pool.end(), by_count);
  std::sort(rest.begin(), rest.end(), by_count);

  double sum[2] = {0, 0};
  std::size_t n[2] = {0, 0};
  for (std::size_t i = 0; i < pool.size(); ++i) {
    pool[i].rank = i + 1;
    const auto g = static_cast<std::size_t>(pool[i].group);
    sum[g] += static_cast<double>(i + 1);
    ++n[g];
  }
  if (n[0]) r.advantaged = sum[0] / static_cast<double>(n[0]);
  if (n[1]) r.disadvantaged = sum[1] / static_cast<double>(n[1]);
  r.missing_group = !n[0] || !n[1];
  r.ranked = std::move(pool);
  r.ranked.insert(r.ranked.end(), rest.begin(), rest.end());
  return r;
}

void write_rank_csv(std::ostream& out, const std::vector<MeanRank>& ranks) {
  out << "bias_type,word,count,group,rank\n";
  for (const auto& r : ranks) {
    for (const auto& w : r.ranked) {
      out << csv_escape(r.bias_type) << ',' << csv_escape(w.word) << ',' << w.count << ',' << to_string(w.group) << ',';
      if (w.rank) out << w.rank;
      out << '\n';
    }
  }
}

std::vector<GroupCounts> parse_group_counts(std::istream& in) {
  CsvReader csv(in);
  std::vector<std::string> row;
  if (!csv.next(row) || row != std::vector<std::string>{"bias_type", "group", "word", "count"}) {
    throw Error("group counts: header must be bias_type,group,word,count");
  }
  std::map<std::string, GroupCounts> by_type;
  while (csv.next(row)) {
    const std::string where = "group counts line " + std::to_string(csv.line());
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != 4) throw Error(where + ": expected 4 fields");
    auto& gc = by_type[row[0]];
    gc.lexicon.bias_type = row[0];
    Group g;
    std::uint64_t count = 0;
    try {
      g = group_from_string(row[1]);
      std::size_t used = 0;
      if (row[3].empty() || row[3].find_first_not_of("0123456789") != std::string::npos) {
        throw std::invalid_argument("bad count '" + row[3] + "'");
      }
      count = std::stoull(row[3], &used);
    } catch (const std::exception& e) {
      throw Error(where + ": " + e.what());
    }
    const std::string w = lower(row[2]);
    if (gc.table.counts.count(w)) throw Error(where + ": duplicate word '" + w + "'");
    (g == Group::advantaged ? gc.lexicon.advantaged : gc.lexicon.disadvantaged).push_back(w);
    gc.table.counts[w] = count;
    gc.table.total_tokens += count;
  }
  std::vector<GroupCounts> out;
  for (auto& [_, gc] : by_type) {
    std::sort(gc.lexicon.advantaged.begin(), gc.lexicon.advantaged.end());
    std::sort(gc.lexicon.disadvantaged.begin(), gc.lexicon.disadvantaged.end());
    out.push_back(std::move(gc));
  }
  return out;
}

std::vector<GroupCounts> load_group_counts(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return parse_group_counts(in);
}

}  // namespace mlmbias
