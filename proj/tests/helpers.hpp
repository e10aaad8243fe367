#pragma once

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "mlmbias/dataset.hpp"
#include "mlmbias/planner.hpp"
#include "mlmbias/protocol.hpp"
#include "mlmbias/scoring.hpp"

namespace testing_helpers {

inline std::filesystem::path temp_dir(const std::string& tag) {
  auto base = std::filesystem::temp_directory_path() / ("mlmbias_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(base);
  std::filesystem::create_directories(base);
  return base;
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline mlmbias::Sentence sentence(std::vector<std::string> subtokens, mlmbias::TokenSplit split = {},
                                  mlmbias::Role role = mlmbias::Role::stereotype) {
  mlmbias::Sentence s;
  for (const auto& t : subtokens) s.text += (s.text.empty() ? "" : " ") + t;
  s.subtokens = std::move(subtokens);
  s.split = std::move(split);
  s.role = role;
  return s;
}

// A table giving every subtoken of `texts` (as the mock tokenizer splits
// them) a distinct negative log-probability.
inline mlmbias::MockTables table_for(const std::vector<std::string>& texts, std::uint64_t seed = 1) {
  mlmbias::MockTables t;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-9.0, -0.05);
  for (const auto& text : texts) {
    for (const auto& tok : mlmbias::mock_tokenize(text, t).subtokens) {
      if (!t.logprobs.count(tok)) t.logprobs[tok] = d(rng);
    }
  }
  return t;
}

// Plans one measure, answers it with the mock and assembles the evidence.
inline mlmbias::SentenceEvidence mock_evidence(const mlmbias::Sentence& s, mlmbias::Measure m,
                                               const mlmbias::MockTables& t, const std::string& prefix = "t") {
  const auto p = mlmbias::plan(s, s.split, m, prefix);
  std::vector<mlmbias::AdapterResponse> resp;
  for (const auto& r : p.requests) resp.push_back(mlmbias::mock_adapter(r, t));
  return mlmbias::assemble(p, s, resp);
}

inline double mock_score(const mlmbias::Sentence& s, mlmbias::Measure m, const mlmbias::MockTables& t) {
  return mlmbias::score_sentence("i", s, mock_evidence(s, m, t)).value;
}

// Reference word splitter working on decoded code points.
inline std::vector<std::string> naive_words(const std::string& text) {
  static const std::set<std::uint32_t> spaces = {0x09, 0x0A, 0x0B, 0x0C, 0x0D, 0x20, 0x85, 0xA0, 0x1680,
                                                 0x2000, 0x2001, 0x2002, 0x2003, 0x2004, 0x2005, 0x2006,
                                                 0x2007, 0x2008, 0x2009, 0x200A, 0x2028, 0x2029, 0x202F,
                                                 0x205F, 0x3000};
  static const std::set<std::uint32_t> punct = {0x2018, 0x2019, 0x201C, 0x201D, 0x2013, 0x2014,
                                                0x2026, 0xAB, 0xBB, 0xA1, 0xBF};
  struct Cp {
    std::uint32_t value;
    std::string bytes;
  };
  std::vector<Cp> cps;
  for (std::size_t i = 0; i < text.size();) {
    const auto b = static_cast<unsigned char>(text[i]);
    std::size_t len = b < 0x80 ? 1 : (b >> 5) == 6 ? 2 : (b >> 4) == 14 ? 3 : (b >> 3) == 30 ? 4 : 1;
    if (i + len > text.size()) len = 1;
    std::uint32_t v = len == 1 ? b : b & (0xFF >> (len + 1));
    for (std::size_t k = 1; k < len; ++k) v = (v << 6) | (static_cast<unsigned char>(text[i + k]) & 0x3F);
    cps.push_back({v, text.substr(i, len)});
    i += len;
  }
  auto is_punct = [&](std::uint32_t v) { return (v < 0x80 && std::ispunct(static_cast<int>(v))) || punct.count(v); };
  std::vector<std::string> out;
  std::vector<Cp> word;
  auto flush = [&] {
    std::size_t b = 0, e = word.size();
    while (b < e && is_punct(word[b].value)) ++b;
    while (e > b && is_punct(word[e - 1].value)) --e;
    std::string w;
    for (std::size_t k = b; k < e; ++k) {
      for (char c : word[k].bytes) w.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c + 32) : c);
    }
    if (!w.empty()) out.push_back(w);
    word.clear();
  };
  for (const auto& c : cps) {
    if (spaces.count(c.value)) flush();
    else word.push_back(c);
  }
  flush();
  return out;
}

// Random text mixing lexicon words, case, punctuation and Unicode spaces.
inline std::string synthetic_corpus(std::size_t bytes, const std::vector<std::string>& vocab, std::uint64_t seed) {
  static const char* seps[] = {" ", " ", " ", "\n", "\t", "\r\n", "\xC2\xA0", "\xE2\x80\x83", "\xE3\x80\x80",
                               "\xE2\x80\xA8", "\xC2\x85"};
  static const char* wraps[] = {"", "", "", "\"", "(", "\xE2\x80\x9C", "'", "\xC2\xBF"};
  static const char* tails[] = {"", "", "", ".", ",", "!?", "\xE2\x80\x9D", "\xE2\x80\xA6", "'s", "-"};
  std::mt19937_64 rng(seed);
  std::string out;
  out.reserve(bytes + 64);
  while (out.size() < bytes) {
    std::string w = vocab[rng() % vocab.size()];
    if (rng() % 4 == 0) {
      for (auto& c : w) {
        if (c >= 'a' && c <= 'z' && rng() % 2) c = static_cast<char>(c - 32);
      }
    }
    out += wraps[rng() % 8];
    out += w;
    out += tails[rng() % 10];
    out += seps[rng() % 11];
  }
  return out;
}

}  // namespace testing_helpers
