#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "helpers.hpp"
#include "mlmbias/error.hpp"
#include "mlmbias/scoring.hpp"

using namespace mlmbias;
using testing_helpers::mock_evidence;
using testing_helpers::mock_score;
using testing_helpers::sentence;

namespace {

MockTables table(std::map<std::string, double> lp, std::map<std::string, double> att = {}) {
  MockTables t;
  t.logprobs = std::move(lp);
  t.attention = std::move(att);
  return t;
}

}  // namespace

TEST(Scoring, PllExamples) {
  const auto t = table({{"a", -1.0}, {"b", -0.25}, {"c", -4.5}});
  EXPECT_EQ(mock_score(sentence({"a", "a", "a"}), Measure::pll, t), -3.0);
  EXPECT_EQ(mock_score(sentence({"c"}), Measure::pll, t), -4.5);
  EXPECT_EQ(mock_score(sentence({"a", "b", "c"}), Measure::pll, t), -1.0 - 0.25 - 4.5);
}

TEST(Scoring, SssExamples) {
  const auto t = table({{"x", -2.0}, {"p", -1.0}, {"q", -3.0}, {"u", -0.5}});
  EXPECT_EQ(mock_score(sentence({"u", "x"}, {{1}, {0}}), Measure::sss, t), -2.0);
  EXPECT_EQ(mock_score(sentence({"p", "u", "q"}, {{0, 2}, {1}}), Measure::sss, t), -2.0);
  // Lists, not sets: the repeated subtoken weighs twice.
  EXPECT_EQ(mock_score(sentence({"p", "p", "q", "u"}, {{0, 1, 2}, {3}}), Measure::sss, t), -5.0 / 3.0);
}

TEST(Scoring, CpsIsASum) {
  const auto t = table({{"u", -1.0}, {"m", -7.0}, {"v", -0.3}, {"w", -2.2}});
  EXPECT_EQ(mock_score(sentence({"m", "u", "u", "u"}, {{0}, {1, 2, 3}}), Measure::cps, t), -3.0);
  EXPECT_EQ(mock_score(sentence({"v", "m", "w"}, {{1}, {0, 2}}), Measure::cps, t), -0.3 + -2.2);
  const auto disjoint = sentence({"m"}, {{0}, {}});
  const auto r = score_sentence("i", disjoint, mock_evidence(disjoint, Measure::cps, t));
  EXPECT_EQ(r.value, 0.0);
  EXPECT_TRUE(r.degenerate);
}

TEST(Scoring, AulExamples) {
  const auto t = table({{"a", -1.0}, {"b", -2.0}, {"c", -3.0}});
  EXPECT_EQ(mock_score(sentence({"b", "b"}), Measure::aul, t), -2.0);
  EXPECT_EQ(mock_score(sentence({"a", "b", "c"}), Measure::aul, t), -2.0);
  EXPECT_EQ(mock_score(sentence({"c"}), Measure::aul, t), -3.0);
}

TEST(Scoring, AulaExamples) {
  const auto unit = table({{"a", -2.0}, {"b", -4.0}});
  const auto s = sentence({"a", "b"});
  EXPECT_EQ(mock_score(s, Measure::aula, unit), mock_score(s, Measure::aul, unit));
  EXPECT_EQ(mock_score(s, Measure::aula, table({{"a", -2.0}, {"b", -4.0}}, {{"a", 0.5}, {"b", 0.5}})), -1.5);
  EXPECT_EQ(mock_score(s, Measure::aula, table({{"a", -2.0}, {"b", -4.0}}, {{"a", 0.0}, {"b", 0.0}})), 0.0);
}

TEST(Scoring, AllMaskedEqualsAulUnderContextFreeMock) {
  const auto t = table({{"a", -1.5}, {"b", -0.1}});
  const auto s = sentence({"a", "b", "b", "a", "a"});
  EXPECT_EQ(mock_score(s, Measure::all_masked, t), mock_score(s, Measure::aul, t));
}

TEST(Scoring, ConstantAttentionScalesAul) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> lp(-8, -0.01), c(0.0, 3.0);
  for (int iter = 0; iter < 50; ++iter) {
    const double k = c(rng);
    MockTables t;
    std::vector<std::string> s1, s2;
    for (int i = 0; i < 1 + iter % 7; ++i) s1.push_back("a" + std::to_string(i));
    for (int i = 0; i < 1 + iter % 4; ++i) s2.push_back("b" + std::to_string(i));
    for (const auto& w : s1) t.logprobs[w] = lp(rng), t.attention[w] = k;
    for (const auto& w : s2) t.logprobs[w] = lp(rng), t.attention[w] = k;
    const auto x = sentence(s1), y = sentence(s2);
    EXPECT_NEAR(mock_score(x, Measure::aula, t), k * mock_score(x, Measure::aul, t), 1e-12);
    const double d_aula = mock_score(x, Measure::aula, t) - mock_score(y, Measure::aula, t);
    const double d_aul = mock_score(x, Measure::aul, t) - mock_score(y, Measure::aul, t);
    if (k > 0 && std::abs(d_aul) > 1e-9) EXPECT_EQ(d_aula > 0, d_aul > 0);
  }
}

TEST(Scoring, SpreadsheetOracle) {
  // Every term read straight off the table; no planner involved.
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> lp(-9, -0.01), at(0.0, 2.0);
  for (int iter = 0; iter < 100; ++iter) {
    MockTables t;
    std::vector<std::string> toks;
    TokenSplit split;
    const int n = 1 + iter % 9;
    for (int i = 0; i < n; ++i) {
      const std::string w = "w" + std::to_string(rng() % 6);
      toks.push_back(w);
      if (!t.logprobs.count(w)) t.logprobs[w] = lp(rng), t.attention[w] = at(rng);
      (i % 3 == 1 ? split.modified : split.unmodified).push_back(static_cast<std::size_t>(i));
    }
    const auto s = sentence(toks, split);
    double all = 0, weighted = 0, m = 0, u = 0;
    for (int i = 0; i < n; ++i) {
      all += t.logprobs[toks[i]];
      weighted += t.attention[toks[i]] * t.logprobs[toks[i]];
    }
    for (auto p : split.modified) m += t.logprobs[toks[p]];
    for (auto p : split.unmodified) u += t.logprobs[toks[p]];
    EXPECT_NEAR(mock_score(s, Measure::pll, t), all, 1e-12);
    EXPECT_NEAR(mock_score(s, Measure::aul, t), all / n, 1e-12);
    EXPECT_NEAR(mock_score(s, Measure::aula, t), weighted / n, 1e-12);
    EXPECT_NEAR(mock_score(s, Measure::all_masked, t), all / n, 1e-12);
    EXPECT_NEAR(mock_score(s, Measure::cps, t), u, 1e-12);
    if (!split.modified.empty()) {
      EXPECT_NEAR(mock_score(s, Measure::sss, t), m / static_cast<double>(split.modified.size()), 1e-12);
    }
  }
}

TEST(Scoring, ArrivalOrderIrrelevant) {
  const auto t = table({{"a", -1.0}, {"b", -2.5}, {"c", -0.7}});
  const auto s = sentence({"a", "b", "c", "a"}, {{1}, {0, 2, 3}});
  for (Measure m : {Measure::pll, Measure::cps}) {
    const auto p = plan(s, s.split, m, "o");
    std::vector<AdapterResponse> resp;
    for (const auto& r : p.requests) resp.push_back(mock_adapter(r, t));
    const double forward = score_sentence("i", s, assemble(p, s, resp)).value;
    std::reverse(resp.begin(), resp.end());
    EXPECT_EQ(score_sentence("i", s, assemble(p, s, resp)).value, forward);
  }
}

TEST(Scoring, MissingResponsesAndAttentionFail) {
  const auto t = table({{"a", -1.0}, {"b", -2.0}});
  const auto s = sentence({"a", "b"}, {{0}, {1}});
  const auto p = plan(s, s.split, Measure::pll, "o");
  std::vector<AdapterResponse> resp{mock_adapter(p.requests[0], t)};
  EXPECT_THROW(assemble(p, s, resp), Error);

  auto aula = plan(s, s.split, Measure::aula, "o");
  auto r = mock_adapter(aula.requests[0], t);
  r.attention.reset();
  EXPECT_THROW(assemble(aula, s, {r}), Error);

  auto ev = mock_evidence(s, Measure::aul, t);
  ev.positions.pop_back();
  ev.logprobs.pop_back();
  EXPECT_THROW(aul(ev), Error);
  EXPECT_THROW(pll(mock_evidence(s, Measure::aul, t)), Error);
  EXPECT_THROW(sss(mock_evidence(s, Measure::sss, t), TokenSplit{}), Error);
}

TEST(Scoring, RecordsRoundTrip) {
  std::vector<ScoreRecord> recs = {{"0", Role::stereotype, Measure::aula, -1.0 / 3.0, false},
                                   {"0", Role::antistereotype, Measure::cps, 0.0, true}};
  std::stringstream buf;
  write_records(buf, recs);
  EXPECT_EQ(read_records(buf), recs);
  EXPECT_THROW(record_from_json_line(R"({"instance_id":"0"})"), Error);
}
