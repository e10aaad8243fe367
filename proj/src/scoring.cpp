#include "mlmbias/scoring.hpp"

#include <cmath>
#include <istream>
#include <map>
#include <ostream>

#include "json.hpp"
#include "mlmbias/error.hpp"

namespace mlmbias {

SentenceEvidence assemble(const MaskPlan& plan, const Sentence& sentence,
                          const std::vector<AdapterResponse>& responses) {
  std::map<std::string_view, const AdapterResponse*> by_id;
  for (const auto& r : responses) by_id[r.id] = &r;

  std::vector<const AdapterResponse*> matched;
  matched.reserve(plan.requests.size());
  for (const auto& req : plan.requests) {
    auto it = by_id.find(req.id);
    if (it == by_id.end()) throw Error("no response for request " + req.id);
    matched.push_back(it->second);
  }

  SentenceEvidence ev;
  ev.measure = plan.measure;
  ev.length = sentence.size();
  for (const auto& slot : plan.assembly) {
    const auto& req = plan.requests.at(slot.request);
    const auto& resp = *matched[slot.request];
    if (slot.entry >= resp.logprobs.size() || slot.entry >= resp.argmax.size()) {
      throw Error("response " + resp.id + " has no entry " + std::to_string(slot.entry));
    }
    const auto& target = sentence.subtokens.at(slot.subtoken);
    auto lp = resp.logprobs[slot.entry].find(target);
    if (lp == resp.logprobs[slot.entry].end()) throw Error("response " + resp.id + " lacks '" + target + "'");
    if (req.positions.at(slot.entry) != slot.subtoken) throw Error("assembly slot disagrees with request " + req.id);
    ev.positions.push_back(slot.subtoken);
    ev.logprobs.push_back(lp->second);
    ev.argmax.push_back(resp.argmax[slot.entry]);
  }
  if (plan.measure == Measure::aula) {
    const auto& resp = *matched.at(0);
    if (!resp.attention) throw Error("response " + resp.id + " carries no attention weights");
    ev.attention = *resp.attention;
  }
  return ev;
}

namespace {

void expect_measure(const SentenceEvidence& ev, Measure m) {
  if (ev.measure != m) {
    throw Error("evidence for " + std::string(to_string(ev.measure)) + " used as " + std::string(to_string(m)));
  }
}

// Every position 0..|S|-1 exactly once, in order.
void expect_all_positions(const SentenceEvidence& ev) {
  if (ev.length == 0) throw Error(std::string(to_string(ev.measure)) + ": empty sentence");
  if (ev.positions.size() != ev.length || ev.logprobs.size() != ev.length) {
    throw Error(std::string(to_string(ev.measure)) + ": missing position (have " +
                std::to_string(ev.positions.size()) + " of " + std::to_string(ev.length) + ")");
  }
  for (std::size_t i = 0; i < ev.length; ++i) {
    if (ev.positions[i] != i) throw Error(std::string(to_string(ev.measure)) + ": missing position " + std::to_string(i));
  }
}

void expect_positions(const SentenceEvidence& ev, const std::vector<std::size_t>& wanted, std::string_view what) {
  if (ev.positions != wanted || ev.logprobs.size() != wanted.size()) {
    throw Error(std::string(to_string(ev.measure)) + ": evidence does not cover the " + std::string(what) + " positions");
  }
}

double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

double pll(const SentenceEvidence& ev) {
  expect_measure(ev, Measure::pll);
  expect_all_positions(ev);
  return sum(ev.logprobs);
}

double sss(const SentenceEvidence& ev, const TokenSplit& split) {
  expect_measure(ev, Measure::sss);
  if (split.modified.empty()) throw Error("sss: |M| = 0");
  expect_positions(ev, split.modified, "modified");
  return sum(ev.logprobs) / static_cast<double>(split.modified.size());
}

CpsValue cps(const SentenceEvidence& ev, const TokenSplit& split) {
  expect_measure(ev, Measure::cps);
  expect_positions(ev, split.unmodified, "unmodified");
  return {sum(ev.logprobs), split.unmodified.empty()};
}

double aul(const SentenceEvidence& ev) {
  expect_measure(ev, Measure::aul);
  expect_all_positions(ev);
  return sum(ev.logprobs) / static_cast<double>(ev.length);
}

double aula(const SentenceEvidence& ev) {
  expect_measure(ev, Measure::aula);
  expect_all_positions(ev);
  if (ev.attention.size() != ev.length) throw Error("aula: attention weights absent");
  double s = 0.0;
  for (std::size_t i = 0; i < ev.length; ++i) s += ev.attention[ev.positions[i]] * ev.logprobs[i];
  return s / static_cast<double>(ev.length);
}

double all_masked_score(const SentenceEvidence& ev) {
  expect_measure(ev, Measure::all_masked);
  expect_all_positions(ev);
  return sum(ev.logprobs) / static_cast<double>(ev.length);
}

ScoreRecord score_sentence(std::string_view instance_id, const Sentence& sentence, const SentenceEvidence& ev) {
  ScoreRecord r{std::string(instance_id), sentence.role, ev.measure, 0.0, false};
  switch (ev.measure) {
    case Measure::pll: r.value = pll(ev); break;
    case Measure::sss: r.value = sss(ev, sentence.split); break;
    case Measure::cps: {
      const auto c = cps(ev, sentence.split);
      r.value = c.value;
      r.degenerate = c.empty_unmodified;
      break;
    }
    case Measure::aul: r.value = aul(ev); break;
    case Measure::aula: r.value = aula(ev); break;
    case Measure::all_masked: r.value = all_masked_score(ev); break;
  }
  if (!std::isfinite(r.value)) throw Error("non-finite score for instance " + r.instance_id);
  return r;
}

// ---------------------------------------------------------------------------

using json = nlohmann::ordered_json;

std::string to_json_line(const ScoreRecord& r) {
  json j;
  j["instance_id"] = r.instance_id;
  j["role"] = to_string(r.role);
  j["measure"] = to_string(r.measure);
  j["value"] = r.value;
  if (r.degenerate) j["degenerate"] = true;
  return j.dump();
}

ScoreRecord record_from_json_line(std::string_view line) {
  try {
    const json j = json::parse(line);
    ScoreRecord r;
    r.instance_id = j.at("instance_id").get<std::string>();
    r.role = role_from_string(j.at("role").get<std::string>());
    r.measure = measure_from_string(j.at("measure").get<std::string>());
    r.value = j.at("value").get<double>();
    r.degenerate = j.value("degenerate", false);
    return r;
  } catch (const json::exception& e) {
    throw Error(std::string("score record: ") + e.what());
  }
}

void write_records(std::ostream& out, const std::vector<ScoreRecord>& records) {
  for (const auto& r : records) out << to_json_line(r) << '\n';
}

std::vector<ScoreRecord> read_records(std::istream& in) {
  std::vector<ScoreRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(record_from_json_line(line));
  }
  return out;
}

}  // namespace mlmbias
