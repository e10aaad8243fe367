#include "mlmbias/analysis.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include "mlmbias/error.hpp"

namespace mlmbias {

namespace {

using RecordKey = std::pair<std::string_view, Role>;

std::map<RecordKey, const ScoreRecord*> index_records(const std::vector<ScoreRecord>& records, Measure measure) {
  std::map<RecordKey, const ScoreRecord*> out;
  for (const auto& r : records) {
    if (r.measure != measure) continue;
    if (!out.emplace(RecordKey{r.instance_id, r.role}, &r).second) {
      throw Error("duplicate " + std::string(to_string(measure)) + " record for instance " + r.instance_id);
    }
  }
  return out;
}

}  // namespace

BiasReport bias_score(const std::vector<ScoreRecord>& records, const std::vector<TestInstance>& instances,
                      Measure measure) {
  const auto index = index_records(records, measure);
  BiasReport report;
  report.measure = measure;
  report.dataset = instances.empty() ? DatasetKind::cp : instances.front().dataset;
  if (report.dataset == DatasetKind::cp) {
    report.advantaged = BiasCell{};
    report.disadvantaged = BiasCell{};
  }

  for (const auto& inst : instances) {
    auto lookup = [&](Role role) {
      auto it = index.find(RecordKey{inst.id, role});
      if (it == index.end()) {
        throw Error("missing " + std::string(to_string(measure)) + " " + std::string(to_string(role)) +
                    " record for instance " + inst.id);
      }
      return it->second;
    };
    const auto* st = lookup(Role::stereotype);
    const auto* at = lookup(Role::antistereotype);
    if (st->degenerate || at->degenerate) {
      ++report.excluded;
      continue;
    }
    report.overall.add(st->value, at->value);
    report.by_bias_type[inst.bias_type].add(st->value, at->value);
    if (inst.group && report.advantaged) {
      (*inst.group == Group::advantaged ? *report.advantaged : *report.disadvantaged).add(st->value, at->value);
    }
  }
  return report;
}

GroupBiasReport group_bias(const std::vector<ScoreRecord>& records, const std::vector<TestInstance>& instances,
                           Measure measure) {
  for (const auto& inst : instances) {
    if (!inst.group) throw Error("group bias needs CP instances; " + inst.id + " has no group");
  }
  const auto full = bias_score(records, instances, measure);
  GroupBiasReport g;
  g.measure = measure;
  if (full.advantaged && full.advantaged->n > 0) g.advantaged = full.advantaged;
  if (full.disadvantaged && full.disadvantaged->n > 0) g.disadvantaged = full.disadvantaged;
  if (g.advantaged && g.disadvantaged) {
    g.abs_diff = std::abs(g.advantaged->percentage() - g.disadvantaged->percentage());
  }
  return g;
}

// ---------------------------------------------------------------------------

void EvidenceStore::add(const std::string& instance_id, Role role, SentenceEvidence evidence) {
  const Measure m = evidence.measure;
  items_[{instance_id, role, m}] = std::move(evidence);
}

const SentenceEvidence* EvidenceStore::find(const std::string& instance_id, Role role, Measure measure) const {
  auto it = items_.find({instance_id, role, measure});
  return it == items_.end() ? nullptr : &it->second;
}

const SentenceEvidence& EvidenceStore::get(const std::string& instance_id, Role role, Measure measure) const {
  if (const auto* ev = find(instance_id, role, measure)) return *ev;
  throw Error("no " + std::string(to_string(measure)) + " evidence for " + instance_id + "/" +
              std::string(to_string(role)));
}

namespace {

// argmax indexed by sentence position.
std::vector<const std::string*> argmax_by_position(const SentenceEvidence& ev) {
  std::vector<const std::string*> out(ev.length, nullptr);
  for (std::size_t k = 0; k < ev.positions.size() && k < ev.argmax.size(); ++k) {
    if (ev.positions[k] < ev.length) out[ev.positions[k]] = &ev.argmax[k];
  }
  return out;
}

const std::string& argmax_at(const std::vector<const std::string*>& by_pos, std::size_t pos,
                             const std::string& instance_id) {
  if (pos >= by_pos.size() || by_pos[pos] == nullptr) {
    throw Error("argmax missing at position " + std::to_string(pos) + " of instance " + instance_id);
  }
  return *by_pos[pos];
}

double pct(std::size_t num, std::size_t den) {
  return den == 0 ? std::nan("") : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

AccuracyReport cp_token_accuracy(const std::vector<TestInstance>& instances, const EvidenceStore& store,
                                 Measure measure) {
  AccuracyReport rep;
  rep.label = std::string(to_string(measure)) + "_cp";
  rep.measure = measure;
  rep.dataset = DatasetKind::cp;
  double sentence_sum = 0.0;
  std::size_t sentences = 0;
  for (const auto& inst : instances) {
    for (Role role : {Role::stereotype, Role::antistereotype}) {
      const auto& s = inst.sentence(role);
      const auto by_pos = argmax_by_position(store.get(inst.id, role, measure));
      std::size_t correct = 0;
      for (std::size_t u : s.split.unmodified) {
        const bool ok = argmax_at(by_pos, u, inst.id) == s.subtokens.at(u);
        correct += ok;
        rep.outcomes.push_back(ok);
      }
      rep.n_correct += correct;
      rep.n_evaluated += s.split.unmodified.size();
      if (!s.split.unmodified.empty()) {
        sentence_sum += static_cast<double>(correct) / static_cast<double>(s.split.unmodified.size());
        ++sentences;
      }
    }
  }
  rep.accuracy = pct(rep.n_correct, rep.n_evaluated);
  rep.secondary = sentences == 0 ? std::nan("") : 100.0 * sentence_sum / static_cast<double>(sentences);
  return rep;
}

SlotEvidence assemble_slots(const SlotPlan& plan, const std::vector<SlotCandidate>& candidates,
                            const std::vector<AdapterResponse>& responses) {
  if (plan.request_of.size() != candidates.size()) throw Error("slot plan does not match its candidates");
  std::map<std::string_view, const AdapterResponse*> by_id;
  for (const auto& r : responses) by_id[r.id] = &r;
  SlotEvidence ev;
  ev.candidates = candidates;
  ev.equal_counts = plan.equal_counts;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const auto& req = plan.requests.at(plan.request_of[c]);
    auto it = by_id.find(req.id);
    if (it == by_id.end()) throw Error("missing candidate request " + req.id);
    if (it->second->argmax.size() != candidates[c].subtokens.size()) {
      throw Error("response " + req.id + " has the wrong number of slots");
    }
    ev.predicted.push_back(it->second->argmax);
  }
  return ev;
}

AccuracyReport ss_token_accuracy(const std::vector<TestInstance>& instances,
                                 const std::map<std::string, SlotEvidence>& slots) {
  AccuracyReport rep;
  rep.label = "sss_ss";
  rep.measure = Measure::sss;
  rep.dataset = DatasetKind::ss;
  rep.n_equal_subtokens = 0;
  std::size_t slot_total = 0, slot_correct = 0;
  for (const auto& inst : instances) {
    auto it = slots.find(inst.id);
    if (it == slots.end()) throw Error("missing candidate request for instance " + inst.id);
    const auto& ev = it->second;

    std::vector<std::size_t> judged;  // stereotype and antistereotype candidates
    for (std::size_t c = 0; c < ev.candidates.size(); ++c) {
      if (ev.candidates[c].role != Role::unrelated) judged.push_back(c);
    }
    if (judged.size() != 2) throw Error("instance " + inst.id + " needs stereotype and antistereotype candidates");
    const auto& a = ev.candidates[judged[0]].subtokens;
    const auto& b = ev.candidates[judged[1]].subtokens;
    if (a.size() == b.size()) ++*rep.n_equal_subtokens;

    bool correct = false;
    for (std::size_t c : judged) correct = correct || ev.predicted[c] == ev.candidates[c].subtokens;
    rep.outcomes.push_back(correct);
    rep.n_correct += correct;
    ++rep.n_evaluated;

    // Token level: a slot counts once per distinct prediction sequence.
    if (a.size() == b.size()) {
      for (std::size_t s = 0; s < a.size(); ++s) {
        const auto& p = ev.predicted[judged[0]][s];
        slot_correct += (p == a[s] || p == b[s]);
        ++slot_total;
      }
    } else {
      for (std::size_t c : judged) {
        for (std::size_t s = 0; s < ev.candidates[c].subtokens.size(); ++s) {
          slot_correct += ev.predicted[c][s] == ev.candidates[c].subtokens[s];
          ++slot_total;
        }
      }
    }
  }
  rep.accuracy = pct(rep.n_correct, rep.n_evaluated);
  rep.secondary = pct(slot_correct, slot_total);
  return rep;
}

AccuracyReport ss_span_accuracy(const std::vector<TestInstance>& instances, const EvidenceStore& store,
                                Measure measure, const std::vector<Role>& roles, std::string label) {
  AccuracyReport rep;
  rep.label = std::move(label);
  rep.measure = measure;
  rep.dataset = DatasetKind::ss;
  std::size_t tok_total = 0, tok_correct = 0;
  for (const auto& inst : instances) {
    bool considered = false, correct = false;
    for (Role role : roles) {
      const auto* s = inst.find(role);
      if (s == nullptr) continue;
      considered = true;
      const auto by_pos = argmax_by_position(store.get(inst.id, role, measure));
      bool span_ok = !s->split.modified.empty();
      for (std::size_t m : s->split.modified) span_ok = span_ok && argmax_at(by_pos, m, inst.id) == s->subtokens.at(m);
      correct = correct || span_ok;
      for (std::size_t p = 0; p < s->size(); ++p) {
        tok_correct += argmax_at(by_pos, p, inst.id) == s->subtokens[p];
        ++tok_total;
      }
    }
    if (!considered) {
      ++rep.n_skipped;
      continue;
    }
    rep.outcomes.push_back(correct);
    rep.n_correct += correct;
    ++rep.n_evaluated;
  }
  rep.accuracy = pct(rep.n_correct, rep.n_evaluated);
  rep.secondary = pct(tok_correct, tok_total);
  return rep;
}

AccuracyReport unrelated_accuracy(const std::vector<TestInstance>& instances, const EvidenceStore& store) {
  auto rep = ss_span_accuracy(instances, store, Measure::aul, {Role::unrelated}, "aul_ss_unrelated");
  rep.note = "subtoken counts differ from the original sentences; no paired significance test";
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform integer in [0, bound) by rejection; std::uniform_int_distribution
// is not specified bit-for-bit across standard libraries.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  for (;;) {
    const std::uint64_t x = rng();
    if (x < limit) return x % bound;
  }
}

}  // namespace

std::vector<TestInstance> perturb_shuffle(const std::vector<TestInstance>& instances, std::uint64_t seed) {
  std::vector<TestInstance> out = instances;
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t j = 0; j < out[i].sentences.size(); ++j) {
      auto& s = out[i].sentences[j];
      const std::size_t n = s.size();
      std::mt19937_64 rng(splitmix64(splitmix64(seed ^ splitmix64(i)) + j));
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      for (std::size_t k = n; k > 1; --k) std::swap(perm[k - 1], perm[uniform_below(rng, k)]);

      std::vector<std::size_t> new_pos(n);
      std::vector<std::string> subtokens(n);
      std::vector<CharSpan> offsets(s.offsets.empty() ? 0 : n);
      for (std::size_t k = 0; k < n; ++k) {
        subtokens[k] = s.subtokens[perm[k]];
        if (!offsets.empty()) offsets[k] = s.offsets[perm[k]];
        new_pos[perm[k]] = k;
      }
      s.subtokens = std::move(subtokens);
      s.offsets = std::move(offsets);
      for (auto& p : s.split.modified) p = new_pos[p];
      for (auto& p : s.split.unmodified) p = new_pos[p];
    }
  }
  return out;
}

}  // namespace mlmbias
