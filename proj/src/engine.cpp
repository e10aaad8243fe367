#include "mlmbias/engine.hpp"

#include <algorithm>

#include "mlmbias/alignment.hpp"
#include "mlmbias/error.hpp"

namespace mlmbias {

namespace {

bool has(const std::vector<Measure>& ms, Measure m) { return std::find(ms.begin(), ms.end(), m) != ms.end(); }

bool fully_tokenized(const TestInstance& inst) {
  return std::all_of(inst.sentences.begin(), inst.sentences.end(), [](const Sentence& s) { return s.tokenized(); });
}

// Sends requests in batches; responses come back in request order.
std::vector<AdapterResponse> send(AdapterClient& client, const std::vector<AdapterRequest>& requests,
                                  std::size_t batch) {
  std::vector<AdapterResponse> out;
  out.reserve(requests.size());
  batch = std::max<std::size_t>(batch, 1);
  for (std::size_t i = 0; i < requests.size(); i += batch) {
    const auto end = std::min(requests.size(), i + batch);
    auto part = client.score(std::vector<AdapterRequest>(requests.begin() + static_cast<std::ptrdiff_t>(i),
                                                         requests.begin() + static_cast<std::ptrdiff_t>(end)));
    for (auto& r : part) out.push_back(std::move(r));
  }
  return out;
}

std::vector<AdapterResponse> slice(const std::vector<AdapterResponse>& all, std::size_t begin, std::size_t n) {
  return {all.begin() + static_cast<std::ptrdiff_t>(begin), all.begin() + static_cast<std::ptrdiff_t>(begin + n)};
}

}  // namespace

void tokenize_instances(AdapterClient& client, std::vector<TestInstance>& instances) {
  std::vector<std::string> texts;
  for (const auto& inst : instances) {
    if (fully_tokenized(inst)) continue;
    for (const auto& s : inst.sentences) texts.push_back(s.text);
  }
  const auto toks = client.tokenize(texts);

  std::size_t k = 0;
  for (auto& inst : instances) {
    if (!fully_tokenized(inst)) {
      for (auto& s : inst.sentences) {
        s.subtokens = toks[k].subtokens;
        s.offsets = toks[k].offsets;
        s.split = {};
        ++k;
        if (s.subtokens.empty()) throw Error("adapter returned no subtokens for instance " + inst.id);
      }
    }
    const bool split = std::any_of(inst.sentences.begin(), inst.sentences.end(), [](const Sentence& s) {
      return !s.split.modified.empty() || !s.split.unmodified.empty();
    });
    if (!split) {
      if (inst.dataset == DatasetKind::cp) {
        auto& st = inst.sentence(Role::stereotype);
        auto& at = inst.sentence(Role::antistereotype);
        auto [a, b] = split_tokens(st, at);
        st.split = std::move(a);
        at.split = std::move(b);
      } else {
        for (auto& s : inst.sentences) s.split = split_from_target(s);
      }
    }
    validate(inst);
  }
}

ScoredSet score_instances(AdapterClient& client, const std::vector<TestInstance>& instances,
                          const std::vector<Measure>& measures, bool unrelated_aul, const std::string& ns,
                          std::size_t batch) {
  struct Job {
    const TestInstance* inst;
    const Sentence* sentence;
    Measure measure;
    std::optional<MaskPlan> plan;  // absent for degenerate SSS
    std::size_t first = 0;         // index of the plan's first request
  };
  std::vector<Job> jobs;
  std::vector<AdapterRequest> requests;
  for (const auto& inst : instances) {
    for (const auto& s : inst.sentences) {
      std::vector<Measure> wanted;
      if (s.role == Role::unrelated) {
        if (unrelated_aul) wanted.push_back(Measure::aul);
      } else {
        wanted = measures;
      }
      for (Measure m : wanted) {
        Job job{&inst, &s, m, std::nullopt, requests.size()};
        if (!(m == Measure::sss && s.split.modified.empty())) {
          const std::string prefix = ns + inst.id + "/" + std::string(to_string(s.role));
          job.plan = plan(s, s.split, m, prefix);
          for (const auto& r : job.plan->requests) requests.push_back(r);
        }
        jobs.push_back(std::move(job));
      }
    }
  }

  const auto responses = send(client, requests, batch);
  ScoredSet out;
  out.records.reserve(jobs.size());
  for (const auto& job : jobs) {
    if (!job.plan) {
      out.records.push_back({job.inst->id, job.sentence->role, job.measure, 0.0, true});
      continue;
    }
    auto ev = assemble(*job.plan, *job.sentence, slice(responses, job.first, job.plan->requests.size()));
    out.records.push_back(score_sentence(job.inst->id, *job.sentence, ev));
    out.store.add(job.inst->id, job.sentence->role, std::move(ev));
  }
  return out;
}

std::map<std::string, SlotEvidence> score_slots(AdapterClient& client, const std::vector<TestInstance>& instances,
                                                const std::string& ns, std::size_t batch) {
  struct Job {
    const TestInstance* inst;
    std::vector<SlotCandidate> candidates;
    SlotPlan plan;
    std::size_t first = 0;
  };
  std::vector<Job> jobs;
  std::vector<AdapterRequest> requests;
  for (const auto& inst : instances) {
    const auto& st = inst.sentence(Role::stereotype);
    const auto& at = inst.sentence(Role::antistereotype);
    Job job{&inst, {slot_candidate(st), slot_candidate(at)}, {}, requests.size()};
    job.plan = plan_ss_accuracy(slot_context(st), job.candidates, ns + inst.id);
    for (const auto& r : job.plan.requests) requests.push_back(r);
    jobs.push_back(std::move(job));
  }
  const auto responses = send(client, requests, batch);
  std::map<std::string, SlotEvidence> out;
  for (const auto& job : jobs) {
    out[job.inst->id] =
        assemble_slots(job.plan, job.candidates, slice(responses, job.first, job.plan.requests.size()));
  }
  return out;
}

Evaluation evaluate(AdapterClient& client, std::vector<TestInstance> instances, const EngineOptions& options) {
  Evaluation ev;
  if (!instances.empty()) ev.dataset = instances.front().dataset;
  for (const auto& inst : instances) {
    if (inst.dataset != ev.dataset) throw Error("instances from different datasets cannot be evaluated together");
  }
  const bool ss = ev.dataset == DatasetKind::ss;
  const bool any_unrelated = std::any_of(instances.begin(), instances.end(),
                                         [](const TestInstance& i) { return i.find(Role::unrelated) != nullptr; });
  const bool do_unrelated = ss && options.accuracy && options.unrelated && any_unrelated;

  tokenize_instances(client, instances);
  auto scored = score_instances(client, instances, options.measures, do_unrelated, "", options.batch);
  ev.records = std::move(scored.records);
  ev.store = std::move(scored.store);

  if (options.bias) {
    for (Measure m : options.measures) ev.bias.push_back(bias_score(ev.records, instances, m));
    if (!ss) {
      for (Measure m : {Measure::all_masked, Measure::aul, Measure::aula}) {
        if (has(options.measures, m)) ev.groups.push_back(group_bias(ev.records, instances, m));
      }
    }
  }

  if (options.accuracy) {
    if (!ss) {
      if (has(options.measures, Measure::cps)) ev.accuracy.push_back(cp_token_accuracy(instances, ev.store, Measure::cps));
      if (has(options.measures, Measure::aul)) ev.accuracy.push_back(cp_token_accuracy(instances, ev.store, Measure::aul));
    } else {
      ev.accuracy.push_back(ss_token_accuracy(instances, score_slots(client, instances, "", options.batch)));
      if (has(options.measures, Measure::aul)) {
        ev.accuracy.push_back(
            ss_span_accuracy(instances, ev.store, Measure::aul, {Role::stereotype, Role::antistereotype}, "aul_ss"));
      }
    }
    if (options.shuffle_seed) {
      const auto shuffled = perturb_shuffle(instances, *options.shuffle_seed);
      const auto s = score_instances(client, shuffled, {Measure::aul}, false, "shuffled/", options.batch);
      if (!ss) {
        auto rep = cp_token_accuracy(shuffled, s.store, Measure::aul);
        rep.label = "aul_cp_shuffled";
        ev.accuracy.push_back(std::move(rep));
      } else {
        ev.accuracy.push_back(ss_span_accuracy(shuffled, s.store, Measure::aul,
                                               {Role::stereotype, Role::antistereotype}, "aul_ss_shuffled"));
      }
    }
    if (do_unrelated) ev.accuracy.push_back(unrelated_accuracy(instances, ev.store));

    auto find = [&](const std::string& label) -> const AccuracyReport* {
      for (const auto& r : ev.accuracy) {
        if (r.label == label) return &r;
      }
      return nullptr;
    };
    const std::pair<const char*, const char*> pairs[] = {
        {"cps_cp", "aul_cp"}, {"sss_ss", "aul_ss"}, {"aul_cp", "aul_cp_shuffled"}, {"aul_ss", "aul_ss_shuffled"}};
    for (const auto& [a, b] : pairs) {
      const auto* ra = find(a);
      const auto* rb = find(b);
      if (!ra || !rb || ra->outcomes.size() != rb->outcomes.size()) continue;
      Significance sig{a, b, paired_outcomes(ra->outcomes, rb->outcomes), {}};
      sig.result = mcnemar(sig.table);
      ev.significance.push_back(std::move(sig));
    }
  }
  ev.instances = std::move(instances);
  return ev;
}

}  // namespace mlmbias
