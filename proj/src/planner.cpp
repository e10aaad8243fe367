#include "mlmbias/planner.hpp"

#include <algorithm>
#include <set>

#include "mlmbias/error.hpp"

namespace mlmbias {

std::string_view to_string(Measure m) {
  switch (m) {
    case Measure::pll: return "pll";
    case Measure::sss: return "sss";
    case Measure::cps: return "cps";
    case Measure::aul: return "aul";
    case Measure::aula: return "aula";
    case Measure::all_masked: return "all_masked";
  }
  return "?";
}

Measure measure_from_string(std::string_view s) {
  for (Measure m : kAllMeasures) {
    if (to_string(m) == s) return m;
  }
  throw Error("unknown measure '" + std::string(s) + "'");
}

namespace {

std::string request_id(std::string_view prefix, Measure m, std::size_t k) {
  std::string id(prefix);
  id += '/';
  id += to_string(m);
  id += '/';
  id += std::to_string(k);
  return id;
}

AdapterRequest base_request(const Sentence& s, std::string id) {
  AdapterRequest r;
  r.id = std::move(id);
  r.subtokens = s.subtokens;
  return r;
}

void score_at(AdapterRequest& r, const Sentence& s, std::size_t pos) {
  r.positions.push_back(pos);
  r.targets.push_back({s.subtokens[pos]});
}

}  // namespace

MaskPlan plan(const Sentence& sentence, const TokenSplit& split, Measure measure, std::string_view id_prefix) {
  const std::size_t n = sentence.size();
  if (n == 0) throw Error("cannot plan an untokenized sentence");
  for (const auto* list : {&split.modified, &split.unmodified}) {
    for (std::size_t p : *list) {
      if (p >= n) throw Error("split position " + std::to_string(p) + " out of range");
    }
  }

  MaskPlan mp;
  mp.measure = measure;
  auto single_masks = [&](const std::vector<std::size_t>& positions) {
    for (std::size_t pos : positions) {
      auto r = base_request(sentence, request_id(id_prefix, measure, mp.requests.size()));
      r.subtokens[pos] = kMaskToken;
      score_at(r, sentence, pos);
      mp.assembly.push_back({mp.requests.size(), 0, pos});
      mp.requests.push_back(std::move(r));
    }
  };
  auto one_request = [&](bool mask_all, bool attention) {
    auto r = base_request(sentence, request_id(id_prefix, measure, 0));
    r.want_attention = attention;
    for (std::size_t pos = 0; pos < n; ++pos) {
      if (mask_all) r.subtokens[pos] = kMaskToken;
      score_at(r, sentence, pos);
      mp.assembly.push_back({0, pos, pos});
    }
    mp.requests.push_back(std::move(r));
  };

  switch (measure) {
    case Measure::pll: {
      std::vector<std::size_t> all(n);
      for (std::size_t i = 0; i < n; ++i) all[i] = i;
      single_masks(all);
      break;
    }
    case Measure::cps:
      single_masks(split.unmodified);
      break;
    case Measure::sss: {
      if (split.modified.empty()) throw Error("sss: no modified tokens in '" + sentence.text + "'");
      auto r = base_request(sentence, request_id(id_prefix, measure, 0));
      for (std::size_t pos : split.modified) r.subtokens[pos] = kMaskToken;
      for (std::size_t k = 0; k < split.modified.size(); ++k) {
        score_at(r, sentence, split.modified[k]);
        mp.assembly.push_back({0, k, split.modified[k]});
      }
      mp.requests.push_back(std::move(r));
      break;
    }
    case Measure::aul: one_request(false, false); break;
    case Measure::aula: one_request(false, true); break;
    case Measure::all_masked: one_request(true, false); break;
  }
  return mp;
}

SlotPlan plan_ss_accuracy(const SlotContext& context, const std::vector<SlotCandidate>& candidates,
                          std::string_view id_prefix) {
  SlotPlan sp;
  std::vector<std::size_t> counts;  // subtoken count served by each request
  for (const auto& cand : candidates) {
    if (cand.subtokens.empty()) throw Error("ss accuracy: candidate without subtokens");
    if (cand.subtokens.size() != candidates.front().subtokens.size()) sp.equal_counts = false;
    auto it = std::find(counts.begin(), counts.end(), cand.subtokens.size());
    if (it == counts.end()) {
      counts.push_back(cand.subtokens.size());
      it = counts.end() - 1;
    }
    sp.request_of.push_back(static_cast<std::size_t>(it - counts.begin()));
  }

  for (std::size_t r = 0; r < counts.size(); ++r) {
    const std::size_t slots = counts[r];
    AdapterRequest req;
    req.id = std::string(id_prefix) + "/slots/" + std::to_string(slots);
    req.subtokens = context.prefix;
    req.subtokens.insert(req.subtokens.end(), slots, std::string(kMaskToken));
    req.subtokens.insert(req.subtokens.end(), context.suffix.begin(), context.suffix.end());
    for (std::size_t s = 0; s < slots; ++s) {
      std::set<std::string> wanted;
      for (std::size_t c = 0; c < candidates.size(); ++c) {
        if (sp.request_of[c] == r) wanted.insert(candidates[c].subtokens[s]);
      }
      req.positions.push_back(context.prefix.size() + s);
      req.targets.emplace_back(wanted.begin(), wanted.end());
    }
    sp.requests.push_back(std::move(req));
  }
  return sp;
}

SlotContext slot_context(const Sentence& sentence) {
  const auto& m = sentence.split.modified;
  if (m.empty()) throw Error("ss accuracy: sentence has no filler subtokens: " + sentence.text);
  SlotContext ctx;
  ctx.prefix.assign(sentence.subtokens.begin(), sentence.subtokens.begin() + static_cast<std::ptrdiff_t>(m.front()));
  ctx.suffix.assign(sentence.subtokens.begin() + static_cast<std::ptrdiff_t>(m.back()) + 1, sentence.subtokens.end());
  return ctx;
}

SlotCandidate slot_candidate(const Sentence& sentence) {
  SlotCandidate c;
  c.role = sentence.role;
  for (std::size_t p : sentence.split.modified) c.subtokens.push_back(sentence.subtokens[p]);
  return c;
}

}  // namespace mlmbias
