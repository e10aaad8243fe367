#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "mlmbias/dataset.hpp"
#include "mlmbias/planner.hpp"
#include "mlmbias/scoring.hpp"

namespace mlmbias {

// Stereotype-preference tally over a set of instances.
struct BiasCell {
  std::size_t n = 0;
  std::size_t wins = 0;  // f(stereotype) > f(antistereotype)
  std::size_t ties = 0;  // f(stereotype) == f(antistereotype); count as losses

  double percentage() const { return n == 0 ? std::nan("") : 100.0 * static_cast<double>(wins) / static_cast<double>(n); }
  // Alternative reading that gives ties half credit.
  double percentage_half_ties() const {
    return n == 0 ? std::nan("") : 100.0 * (static_cast<double>(wins) + 0.5 * static_cast<double>(ties)) / static_cast<double>(n);
  }
  void add(double stereo, double anti) {
    ++n;
    if (stereo > anti) ++wins;
    if (stereo == anti) ++ties;
  }
  friend bool operator==(const BiasCell&, const BiasCell&) = default;
};

struct BiasReport {
  Measure measure = Measure::aul;
  DatasetKind dataset = DatasetKind::cp;
  BiasCell overall;
  std::map<std::string, BiasCell> by_bias_type;  // lexicographic order
  std::optional<BiasCell> advantaged;            // CP only
  std::optional<BiasCell> disadvantaged;         // CP only
  std::size_t excluded = 0;                      // degenerate pairs left out

  friend bool operator==(const BiasReport&, const BiasReport&) = default;
};

// 100 * (1/N) * #{f(S_st) > f(S_at)} with per-type and per-group breakdowns.
// Throws if an instance lacks either record for `measure`.
BiasReport bias_score(const std::vector<ScoreRecord>& records, const std::vector<TestInstance>& instances,
                      Measure measure);

struct GroupBiasReport {
  Measure measure = Measure::all_masked;
  std::optional<BiasCell> advantaged;  // absent when the group has no instances
  std::optional<BiasCell> disadvantaged;
  std::optional<double> abs_diff;      // |Adv - Dis| when both cells exist

  friend bool operator==(const GroupBiasReport&, const GroupBiasReport&) = default;
};

// Bias score restricted to each CP group. Typical measures are all_masked
// (everything masked) against aul/aula (nothing masked).
GroupBiasReport group_bias(const std::vector<ScoreRecord>& records, const std::vector<TestInstance>& instances,
                           Measure measure);

// Evidence gathered during an evaluation, keyed by instance, role and measure.
class EvidenceStore {
 public:
  void add(const std::string& instance_id, Role role, SentenceEvidence evidence);
  const SentenceEvidence* find(const std::string& instance_id, Role role, Measure measure) const;
  const SentenceEvidence& get(const std::string& instance_id, Role role, Measure measure) const;
  std::size_t size() const { return items_.size(); }

 private:
  std::map<std::tuple<std::string, Role, Measure>, SentenceEvidence> items_;
};

struct AccuracyReport {
  std::string label;  // e.g. "cps_cp", "aul_ss", "aul_ss_shuffled"
  Measure measure = Measure::aul;
  DatasetKind dataset = DatasetKind::cp;
  // Headline: CP micro-averaged over unmodified positions; SS exact match
  // per instance.
  double accuracy = std::nan("");
  std::size_t n_evaluated = 0;
  std::size_t n_correct = 0;
  // CP: mean of per-sentence accuracies. SS: token-level micro accuracy.
  double secondary = std::nan("");
  std::optional<std::size_t> n_equal_subtokens;  // SS slot accuracy only
  std::size_t n_skipped = 0;
  std::string note;
  // One entry per headline unit, in instance order; feeds paired tests.
  std::vector<bool> outcomes;

  bool defined() const { return n_evaluated > 0; }
};

// Fraction of unmodified subtoken positions (both sentences of each pair)
// where the adapter's argmax equals the true subtoken. Works with CPS
// evidence (each position masked) and AUL/AULA evidence (nothing masked).
AccuracyReport cp_token_accuracy(const std::vector<TestInstance>& instances, const EvidenceStore& store,
                                 Measure measure);

// Argmax sequences for one SS instance's fill-in-the-blank plan.
struct SlotEvidence {
  std::vector<SlotCandidate> candidates;
  std::vector<std::vector<std::string>> predicted;  // per candidate, from its request
  bool equal_counts = true;
};

SlotEvidence assemble_slots(const SlotPlan& plan, const std::vector<SlotCandidate>& candidates,
                            const std::vector<AdapterResponse>& responses);

// Instance-level exact match of the masked-slot predictions against the
// stereotype or antistereotype candidate.
AccuracyReport ss_token_accuracy(const std::vector<TestInstance>& instances,
                                 const std::map<std::string, SlotEvidence>& slots);

// Instance-level accuracy on unmasked (AUL) evidence for SS: an instance is
// correct when, for at least one sentence with a role in `roles`, the argmax
// over its modified positions reproduces those subtokens exactly. Instances
// without any such sentence are skipped.
AccuracyReport ss_span_accuracy(const std::vector<TestInstance>& instances, const EvidenceStore& store,
                                Measure measure, const std::vector<Role>& roles, std::string label);

// AUL accuracy on the SS unrelated candidates. Subtoken counts differ from the
// original sentences, so no paired test is defined against them.
AccuracyReport unrelated_accuracy(const std::vector<TestInstance>& instances, const EvidenceStore& store);

// Permutes each sentence's subtokens uniformly at random. M/U lists are
// remapped element-wise, so list order still pairs each entry with the same
// original token.
std::vector<TestInstance> perturb_shuffle(const std::vector<TestInstance>& instances, std::uint64_t seed);

}  // namespace mlmbias
