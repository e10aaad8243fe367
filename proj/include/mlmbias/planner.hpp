#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "mlmbias/dataset.hpp"
#include "mlmbias/protocol.hpp"

namespace mlmbias {

enum class Measure { pll, sss, cps, aul, aula, all_masked };

inline constexpr Measure kAllMeasures[] = {Measure::pll, Measure::sss, Measure::cps,
                                           Measure::aul, Measure::aula, Measure::all_masked};

std::string_view to_string(Measure m);
// Accepts lowercase names ("pll", "aula", "all_masked").
Measure measure_from_string(std::string_view s);

// Maps entry `entry` of request `request` back to sentence position `subtoken`.
struct AssemblySlot {
  std::size_t request = 0;
  std::size_t entry = 0;
  std::size_t subtoken = 0;

  friend bool operator==(const AssemblySlot&, const AssemblySlot&) = default;
};

struct MaskPlan {
  Measure measure = Measure::aul;
  std::vector<AdapterRequest> requests;
  // One slot per term of the measure's sum, in sentence order.
  std::vector<AssemblySlot> assembly;
};

// Builds the adapter requests a measure needs for one sentence:
//   pll        one request per position, masking it
//   sss        one request masking every modified position jointly
//   cps        one request per unmodified position, masking it
//   aul/aula   one unmasked request scoring every position (aula wants attention)
//   all_masked one request with every position masked
// Request ids are `id_prefix` followed by "/<measure>/<k>".
MaskPlan plan(const Sentence& sentence, const TokenSplit& split, Measure measure, std::string_view id_prefix);

// SS fill-in-the-blank accuracy. The context is the fixed part of the
// sentence around the blank; each candidate contributes the subtokens of its
// filler word.
struct SlotContext {
  std::vector<std::string> prefix;
  std::vector<std::string> suffix;
};

struct SlotCandidate {
  Role role = Role::stereotype;
  std::vector<std::string> subtokens;
};

struct SlotPlan {
  std::vector<AdapterRequest> requests;
  // request_of[c] indexes the request whose masked slots serve candidate c.
  std::vector<std::size_t> request_of;
  bool equal_counts = true;
};

// Candidates that share a subtoken count share one request with that many
// masked slots; each distinct count gets its own request.
SlotPlan plan_ss_accuracy(const SlotContext& context, const std::vector<SlotCandidate>& candidates,
                          std::string_view id_prefix);

// Context and candidate extracted from a split SS sentence (M is the filler).
SlotContext slot_context(const Sentence& sentence);
SlotCandidate slot_candidate(const Sentence& sentence);

}  // namespace mlmbias
