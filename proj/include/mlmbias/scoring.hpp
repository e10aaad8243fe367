#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "mlmbias/dataset.hpp"
#include "mlmbias/planner.hpp"
#include "mlmbias/protocol.hpp"

namespace mlmbias {

// The terms of one measure's sum for one sentence, pulled out of the adapter
// responses through the plan's assembly map. Entries are in assembly order.
struct SentenceEvidence {
  Measure measure = Measure::aul;
  std::size_t length = 0;               // |S|
  std::vector<std::size_t> positions;   // sentence position of each term
  std::vector<double> logprobs;         // log P(w_position | context)
  std::vector<std::string> argmax;      // adapter's top prediction at the position
  std::vector<double> attention;        // per sentence position; empty unless requested
};

// Matches responses to the plan's requests by id, so arrival order is
// irrelevant. Throws if a request has no response or a slot is unanswered.
SentenceEvidence assemble(const MaskPlan& plan, const Sentence& sentence,
                          const std::vector<AdapterResponse>& responses);

// sum_i log P(w_i | S without w_i)
double pll(const SentenceEvidence& ev);
// (1/|M|) sum_{w in M} log P(w | U); M is a list, duplicates count twice.
double sss(const SentenceEvidence& ev, const TokenSplit& split);

struct CpsValue {
  double value = 0.0;
  bool empty_unmodified = false;  // U was empty; value is the empty sum
};
// sum_{w in U} log P(w | U without w, M). A sum, not a mean.
CpsValue cps(const SentenceEvidence& ev, const TokenSplit& split);
// (1/|S|) sum_i log P(w_i | S)
double aul(const SentenceEvidence& ev);
// (1/|S|) sum_i alpha_i log P(w_i | S)
double aula(const SentenceEvidence& ev);
// aul's formula evaluated on the fully masked input.
double all_masked_score(const SentenceEvidence& ev);

struct ScoreRecord {
  std::string instance_id;
  Role role = Role::stereotype;
  Measure measure = Measure::aul;
  double value = 0.0;
  // Set for CPS on a pair with no unmodified tokens; such records are kept
  // for audits but excluded from bias scores.
  bool degenerate = false;

  friend bool operator==(const ScoreRecord&, const ScoreRecord&) = default;
};

// Dispatches to the measure named in the evidence.
ScoreRecord score_sentence(std::string_view instance_id, const Sentence& sentence, const SentenceEvidence& ev);

std::string to_json_line(const ScoreRecord& record);
ScoreRecord record_from_json_line(std::string_view line);
void write_records(std::ostream& out, const std::vector<ScoreRecord>& records);
std::vector<ScoreRecord> read_records(std::istream& in);

}  // namespace mlmbias
