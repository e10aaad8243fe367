#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mlmbias/adapter.hpp"
#include "mlmbias/analysis.hpp"
#include "mlmbias/dataset.hpp"
#include "mlmbias/planner.hpp"
#include "mlmbias/scoring.hpp"
#include "mlmbias/stats.hpp"

namespace mlmbias {

// Fills subtokens/offsets through the adapter and derives each sentence's
// M/U split: CP pairs by alignment, SS sentences from the filler's offsets.
void tokenize_instances(AdapterClient& client, std::vector<TestInstance>& instances);

struct ScoredSet {
  std::vector<ScoreRecord> records;  // dataset order, then role, then measure
  EvidenceStore store;
};

// Scores the stereotype and antistereotype sentences under `measures`, and
// the unrelated sentences under AUL when `unrelated_aul` is set. `ns`
// prefixes every request id so several passes can share one capture.
//
// A sentence whose split leaves SSS with no modified token gets a degenerate
// record instead of a request; bias scores leave such pairs out.
ScoredSet score_instances(AdapterClient& client, const std::vector<TestInstance>& instances,
                          const std::vector<Measure>& measures, bool unrelated_aul, const std::string& ns = "",
                          std::size_t batch = 4096);

// Fill-in-the-blank requests for every SS instance.
std::map<std::string, SlotEvidence> score_slots(AdapterClient& client, const std::vector<TestInstance>& instances,
                                                const std::string& ns = "", std::size_t batch = 4096);

struct EngineOptions {
  std::vector<Measure> measures{std::begin(kAllMeasures), std::end(kAllMeasures)};
  bool bias = true;
  bool accuracy = true;
  std::optional<std::uint64_t> shuffle_seed;  // shuffled probe runs when set
  bool unrelated = true;                      // SS only
  std::size_t batch = 4096;                   // requests per exchange
};

struct Evaluation {
  DatasetKind dataset = DatasetKind::cp;
  std::vector<TestInstance> instances;  // tokenized and split
  std::vector<ScoreRecord> records;
  EvidenceStore store;
  std::vector<BiasReport> bias;
  std::vector<GroupBiasReport> groups;
  std::vector<AccuracyReport> accuracy;
  std::vector<Significance> significance;
};

// Runs everything `options` asks for over one dataset. Instances must all
// come from the same dataset.
Evaluation evaluate(AdapterClient& client, std::vector<TestInstance> instances, const EngineOptions& options);

}  // namespace mlmbias
