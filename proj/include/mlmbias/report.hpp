#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mlmbias/analysis.hpp"
#include "mlmbias/dataset.hpp"
#include "mlmbias/freq.hpp"
#include "mlmbias/planner.hpp"
#include "mlmbias/protocol.hpp"
#include "mlmbias/scoring.hpp"
#include "mlmbias/stats.hpp"

namespace mlmbias {

struct DatasetInfo {
  DatasetKind kind = DatasetKind::cp;
  std::string path;
  std::string sha256;
  std::size_t instances = 0;
};

struct RocSummary {
  Measure measure = Measure::aul;
  double auc = 0.0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

struct ExampleSentence {
  Role role = Role::stereotype;
  std::string text;
  std::map<Measure, double> scores;
};

struct ExampleCase {
  std::string instance_id;
  std::string bias_type;
  Measure first = Measure::cps;
  Measure second = Measure::aula;
  bool sign_mismatch = false;  // the two measures prefer different sentences
  double disagreement = 0.0;
  std::vector<ExampleSentence> sentences;
};

inline constexpr std::string_view kRocScoreDefinition = "f(stereotype) - f(antistereotype)";

struct EvaluationRun {
  Handshake adapter;
  DatasetInfo dataset;
  std::vector<Measure> measures;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> started;   // timestamps are left out of replays
  std::optional<std::string> finished;
  std::vector<BiasReport> bias;
  std::vector<GroupBiasReport> groups;
  std::vector<AccuracyReport> accuracy;
  std::vector<Significance> significance;
  std::vector<RocSummary> roc;
  std::vector<ExampleCase> examples;
  std::vector<MeanRank> frequency;
};

// The k instances on which `first` and `second` disagree most. Pairs whose
// preferred sentence differs come first; within each class, instances are
// ordered by |d1/s1 - d2/s2| descending, where d is the stereotype minus
// antistereotype score and s the mean |d| of that measure over all ranked
// instances. Remaining ties keep dataset order.
std::vector<ExampleCase> example_cases(const std::vector<ScoreRecord>& records,
                                       const std::vector<TestInstance>& instances, Measure first, Measure second,
                                       std::size_t k);

enum class Format { json, markdown, csv };
Format format_from_string(std::string_view s);

std::string render(const EvaluationRun& run, Format format);
EvaluationRun run_from_json(std::string_view text);

}  // namespace mlmbias
