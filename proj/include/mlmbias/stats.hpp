#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mlmbias/dataset.hpp"
#include "mlmbias/planner.hpp"
#include "mlmbias/scoring.hpp"

namespace mlmbias {

// 2x2 table of two classifiers judged on the same units.
struct PairedOutcomes {
  std::size_t both_correct = 0;
  std::size_t only_a = 0;
  std::size_t only_b = 0;
  std::size_t both_wrong = 0;

  std::size_t discordant() const { return only_a + only_b; }
  std::size_t total() const { return both_correct + only_a + only_b + both_wrong; }
  friend bool operator==(const PairedOutcomes&, const PairedOutcomes&) = default;
};

// Throws if the vectors differ in length.
PairedOutcomes paired_outcomes(const std::vector<bool>& a, const std::vector<bool>& b);

// Below this many discordant pairs the exact binomial p is reported.
inline constexpr std::size_t kMcNemarExactBelow = 25;

struct McNemarResult {
  double p = 1.0;             // the reported value
  bool exact = true;          // p came from the binomial path
  double p_exact = 1.0;       // 2 * P(X <= min(b, c) | b + c, 1/2), clipped at 1
  double p_asymptotic = 1.0;  // chi-square(1) upper tail of the corrected statistic
  double statistic = 0.0;     // (|b - c| - 1)^2 / (b + c), floored at 0
  bool no_discordant = false; // b + c == 0; p set to 1

  friend bool operator==(const McNemarResult&, const McNemarResult&) = default;
};

McNemarResult mcnemar(const PairedOutcomes& outcomes);

// A McNemar comparison between two labelled accuracy probes.
struct Significance {
  std::string a;
  std::string b;
  PairedOutcomes table;
  McNemarResult result;
};

// Two-sided exact binomial p for k successes of n at probability 1/2.
double binomial_two_sided_half(std::size_t k, std::size_t n);

// Votes at or above which an instance counts as biased ("more than three"
// of six annotators).
inline constexpr int kBiasedVotes = 4;

struct RocCurve {
  std::vector<std::pair<double, double>> points;  // (fpr, tpr) from (0,0) to (1,1)
  std::vector<double> thresholds;                 // score cut for points[1..]
  double auc = 0.0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

// Sweeps every distinct score from high to low, predicting positive when
// score >= threshold. Throws if all labels are equal or sizes differ.
RocCurve roc_curve(const std::vector<double>& scores, const std::vector<bool>& labels);

// Labels from ratings (votes >= kBiasedVotes). Every rated instance must have
// a score; unrated scores are ignored.
RocCurve roc(const std::map<std::string, double>& instance_scores, const std::vector<HumanRating>& ratings);

// f(stereotype) - f(antistereotype) per instance; degenerate pairs are left out.
std::map<std::string, double> score_differences(const std::vector<ScoreRecord>& records, Measure measure);

void write_roc_csv(std::ostream& out, const RocCurve& curve);
// Standalone SVG with one polyline per labelled curve and the chance diagonal.
std::string render_roc_svg(const std::vector<std::pair<std::string, RocCurve>>& curves);

}  // namespace mlmbias
