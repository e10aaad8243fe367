#include "mlmbias/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>

#include "mlmbias/error.hpp"

namespace mlmbias {

PairedOutcomes paired_outcomes(const std::vector<bool>& a, const std::vector<bool>& b) {
  if (a.size() != b.size()) {
    throw Error("paired outcomes differ in length (" + std::to_string(a.size()) + " vs " +
                std::to_string(b.size()) + ")");
  }
  PairedOutcomes t;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] && b[i]) ++t.both_correct;
    else if (a[i]) ++t.only_a;
    else if (b[i]) ++t.only_b;
    else ++t.both_wrong;
  }
  return t;
}

double binomial_two_sided_half(std::size_t k, std::size_t n) {
  if (n == 0) return 1.0;
  k = std::min(k, n - k);
  if (n <= 60) {
    // exact: the partial sum fits in 64 bits
    std::uint64_t c = 1, sum = 0;
    for (std::size_t i = 0; i <= k; ++i) {
      sum += c;
      c = c * (n - i) / (i + 1);
    }
    return std::min(1.0, std::ldexp(static_cast<double>(sum), 1 - static_cast<int>(n)));
  }
  // log C(n, i) - n log 2, summed in log space.
  const double ln2n = static_cast<double>(n) * std::log(2.0);
  const double lgn1 = std::lgamma(static_cast<double>(n) + 1.0);
  std::vector<double> terms;
  terms.reserve(k + 1);
  for (std::size_t i = 0; i <= k; ++i) {
    terms.push_back(lgn1 - std::lgamma(static_cast<double>(i) + 1.0) -
                    std::lgamma(static_cast<double>(n - i) + 1.0) - ln2n);
  }
  const double mx = *std::max_element(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += std::exp(t - mx);
  const double tail = std::exp(mx + std::log(s));
  return std::min(1.0, 2.0 * tail);
}

McNemarResult mcnemar(const PairedOutcomes& o) {
  McNemarResult r;
  const std::size_t n = o.discordant();
  if (n == 0) {
    r.no_discordant = true;
    return r;
  }
  const double b = static_cast<double>(o.only_a);
  const double c = static_cast<double>(o.only_b);
  const double d = std::max(0.0, std::abs(b - c) - 1.0);
  r.statistic = d * d / (b + c);
  r.p_asymptotic = std::erfc(std::sqrt(r.statistic / 2.0));
  r.p_exact = binomial_two_sided_half(std::min(o.only_a, o.only_b), n);
  r.exact = n < kMcNemarExactBelow;
  r.p = r.exact ? r.p_exact : r.p_asymptotic;
  return r;
}

// ---------------------------------------------------------------------------

RocCurve roc_curve(const std::vector<double>& scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw Error("roc: scores and labels differ in length");
  RocCurve c;
  for (bool l : labels) (l ? c.positives : c.negatives)++;
  if (c.positives == 0 || c.negatives == 0) throw Error("roc: all labels identical, AUC undefined");
  for (double s : scores) {
    if (std::isnan(s)) throw Error("roc: NaN score");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  const double P = static_cast<double>(c.positives);
  const double N = static_cast<double>(c.negatives);
  std::size_t tp = 0, fp = 0;
  c.points.emplace_back(0.0, 0.0);
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    std::size_t j = i;
    for (; j < order.size() && scores[order[j]] == s; ++j) (labels[order[j]] ? tp : fp)++;
    const auto prev = c.points.back();
    const double fpr = static_cast<double>(fp) / N;
    const double tpr = static_cast<double>(tp) / P;
    c.auc += (fpr - prev.first) * (tpr + prev.second) / 2.0;
    c.points.emplace_back(fpr, tpr);
    c.thresholds.push_back(s);
    i = j;
  }
  return c;
}

RocCurve roc(const std::map<std::string, double>& instance_scores, const std::vector<HumanRating>& ratings) {
  std::vector<double> scores;
  std::vector<bool> labels;
  for (const auto& r : ratings) {
    auto it = instance_scores.find(r.instance_id);
    if (it == instance_scores.end()) throw Error("roc: rated instance " + r.instance_id + " has no score");
    scores.push_back(it->second);
    labels.push_back(r.biased_votes >= kBiasedVotes);
  }
  return roc_curve(scores, labels);
}

std::map<std::string, double> score_differences(const std::vector<ScoreRecord>& records, Measure measure) {
  std::map<std::string, std::pair<const ScoreRecord*, const ScoreRecord*>> pairs;
  for (const auto& r : records) {
    if (r.measure != measure) continue;
    if (r.role == Role::stereotype) pairs[r.instance_id].first = &r;
    if (r.role == Role::antistereotype) pairs[r.instance_id].second = &r;
  }
  std::map<std::string, double> out;
  for (const auto& [id, p] : pairs) {
    if (!p.first || !p.second || p.first->degenerate || p.second->degenerate) continue;
    out[id] = p.first->value - p.second->value;
  }
  return out;
}

void write_roc_csv(std::ostream& out, const RocCurve& curve) {
  char buf[96];
  out << "threshold,fpr,tpr\n";
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    if (i == 0) {
      out << "inf";
    } else {
      std::snprintf(buf, sizeof buf, "%.17g", curve.thresholds[i - 1]);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", curve.points[i].first, curve.points[i].second);
    out << buf;
  }
}

std::string render_roc_svg(const std::vector<std::pair<std::string, RocCurve>>& curves) {
  static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  const double size = 400.0, margin = 50.0;
  auto x = [&](double f) { return margin + f * size; };
  auto y = [&](double t) { return margin + (1.0 - t) * size; };
  char buf[160];

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size + 2 * margin + 160 << "\" height=\""
      << size + 2 * margin << "\">\n";
  std::snprintf(buf, sizeof buf, "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n",
                margin, margin, size, size);
  svg << buf;
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n", x(0), y(0),
                x(1), y(1));
  svg << buf;
  std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">False positive rate</text>\n",
                margin + size / 2, size + 2 * margin - 12);
  svg << buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"14\" y=\"%g\" text-anchor=\"middle\" transform=\"rotate(-90 14 %g)\">True positive rate</text>\n",
                margin + size / 2, margin + size / 2);
  svg << buf;

  for (std::size_t k = 0; k < curves.size(); ++k) {
    const auto& [label, c] = curves[k];
    const char* colour = colours[k % std::size(colours)];
    svg << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < c.points.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", i ? " " : "", x(c.points[i].first), y(c.points[i].second));
      svg << buf;
    }
    svg << "\"/>\n";
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" fill=\"%s\">", x(1) + 10, margin + 20.0 * (k + 1), colour);
    svg << buf;
    for (char ch : label) {
      if (ch == '<') svg << "&lt;";
      else if (ch == '>') svg << "&gt;";
      else if (ch == '&') svg << "&amp;";
      else svg << ch;
    }
    std::snprintf(buf, sizeof buf, " (AUC %.3f)</text>\n", c.auc);
    svg << buf;
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace mlmbias
