#include "mlmbias/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "mlmbias/csv.hpp"
#include "mlmbias/error.hpp"

namespace mlmbias {

using json = nlohmann::ordered_json;

std::vector<ExampleCase> example_cases(const std::vector<ScoreRecord>& records,
                                       const std::vector<TestInstance>& instances, Measure first, Measure second,
                                       std::size_t k) {
  std::map<std::tuple<std::string_view, Role, Measure>, const ScoreRecord*> index;
  for (const auto& r : records) index[{r.instance_id, r.role, r.measure}] = &r;
  auto diff = [&](const TestInstance& inst, Measure m) -> std::optional<double> {
    auto st = index.find({inst.id, Role::stereotype, m});
    auto at = index.find({inst.id, Role::antistereotype, m});
    if (st == index.end() || at == index.end() || st->second->degenerate || at->second->degenerate) return std::nullopt;
    return st->second->value - at->second->value;
  };

  struct Row {
    const TestInstance* inst;
    double d1, d2;
  };
  std::vector<Row> rows;
  double s1 = 0.0, s2 = 0.0;
  for (const auto& inst : instances) {
    auto d1 = diff(inst, first);
    auto d2 = diff(inst, second);
    if (!d1 || !d2) continue;
    rows.push_back({&inst, *d1, *d2});
    s1 += std::abs(*d1);
    s2 += std::abs(*d2);
  }
  if (rows.empty() || k == 0) return {};
  s1 /= static_cast<double>(rows.size());
  s2 /= static_cast<double>(rows.size());
  if (s1 == 0.0) s1 = 1.0;
  if (s2 == 0.0) s2 = 1.0;

  std::vector<ExampleCase> cases;
  for (const auto& r : rows) {
    ExampleCase c;
    c.instance_id = r.inst->id;
    c.bias_type = r.inst->bias_type;
    c.first = first;
    c.second = second;
    c.sign_mismatch = (r.d1 > 0) != (r.d2 > 0);
    c.disagreement = std::abs(r.d1 / s1 - r.d2 / s2);
    for (const auto& s : r.inst->sentences) {
      ExampleSentence es{s.role, s.text, {}};
      for (Measure m : kAllMeasures) {
        auto it = index.find({r.inst->id, s.role, m});
        if (it != index.end() && !it->second->degenerate) es.scores[m] = it->second->value;
      }
      c.sentences.push_back(std::move(es));
    }
    cases.push_back(std::move(c));
  }
  std::stable_sort(cases.begin(), cases.end(), [](const ExampleCase& a, const ExampleCase& b) {
    if (a.sign_mismatch != b.sign_mismatch) return a.sign_mismatch;
    return a.disagreement > b.disagreement;
  });
  if (cases.size() > k) cases.resize(k);
  return cases;
}

Format format_from_string(std::string_view s) {
  if (s == "json") return Format::json;
  if (s == "markdown" || s == "md") return Format::markdown;
  if (s == "csv") return Format::csv;
  throw Error("unknown format '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json num(double x) { return std::isnan(x) ? json(nullptr) : json(x); }
double num(const json& j) { return j.is_null() ? std::nan("") : j.get<double>(); }

json cell_json(const BiasCell& c) {
  return json{{"n", c.n},
              {"wins", c.wins},
              {"ties", c.ties},
              {"score", num(c.percentage())},
              {"score_half_ties", num(c.percentage_half_ties())}};
}

BiasCell cell_from(const json& j) { return {j.at("n").get<std::size_t>(), j.at("wins").get<std::size_t>(), j.at("ties").get<std::size_t>()}; }

json to_json(const EvaluationRun& run) {
  json j;
  j["adapter"] = {{"model", run.adapter.model},
                  {"tokenizer_hash", run.adapter.tokenizer_hash},
                  {"attention_definition", run.adapter.attention_definition}};
  j["dataset"] = {{"kind", to_string(run.dataset.kind)},
                  {"path", run.dataset.path},
                  {"sha256", run.dataset.sha256},
                  {"instances", run.dataset.instances}};
  j["measures"] = json::array();
  for (Measure m : run.measures) j["measures"].push_back(to_string(m));
  if (run.seed) j["seed"] = *run.seed;
  if (run.started || run.finished) {
    j["timestamps"] = json::object();
    if (run.started) j["timestamps"]["started"] = *run.started;
    if (run.finished) j["timestamps"]["finished"] = *run.finished;
  }
  j["roc_score"] = kRocScoreDefinition;

  j["bias"] = json::array();
  for (const auto& b : run.bias) {
    json e{{"measure", to_string(b.measure)}, {"dataset", to_string(b.dataset)}, {"overall", cell_json(b.overall)}};
    e["by_bias_type"] = json::object();
    for (const auto& [t, c] : b.by_bias_type) e["by_bias_type"][t] = cell_json(c);
    if (b.advantaged) e["advantaged"] = cell_json(*b.advantaged);
    if (b.disadvantaged) e["disadvantaged"] = cell_json(*b.disadvantaged);
    e["excluded"] = b.excluded;
    j["bias"].push_back(std::move(e));
  }

  j["groups"] = json::array();
  for (const auto& g : run.groups) {
    json e{{"measure", to_string(g.measure)}};
    if (g.advantaged) e["advantaged"] = cell_json(*g.advantaged);
    if (g.disadvantaged) e["disadvantaged"] = cell_json(*g.disadvantaged);
    if (g.abs_diff) e["abs_diff"] = num(*g.abs_diff);
    j["groups"].push_back(std::move(e));
  }

  j["accuracy"] = json::array();
  for (const auto& a : run.accuracy) {
    json e{{"label", a.label},
           {"measure", to_string(a.measure)},
           {"dataset", to_string(a.dataset)},
           {"accuracy", num(a.accuracy)},
           {"n_evaluated", a.n_evaluated},
           {"n_correct", a.n_correct},
           {"secondary", num(a.secondary)}};
    if (a.n_equal_subtokens) e["n_equal_subtokens"] = *a.n_equal_subtokens;
    e["n_skipped"] = a.n_skipped;
    if (!a.note.empty()) e["note"] = a.note;
    j["accuracy"].push_back(std::move(e));
  }

  j["significance"] = json::array();
  for (const auto& s : run.significance) {
    j["significance"].push_back({{"a", s.a},
                                 {"b", s.b},
                                 {"both_correct", s.table.both_correct},
                                 {"only_a", s.table.only_a},
                                 {"only_b", s.table.only_b},
                                 {"both_wrong", s.table.both_wrong},
                                 {"p", num(s.result.p)},
                                 {"exact", s.result.exact},
                                 {"p_exact", num(s.result.p_exact)},
                                 {"p_asymptotic", num(s.result.p_asymptotic)},
                                 {"statistic", num(s.result.statistic)},
                                 {"no_discordant", s.result.no_discordant}});
  }

  j["roc"] = json::array();
  for (const auto& r : run.roc) {
    j["roc"].push_back(
        {{"measure", to_string(r.measure)}, {"auc", num(r.auc)}, {"positives", r.positives}, {"negatives", r.negatives}});
  }

  j["examples"] = json::array();
  for (const auto& c : run.examples) {
    json e{{"instance_id", c.instance_id},
           {"bias_type", c.bias_type},
           {"first", to_string(c.first)},
           {"second", to_string(c.second)},
           {"sign_mismatch", c.sign_mismatch},
           {"disagreement", num(c.disagreement)}};
    e["sentences"] = json::array();
    for (const auto& s : c.sentences) {
      json se{{"role", to_string(s.role)}, {"text", s.text}, {"scores", json::object()}};
      for (const auto& [m, v] : s.scores) se["scores"][std::string(to_string(m))] = num(v);
      e["sentences"].push_back(std::move(se));
    }
    j["examples"].push_back(std::move(e));
  }

  j["frequency"] = json::array();
  for (const auto& f : run.frequency) {
    json e{{"bias_type", f.bias_type}};
    if (f.advantaged) e["advantaged"] = *f.advantaged;
    if (f.disadvantaged) e["disadvantaged"] = *f.disadvantaged;
    e["top_k"] = f.top_k;
    e["short_list"] = f.short_list;
    e["missing_group"] = f.missing_group;
    e["ranked"] = json::array();
    for (const auto& w : f.ranked) {
      e["ranked"].push_back({{"word", w.word}, {"count", w.count}, {"group", to_string(w.group)}, {"rank", w.rank}});
    }
    j["frequency"].push_back(std::move(e));
  }
  return j;
}

}  // namespace

EvaluationRun run_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    EvaluationRun run;
    const auto& ad = j.at("adapter");
    run.adapter = {ad.at("model").get<std::string>(), ad.at("tokenizer_hash").get<std::string>(),
                   ad.at("attention_definition").get<std::string>()};
    const auto& ds = j.at("dataset");
    run.dataset = {dataset_from_string(ds.at("kind").get<std::string>()), ds.at("path").get<std::string>(),
                   ds.at("sha256").get<std::string>(), ds.at("instances").get<std::size_t>()};
    for (const auto& m : j.at("measures")) run.measures.push_back(measure_from_string(m.get<std::string>()));
    if (j.contains("seed")) run.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("timestamps")) {
      const auto& t = j["timestamps"];
      if (t.contains("started")) run.started = t["started"].get<std::string>();
      if (t.contains("finished")) run.finished = t["finished"].get<std::string>();
    }
    for (const auto& e : j.value("bias", json::array())) {
      BiasReport b;
      b.measure = measure_from_string(e.at("measure").get<std::string>());
      b.dataset = dataset_from_string(e.at("dataset").get<std::string>());
      b.overall = cell_from(e.at("overall"));
      for (const auto& [t, c] : e.at("by_bias_type").items()) b.by_bias_type[t] = cell_from(c);
      if (e.contains("advantaged")) b.advantaged = cell_from(e["advantaged"]);
      if (e.contains("disadvantaged")) b.disadvantaged = cell_from(e["disadvantaged"]);
      b.excluded = e.at("excluded").get<std::size_t>();
      run.bias.push_back(std::move(b));
    }
    for (const auto& e : j.value("groups", json::array())) {
      GroupBiasReport g;
      g.measure = measure_from_string(e.at("measure").get<std::string>());
      if (e.contains("advantaged")) g.advantaged = cell_from(e["advantaged"]);
      if (e.contains("disadvantaged")) g.disadvantaged = cell_from(e["disadvantaged"]);
      if (e.contains("abs_diff")) g.abs_diff = num(e["abs_diff"]);
      run.groups.push_back(std::move(g));
    }
    for (const auto& e : j.value("accuracy", json::array())) {
      AccuracyReport a;
      a.label = e.at("label").get<std::string>();
      a.measure = measure_from_string(e.at("measure").get<std::string>());
      a.dataset = dataset_from_string(e.at("dataset").get<std::string>());
      a.accuracy = num(e.at("accuracy"));
      a.n_evaluated = e.at("n_evaluated").get<std::size_t>();
      a.n_correct = e.at("n_correct").get<std::size_t>();
      a.secondary = num(e.at("secondary"));
      if (e.contains("n_equal_subtokens")) a.n_equal_subtokens = e["n_equal_subtokens"].get<std::size_t>();
      a.n_skipped = e.at("n_skipped").get<std::size_t>();
      a.note = e.value("note", "");
      run.accuracy.push_back(std::move(a));
    }
    for (const auto& e : j.value("significance", json::array())) {
      Significance s;
      s.a = e.at("a").get<std::string>();
      s.b = e.at("b").get<std::string>();
      s.table = {e.at("both_correct").get<std::size_t>(), e.at("only_a").get<std::size_t>(),
                 e.at("only_b").get<std::size_t>(), e.at("both_wrong").get<std::size_t>()};
      s.result.p = num(e.at("p"));
      s.result.exact = e.at("exact").get<bool>();
      s.result.p_exact = num(e.at("p_exact"));
      s.result.p_asymptotic = num(e.at("p_asymptotic"));
      s.result.statistic = num(e.at("statistic"));
      s.result.no_discordant = e.at("no_discordant").get<bool>();
      run.significance.push_back(std::move(s));
    }
    for (const auto& e : j.value("roc", json::array())) {
      run.roc.push_back({measure_from_string(e.at("measure").get<std::string>()), num(e.at("auc")),
                         e.at("positives").get<std::size_t>(), e.at("negatives").get<std::size_t>()});
    }
    for (const auto& e : j.value("examples", json::array())) {
      ExampleCase c;
      c.instance_id = e.at("instance_id").get<std::string>();
      c.bias_type = e.at("bias_type").get<std::string>();
      c.first = measure_from_string(e.at("first").get<std::string>());
      c.second = measure_from_string(e.at("second").get<std::string>());
      c.sign_mismatch = e.at("sign_mismatch").get<bool>();
      c.disagreement = num(e.at("disagreement"));
      for (const auto& se : e.at("sentences")) {
        ExampleSentence s;
        s.role = role_from_string(se.at("role").get<std::string>());
        s.text = se.at("text").get<std::string>();
        for (const auto& [m, v] : se.at("scores").items()) s.scores[measure_from_string(m)] = num(v);
        c.sentences.push_back(std::move(s));
      }
      run.examples.push_back(std::move(c));
    }
    for (const auto& e : j.value("frequency", json::array())) {
      MeanRank f;
      f.bias_type = e.at("bias_type").get<std::string>();
      if (e.contains("advantaged")) f.advantaged = e["advantaged"].get<double>();
      if (e.contains("disadvantaged")) f.disadvantaged = e["disadvantaged"].get<double>();
      f.top_k = e.at("top_k").get<std::size_t>();
      f.short_list = e.at("short_list").get<bool>();
      f.missing_group = e.at("missing_group").get<bool>();
      for (const auto& w : e.at("ranked")) {
        f.ranked.push_back({w.at("word").get<std::string>(), w.at("count").get<std::uint64_t>(),
                            group_from_string(w.at("group").get<std::string>()), w.at("rank").get<std::size_t>()});
      }
      run.frequency.push_back(std::move(f));
    }
    return run;
  } catch (const json::exception& e) {
    throw Error(std::string("evaluation run: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Markdown / CSV

namespace {

std::string fixed2(double x) {
  if (std::isnan(x)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string pvalue(double p) {
  if (std::isnan(p)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", p);
  return buf;
}

std::string md_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += "\\|";
    else if (c == '\n') out += ' ';
    else out += c;
  }
  return out;
}

// Display order: CPS/SSS first, then AUL and AULA.
int measure_rank(Measure m) {
  switch (m) {
    case Measure::cps: return 0;
    case Measure::sss: return 1;
    case Measure::aul: return 2;
    case Measure::aula: return 3;
    case Measure::all_masked: return 4;
    case Measure::pll: return 5;
  }
  return 6;
}

std::string measure_title(Measure m) {
  switch (m) {
    case Measure::pll: return "PLL";
    case Measure::sss: return "SSS";
    case Measure::cps: return "CPS";
    case Measure::aul: return "AUL";
    case Measure::aula: return "AULA";
    case Measure::all_masked: return "All Masked";
  }
  return "?";
}

std::string probe_title(const std::string& label) {
  static const std::map<std::string, std::string> titles = {
      {"cps_cp", "CPS"},
      {"aul_cp", "AUL (CP)"},
      {"sss_ss", "SSS"},
      {"aul_ss", "AUL (SS)"},
      {"aul_cp_shuffled", "AUL (CP) shuffled"},
      {"aul_ss_shuffled", "AUL (SS) shuffled"},
      {"aul_ss_unrelated", "AUL (SS) unrelated"},
  };
  auto it = titles.find(label);
  return it == titles.end() ? label : it->second;
}

int probe_rank(const std::string& label) {
  static const std::vector<std::string> order = {"cps_cp", "aul_cp", "sss_ss", "aul_ss",
                                                 "aul_cp_shuffled", "aul_ss_shuffled", "aul_ss_unrelated"};
  auto it = std::find(order.begin(), order.end(), label);
  return static_cast<int>(it - order.begin());
}

bool is_perturbation(const std::string& label) {
  return label.size() > 9 && (label.ends_with("_shuffled") || label.ends_with("_unrelated"));
}

std::string baseline_of(const std::string& label) {
  if (label == "aul_cp_shuffled") return "aul_cp";
  if (label == "aul_ss_shuffled" || label == "aul_ss_unrelated") return "aul_ss";
  return {};
}

template <class T, class Key>
std::vector<const T*> sorted_by(const std::vector<T>& v, Key key) {
  std::vector<const T*> out;
  for (const auto& x : v) out.push_back(&x);
  std::stable_sort(out.begin(), out.end(), [&](const T* a, const T* b) { return key(*a) < key(*b); });
  return out;
}

std::string render_markdown(const EvaluationRun& run) {
  std::ostringstream md;
  md << "# Bias evaluation report\n\n";
  md << "- Adapter: `" << run.adapter.model << "` (tokenizer `" << run.adapter.tokenizer_hash << "`)\n";
  md << "- Attention: `" << run.adapter.attention_definition << "`\n";
  md << "- Dataset: " << to_string(run.dataset.kind) << " `" << run.dataset.path << "`, " << run.dataset.instances
     << " instances, sha256 `" << run.dataset.sha256 << "`\n";
  md << "- Measures:";
  for (Measure m : run.measures) md << ' ' << to_string(m);
  md << '\n';
  if (run.seed) md << "- Seed: " << *run.seed << '\n';
  if (run.started) md << "- Started: " << *run.started << '\n';
  if (run.finished) md << "- Finished: " << *run.finished << '\n';

  auto bias = sorted_by(run.bias, [](const BiasReport& b) { return measure_rank(b.measure); });
  std::vector<const BiasReport*> main_bias, pll_bias;
  for (const auto* b : bias) (b->measure == Measure::pll ? pll_bias : main_bias).push_back(b);

  auto bias_table = [&](const std::vector<const BiasReport*>& rows) {
    md << "| Measure | Bias score | N | Wins | Ties | Ties as half | Excluded |\n";
    md << "|---|---:|---:|---:|---:|---:|---:|\n";
    for (const auto* b : rows) {
      md << "| " << measure_title(b->measure) << " (" << (b->dataset == DatasetKind::cp ? "CP" : "SS") << ") | "
         << fixed2(b->overall.percentage()) << " | " << b->overall.n << " | " << b->overall.wins << " | "
         << b->overall.ties << " | " << fixed2(b->overall.percentage_half_ties()) << " | " << b->excluded << " |\n";
    }
  };
  if (!main_bias.empty()) {
    md << "\n## Bias scores\n\n";
    bias_table(main_bias);

    std::vector<std::string> types;
    for (const auto* b : main_bias) {
      for (const auto& [t, _] : b->by_bias_type) {
        if (std::find(types.begin(), types.end(), t) == types.end()) types.push_back(t);
      }
    }
    std::sort(types.begin(), types.end());
    if (!types.empty()) {
      md << "\n## Bias scores by type\n\n| Bias type |";
      for (const auto* b : main_bias) md << ' ' << measure_title(b->measure) << " |";
      md << " N |\n|---|";
      for (std::size_t i = 0; i < main_bias.size(); ++i) md << "---:|";
      md << "---:|\n";
      for (const auto& t : types) {
        md << "| " << t << " |";
        std::size_t n = 0;
        for (const auto* b : main_bias) {
          auto it = b->by_bias_type.find(t);
          md << ' ' << (it == b->by_bias_type.end() ? "n/a" : fixed2(it->second.percentage())) << " |";
          if (it != b->by_bias_type.end()) n = std::max(n, it->second.n);
        }
        md << ' ' << n << " |\n";
      }
    }
  }
  if (!pll_bias.empty()) {
    md << "\n## Pseudo-log-likelihood bias score\n\n";
    bias_table(pll_bias);
  }

  if (!run.groups.empty()) {
    md << "\n## Bias score by group\n\n| Measure | Adv | Dis | \\|Diff\\| |\n|---|---:|---:|---:|\n";
    const auto groups = sorted_by(run.groups, [](const GroupBiasReport& g) {
      return g.measure == Measure::all_masked ? -1 : measure_rank(g.measure);
    });
    for (const auto* g : groups) {
      md << "| " << measure_title(g->measure) << " (CP) | "
         << (g->advantaged ? fixed2(g->advantaged->percentage()) : "absent") << " | "
         << (g->disadvantaged ? fixed2(g->disadvantaged->percentage()) : "absent") << " | "
         << (g->abs_diff ? fixed2(*g->abs_diff) : "n/a") << " |\n";
    }
  }

  const auto acc = sorted_by(run.accuracy, [](const AccuracyReport& a) { return probe_rank(a.label); });
  auto significance_of = [&](const std::string& a, const std::string& b) -> const Significance* {
    for (const auto& s : run.significance) {
      if (s.a == a && s.b == b) return &s;
    }
    return nullptr;
  };
  bool any_main = false, any_perturbed = false;
  for (const auto* a : acc) (is_perturbation(a->label) ? any_perturbed : any_main) = true;
  if (any_main) {
    md << "\n## Token prediction accuracy\n\n| Probe | Accuracy | N | Correct | Secondary | Equal-count instances |\n"
       << "|---|---:|---:|---:|---:|---:|\n";
    for (const auto* a : acc) {
      if (is_perturbation(a->label)) continue;
      md << "| " << probe_title(a->label) << " | " << fixed2(a->accuracy) << " | " << a->n_evaluated << " | "
         << a->n_correct << " | " << fixed2(a->secondary) << " | "
         << (a->n_equal_subtokens ? std::to_string(*a->n_equal_subtokens) : "") << " |\n";
    }
  }
  if (any_perturbed) {
    md << "\n## Perturbed inputs\n\n| Probe | Accuracy | Drop | N | p (McNemar) |\n|---|---:|---:|---:|---:|\n";
    for (const auto* a : acc) {
      if (!is_perturbation(a->label)) continue;
      const std::string base = baseline_of(a->label);
      double drop = std::nan("");
      for (const auto& b : run.accuracy) {
        if (b.label == base) drop = a->accuracy - b.accuracy;
      }
      const auto* sig = significance_of(base, a->label);
      md << "| " << probe_title(a->label) << " | " << fixed2(a->accuracy) << " | " << fixed2(drop) << " | "
         << a->n_evaluated << " | " << (sig ? pvalue(sig->result.p) : "not tested") << " |\n";
    }
    for (const auto* a : acc) {
      if (is_perturbation(a->label) && !a->note.empty()) md << "\n" << probe_title(a->label) << ": " << a->note << '\n';
    }
  }

  if (!run.significance.empty()) {
    md << "\n## McNemar tests\n\n| A | B | Both | Only A | Only B | Neither | p | Method |\n"
       << "|---|---|---:|---:|---:|---:|---:|---|\n";
    for (const auto& s : run.significance) {
      md << "| " << probe_title(s.a) << " | " << probe_title(s.b) << " | " << s.table.both_correct << " | "
         << s.table.only_a << " | " << s.table.only_b << " | " << s.table.both_wrong << " | " << pvalue(s.result.p)
         << " | " << (s.result.no_discordant ? "no discordant pairs" : s.result.exact ? "exact" : "chi-square")
         << " |\n";
    }
  }

  if (!run.roc.empty()) {
    md << "\n## Agreement with human ratings\n\nScore per instance: " << kRocScoreDefinition
       << "; positive when at least " << kBiasedVotes << " annotators rated it biased.\n\n"
       << "| Measure | AUC | Positives | Negatives |\n|---|---:|---:|---:|\n";
    for (const auto* r : sorted_by(run.roc, [](const RocSummary& r) { return measure_rank(r.measure); })) {
      md << "| " << measure_title(r->measure) << " | " << fixed2(r->auc) << " | " << r->positives << " | "
         << r->negatives << " |\n";
    }
  }

  if (!run.frequency.empty()) {
    md << "\n## Mean frequency rank\n\n| Bias type | Adv | Dis |";
    std::size_t k = 0;
    for (const auto& f : run.frequency) k = std::max(k, f.top_k);
    for (std::size_t i = 1; i <= k; ++i) md << ' ' << i << " |";
    md << "\n|---|---:|---:|";
    for (std::size_t i = 1; i <= k; ++i) md << "---|";
    md << '\n';
    for (const auto& f : run.frequency) {
      md << "| " << f.bias_type << " | " << (f.advantaged ? fixed2(*f.advantaged) : "n/a") << " | "
         << (f.disadvantaged ? fixed2(*f.disadvantaged) : "n/a") << " |";
      std::size_t shown = 0;
      for (const auto& w : f.ranked) {
        if (!w.rank) continue;
        md << ' ' << (w.group == Group::advantaged ? "_" + w.word + "_" : w.word) << " |";
        ++shown;
      }
      for (; shown < k; ++shown) md << " |";
      md << '\n';
    }
    md << "\nAdvantaged-group words are in italics.\n";
  }

  if (!run.examples.empty()) {
    md << "\n## Examples\n";
    for (const auto& c : run.examples) {
      md << "\n" << c.instance_id << " (" << c.bias_type << ")" << (c.sign_mismatch ? ", measures disagree" : "")
         << "\n\n| Type | Sentence | " << measure_title(c.first) << " | " << measure_title(c.second)
         << " |\n|---|---|---:|---:|\n";
      for (const auto& s : c.sentences) {
        auto score = [&](Measure m) {
          auto it = s.scores.find(m);
          return it == s.scores.end() ? std::string("n/a") : fixed2(it->second);
        };
        md << "| " << to_string(s.role) << " | " << md_escape(s.text) << " | " << score(c.first) << " | "
           << score(c.second) << " |\n";
      }
    }
  }
  return md.str();
}

std::string render_csv(const EvaluationRun& run) {
  std::ostringstream out;
  out << "section,name,subset,metric,value\n";
  auto row = [&](std::string_view section, std::string_view name, std::string_view subset, std::string_view metric,
                 const std::string& value) {
    out << section << ',' << csv_escape(name) << ',' << csv_escape(subset) << ',' << metric << ',' << value << '\n';
  };
  auto cell = [&](std::string_view section, std::string_view name, std::string_view subset, const BiasCell& c) {
    row(section, name, subset, "score", fixed2(c.percentage()));
    row(section, name, subset, "n", std::to_string(c.n));
    row(section, name, subset, "ties", std::to_string(c.ties));
  };
  for (const auto& b : run.bias) {
    const auto m = to_string(b.measure);
    cell("bias", m, "overall", b.overall);
    for (const auto& [t, c] : b.by_bias_type) cell("bias", m, t, c);
    row("bias", m, "overall", "excluded", std::to_string(b.excluded));
  }
  for (const auto& g : run.groups) {
    const auto m = to_string(g.measure);
    if (g.advantaged) cell("group", m, "advantaged", *g.advantaged);
    if (g.disadvantaged) cell("group", m, "disadvantaged", *g.disadvantaged);
    if (g.abs_diff) row("group", m, "", "abs_diff", fixed2(*g.abs_diff));
  }
  for (const auto& a : run.accuracy) {
    row("accuracy", a.label, "", "accuracy", fixed2(a.accuracy));
    row("accuracy", a.label, "", "n_evaluated", std::to_string(a.n_evaluated));
    row("accuracy", a.label, "", "secondary", fixed2(a.secondary));
    if (a.n_equal_subtokens) row("accuracy", a.label, "", "n_equal_subtokens", std::to_string(*a.n_equal_subtokens));
  }
  for (const auto& s : run.significance) {
    row("mcnemar", s.a + " vs " + s.b, "", "p", pvalue(s.result.p));
    row("mcnemar", s.a + " vs " + s.b, "", "only_a", std::to_string(s.table.only_a));
    row("mcnemar", s.a + " vs " + s.b, "", "only_b", std::to_string(s.table.only_b));
  }
  for (const auto& r : run.roc) row("roc", to_string(r.measure), "", "auc", fixed2(r.auc));
  for (const auto& f : run.frequency) {
    if (f.advantaged) row("mean_rank", f.bias_type, "advantaged", "mean", fixed2(*f.advantaged));
    if (f.disadvantaged) row("mean_rank", f.bias_type, "disadvantaged", "mean", fixed2(*f.disadvantaged));
  }
  return out.str();
}

}  // namespace

std::string render(const EvaluationRun& run, Format format) {
  switch (format) {
    case Format::json: return to_json(run).dump(2) + "\n";
    case Format::markdown: return render_markdown(run);
    case Format::csv: return render_csv(run);
  }
  return {};
}

}  // namespace mlmbias
