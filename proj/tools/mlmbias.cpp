// mlmbias: command-line front end for the bias evaluation engine.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "mlmbias/adapter.hpp"
#include "mlmbias/dataset.hpp"
#include "mlmbias/digest.hpp"
#include "mlmbias/engine.hpp"
#include "mlmbias/error.hpp"
#include "mlmbias/freq.hpp"
#include "mlmbias/report.hpp"
#include "mlmbias/stats.hpp"

namespace fs = std::filesystem;
using namespace mlmbias;

namespace {

constexpr const char* kAdapterEnv = "MLMBIAS_ADAPTER";

struct AdapterArgs {
  std::string command;
  std::string mock;
  std::string capture;
  std::string replay;

  void add(CLI::App* app) {
    app->add_option("--adapter", command, std::string("adapter launch command (default: $") + kAdapterEnv + ")");
    app->add_option("--mock", mock, "serve from a mock table file in-process instead of an adapter");
    app->add_option("--capture", capture, "record every protocol line to this file");
    app->add_option("--replay", replay, "answer from a capture file instead of an adapter");
  }

  std::unique_ptr<Transport> transport() const {
    TransportOptions o;
    if (!replay.empty()) o.replay = replay;
    if (!capture.empty()) o.capture = capture;
    if (!command.empty()) {
      o.command = command;
    } else if (const char* env = std::getenv(kAdapterEnv); env && *env) {
      o.command = env;
    }
    if (!o.command && !mock.empty()) o.mock = mock_tables_from_json(read_file(mock));
    if (!o.replay && !o.command && !o.mock) {
      throw Error(std::string("no adapter: pass --adapter, --mock or --replay, or set ") + kAdapterEnv);
    }
    return make_transport(o);
  }

  static std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
};

std::vector<TestInstance> load_dataset(const fs::path& path, std::string kind) {
  if (kind.empty()) {
    const auto ext = path.extension().string();
    kind = ext == ".csv" ? "cp" : ext == ".jsonl" ? "instances" : ext == ".json" ? "ss" : "";
    if (kind.empty()) throw Error("cannot infer dataset kind of " + path.string() + "; pass --kind");
  }
  if (kind == "cp") return load_cp(path);
  if (kind == "ss") return load_ss(path);
  if (kind == "instances") {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return read_instances(in);
  }
  throw Error("unknown dataset kind '" + kind + "'");
}

std::vector<Measure> parse_measures(const std::vector<std::string>& names) {
  std::vector<Measure> out;
  for (const auto& n : names) out.push_back(measure_from_string(n));
  return out;
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

bool has(const std::vector<Measure>& ms, Measure m) { return std::find(ms.begin(), ms.end(), m) != ms.end(); }

struct EvaluateArgs {
  std::string dataset;
  std::string kind;
  std::vector<std::string> measures;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string records;
  std::string ratings;
  std::string format = "json";
  std::size_t examples = 5;
  std::size_t batch = 4096;
  bool no_unrelated = false;
  bool timestamps = false;
  AdapterArgs adapter;
};

void add_evaluate_options(CLI::App* app, EvaluateArgs& a) {
  app->add_option("--dataset", a.dataset, "CP csv, SS json or instances jsonl")->required();
  app->add_option("--kind", a.kind, "cp, ss or instances (default: from the extension)");
  app->add_option("--measures", a.measures, "measures to run (default: all)")->delimiter(',');
  app->add_option("--seed", a.seed, "run the shuffled-input probe with this seed");
  app->add_option("--out", a.out, "report file (default: stdout)");
  app->add_option("--format", a.format, "json, markdown or csv");
  app->add_option("--records", a.records, "write score records (jsonl) here");
  app->add_option("--ratings", a.ratings, "human ratings csv; adds ROC/AUC per measure");
  app->add_option("--examples", a.examples, "number of example cases to include");
  app->add_option("--batch", a.batch, "requests per exchange with the adapter");
  app->add_flag("--no-unrelated", a.no_unrelated, "skip the unrelated-sentence probe (SS)");
  app->add_flag("--timestamps", a.timestamps, "record start and finish times in the report");
  a.adapter.add(app);
}

int run_evaluate(const EvaluateArgs& a, bool bias, bool accuracy) {
  EvaluationRun run;
  if (a.timestamps) run.started = utc_now();

  auto instances = load_dataset(a.dataset, a.kind);
  AdapterClient client(a.adapter.transport());
  run.adapter = client.handshake();

  EngineOptions opts;
  if (!a.measures.empty()) opts.measures = parse_measures(a.measures);
  opts.bias = bias;
  opts.accuracy = accuracy;
  opts.shuffle_seed = a.seed;
  opts.unrelated = !a.no_unrelated;
  opts.batch = a.batch;
  auto ev = evaluate(client, std::move(instances), opts);

  run.dataset = {ev.dataset, a.dataset, sha256_file(a.dataset), ev.instances.size()};
  run.measures = opts.measures;
  run.seed = a.seed;
  run.bias = ev.bias;
  run.groups = ev.groups;
  run.accuracy = ev.accuracy;
  run.significance = ev.significance;

  if (!a.ratings.empty()) {
    const auto ratings = load_ratings(a.ratings);
    for (Measure m : opts.measures) {
      const auto c = roc(score_differences(ev.records, m), ratings);
      run.roc.push_back({m, c.auc, c.positives, c.negatives});
    }
  }
  const Measure first = ev.dataset == DatasetKind::cp ? Measure::cps : Measure::sss;
  if (a.examples > 0 && has(opts.measures, first) && has(opts.measures, Measure::aula)) {
    run.examples = example_cases(ev.records, ev.instances, first, Measure::aula, a.examples);
  }
  if (!a.records.empty()) {
    std::ofstream out(a.records, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + a.records);
    write_records(out, ev.records);
  }
  if (a.timestamps) run.finished = utc_now();
  write_output(a.out, render(run, format_from_string(a.format)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Social-bias evaluation for masked language models"};
  app.require_subcommand(1);

  EvaluateArgs eval_args;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "score a dataset and report bias, accuracy and probes");
  add_evaluate_options(evaluate_cmd, eval_args);

  EvaluateArgs acc_args;
  acc_args.measures = {"cps", "sss", "aul"};
  auto* accuracy_cmd = app.add_subcommand("accuracy", "token prediction accuracy only");
  add_evaluate_options(accuracy_cmd, acc_args);

  struct {
    std::string dataset, kind, out;
    std::uint64_t seed = 0;
    AdapterArgs adapter;
  } perturb_args;
  auto* perturb_cmd = app.add_subcommand("perturb", "tokenize and shuffle subtokens; writes instances jsonl");
  perturb_cmd->add_option("--dataset", perturb_args.dataset)->required();
  perturb_cmd->add_option("--kind", perturb_args.kind);
  perturb_cmd->add_option("--seed", perturb_args.seed)->required();
  perturb_cmd->add_option("--out", perturb_args.out, "default: stdout");
  perturb_args.adapter.add(perturb_cmd);

  struct {
    std::string records, ratings, csv, svg;
    std::vector<std::string> measures;
  } roc_args;
  auto* roc_cmd = app.add_subcommand("roc", "ROC/AUC of score differences against human ratings");
  roc_cmd->add_option("--records", roc_args.records, "score records jsonl")->required();
  roc_cmd->add_option("--ratings", roc_args.ratings, "csv: instance_id,biased_votes")->required();
  roc_cmd->add_option("--measures", roc_args.measures, "default: every measure in the records")->delimiter(',');
  roc_cmd->add_option("--csv", roc_args.csv, "write curve points (single measure)");
  roc_cmd->add_option("--svg", roc_args.svg, "write an SVG plot");

  struct {
    std::vector<std::string> corpus;
    std::string lexicon, stoplist, counts, from_cp, write_lexicon, out, selection = "per_group";
    std::size_t top_k = 8;
    unsigned threads = 0;
  } freq_args;
  auto* freq_cmd = app.add_subcommand("freq", "word frequencies and mean rank of group words");
  freq_cmd->add_option("--corpus", freq_args.corpus, "plain-text corpus files");
  freq_cmd->add_option("--lexicon", freq_args.lexicon, "group lexicon file");
  freq_cmd->add_option("--from-cp", freq_args.from_cp, "derive the lexicon from a CP csv");
  freq_cmd->add_option("--write-lexicon", freq_args.write_lexicon, "save the lexicon in use");
  freq_cmd->add_option("--stoplist", freq_args.stoplist, "words to ignore");
  freq_cmd->add_option("--counts", freq_args.counts, "precomputed counts csv: bias_type,group,word,count");
  freq_cmd->add_option("--top-k", freq_args.top_k);
  freq_cmd->add_option("--selection", freq_args.selection, "per_group or overall");
  freq_cmd->add_option("--threads", freq_args.threads, "0 = all cores");
  freq_cmd->add_option("--out", freq_args.out, "CSV output (default: stdout)");

  struct {
    std::string run, format = "markdown", out;
  } render_args;
  auto* render_cmd = app.add_subcommand("render", "render a saved json report");
  render_cmd->add_option("--run", render_args.run, "report json")->required();
  render_cmd->add_option("--format", render_args.format, "json, markdown or csv");
  render_cmd->add_option("--out", render_args.out);

  std::string table_path;
  auto* mock_cmd = app.add_subcommand("mock-adapter", "serve the line protocol on stdio from a mock table");
  mock_cmd->add_option("--table", table_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*evaluate_cmd) return run_evaluate(eval_args, true, true);
    if (*accuracy_cmd) return run_evaluate(acc_args, false, true);

    if (*perturb_cmd) {
      auto instances = load_dataset(perturb_args.dataset, perturb_args.kind);
      AdapterClient client(perturb_args.adapter.transport());
      tokenize_instances(client, instances);
      std::ostringstream out;
      write_instances(out, perturb_shuffle(instances, perturb_args.seed));
      write_output(perturb_args.out, out.str());
      return 0;
    }

    if (*roc_cmd) {
      std::ifstream in(roc_args.records, std::ios::binary);
      if (!in) throw Error("cannot open " + roc_args.records);
      const auto records = read_records(in);
      const auto ratings = load_ratings(roc_args.ratings);
      std::vector<Measure> measures = parse_measures(roc_args.measures);
      if (measures.empty()) {
        for (Measure m : kAllMeasures) {
          if (std::any_of(records.begin(), records.end(), [&](const ScoreRecord& r) { return r.measure == m; })) {
            measures.push_back(m);
          }
        }
      }
      if (!roc_args.csv.empty() && measures.size() != 1) throw Error("--csv needs exactly one measure");
      std::vector<std::pair<std::string, RocCurve>> curves;
      for (Measure m : measures) {
        auto c = roc(score_differences(records, m), ratings);
        std::printf("%s\tAUC %.4f\tpositives %zu\tnegatives %zu\n", std::string(to_string(m)).c_str(), c.auc,
                    c.positives, c.negatives);
        curves.emplace_back(std::string(to_string(m)), std::move(c));
      }
      if (!roc_args.csv.empty()) {
        std::ostringstream out;
        write_roc_csv(out, curves.front().second);
        write_output(roc_args.csv, out.str());
      }
      if (!roc_args.svg.empty()) write_output(roc_args.svg, render_roc_svg(curves));
      return 0;
    }

    if (*freq_cmd) {
      const auto selection = freq_args.selection == "overall" ? RankSelection::overall
                             : freq_args.selection == "per_group"
                                 ? RankSelection::per_group
                                 : throw Error("unknown selection '" + freq_args.selection + "'");
      std::set<std::string> stoplist;
      if (!freq_args.stoplist.empty()) stoplist = load_stoplist(freq_args.stoplist);
      std::vector<MeanRank> ranks;

      if (!freq_args.counts.empty()) {
        for (const auto& gc : load_group_counts(freq_args.counts)) {
          ranks.push_back(mean_rank(gc.table, gc.lexicon, freq_args.top_k, selection));
        }
      } else {
        std::vector<LexiconEntry> entries;
        if (!freq_args.lexicon.empty()) entries = load_lexicon(freq_args.lexicon);
        if (!freq_args.from_cp.empty()) {
          const auto more = lexicon_from_cp(load_cp(freq_args.from_cp));
          entries.insert(entries.end(), more.begin(), more.end());
        }
        if (entries.empty()) throw Error("freq needs --counts, --lexicon or --from-cp");
        if (freq_args.corpus.empty()) throw Error("freq needs --corpus files");
        std::set<std::string> words;
        for (const auto& e : entries) {
          if (!stoplist.count(e.word)) words.insert(e.word);
        }
        const std::vector<fs::path> paths(freq_args.corpus.begin(), freq_args.corpus.end());
        const auto table = count_corpus(paths, words, freq_args.threads);
        const auto lexicons = assemble_lexicons(entries, stoplist, &table);
        if (!freq_args.write_lexicon.empty()) {
          std::vector<LexiconEntry> resolved;
          for (const auto& l : lexicons) {
            for (const auto& w : l.advantaged) resolved.push_back({l.bias_type, Group::advantaged, w, 1.0});
            for (const auto& w : l.disadvantaged) resolved.push_back({l.bias_type, Group::disadvantaged, w, 1.0});
          }
          std::ostringstream out;
          write_lexicon(out, resolved);
          write_output(freq_args.write_lexicon, out.str());
        }
        for (const auto& l : lexicons) ranks.push_back(mean_rank(table, l, freq_args.top_k, selection));
        std::fprintf(stderr, "counted %llu words\n", static_cast<unsigned long long>(table.total_tokens));
      }
      for (const auto& r : ranks) {
        std::fprintf(stderr, "%s\tadv %s\tdis %s%s\n", r.bias_type.c_str(),
                     r.advantaged ? std::to_string(*r.advantaged).c_str() : "n/a",
                     r.disadvantaged ? std::to_string(*r.disadvantaged).c_str() : "n/a",
                     r.short_list ? "\t(short list)" : "");
      }
      std::ostringstream out;
      write_rank_csv(out, ranks);
      write_output(freq_args.out, out.str());
      return 0;
    }

    if (*render_cmd) {
      const auto run = run_from_json(AdapterArgs::read_file(render_args.run));
      write_output(render_args.out, render(run, format_from_string(render_args.format)));
      return 0;
    }

    if (*mock_cmd) {
      MockServer server(mock_tables_from_json(AdapterArgs::read_file(table_path)));
      std::ios::sync_with_stdio(false);
      std::string line;
      while (std::getline(std::cin, line)) {
        if (line.empty()) continue;
        std::cout << server.handle(line) << '\n' << std::flush;
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "mlmbias: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
