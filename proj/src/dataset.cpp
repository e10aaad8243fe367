#include "mlmbias/dataset.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include "json.hpp"
#include "mlmbias/csv.hpp"
#include "mlmbias/error.hpp"

namespace mlmbias {

using json = nlohmann::ordered_json;

std::string_view to_string(Role role) {
  switch (role) {
    case Role::stereotype: return "stereotype";
    case Role::antistereotype: return "antistereotype";
    case Role::unrelated: return "unrelated";
  }
  return "?";
}

std::string_view to_string(DatasetKind kind) { return kind == DatasetKind::cp ? "cp" : "ss"; }

std::string_view to_string(Group group) {
  return group == Group::advantaged ? "advantaged" : "disadvantaged";
}

Role role_from_string(std::string_view s) {
  if (s == "stereotype") return Role::stereotype;
  if (s == "antistereotype" || s == "anti-stereotype") return Role::antistereotype;
  if (s == "unrelated") return Role::unrelated;
  throw Error("unknown sentence role '" + std::string(s) + "'");
}

DatasetKind dataset_from_string(std::string_view s) {
  if (s == "cp") return DatasetKind::cp;
  if (s == "ss") return DatasetKind::ss;
  throw Error("unknown dataset '" + std::string(s) + "'");
}

Group group_from_string(std::string_view s) {
  if (s == "advantaged") return Group::advantaged;
  if (s == "disadvantaged") return Group::disadvantaged;
  throw Error("unknown group '" + std::string(s) + "'");
}

const Sentence* TestInstance::find(Role role) const {
  for (const auto& s : sentences) {
    if (s.role == role) return &s;
  }
  return nullptr;
}

Sentence* TestInstance::find(Role role) {
  for (auto& s : sentences) {
    if (s.role == role) return &s;
  }
  return nullptr;
}

const Sentence& TestInstance::sentence(Role role) const {
  if (const auto* s = find(role)) return *s;
  throw Error("instance " + id + " has no " + std::string(to_string(role)) + " sentence");
}

Sentence& TestInstance::sentence(Role role) {
  if (auto* s = find(role)) return *s;
  throw Error("instance " + id + " has no " + std::string(to_string(role)) + " sentence");
}

// ---------------------------------------------------------------------------
// Bias types

namespace {

const std::vector<std::string> kCpTypes = {
    "age",      "disability",          "gender",   "nationality",          "physical_appearance",
    "race",     "religion",            "sexual_orientation", "socioeconomic_status"};
const std::vector<std::string> kSsTypes = {"gender", "profession", "race", "religion"};

std::string snake_lower(std::string_view raw) {
  std::string s;
  for (char c : raw) {
    if (c == '-' || c == ' ') {
      s.push_back('_');
    } else {
      s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  const auto first = s.find_first_not_of('_');
  if (first == std::string::npos) return {};
  return s.substr(first, s.find_last_not_of('_') - first + 1);
}

}  // namespace

const std::vector<std::string>& bias_types(DatasetKind kind) {
  return kind == DatasetKind::cp ? kCpTypes : kSsTypes;
}

std::string normalize_bias_type(std::string_view raw, DatasetKind kind) {
  static const std::map<std::string, std::string, std::less<>> aliases = {
      {"race_color", "race"},
      {"socioeconomic", "socioeconomic_status"},
  };
  std::string s = snake_lower(raw);
  if (kind == DatasetKind::cp) {
    if (auto it = aliases.find(s); it != aliases.end()) s = it->second;
  }
  const auto& known = bias_types(kind);
  if (std::find(known.begin(), known.end(), s) == known.end()) {
    throw Error("unknown " + std::string(to_string(kind)) + " bias type '" + std::string(raw) + "'");
  }
  return s;
}

// ---------------------------------------------------------------------------
// Validation

void validate(const TestInstance& instance) {
  auto fail = [&](const std::string& why) { throw Error("instance " + instance.id + ": " + why); };
  std::array<int, 3> counts{};
  for (const auto& s : instance.sentences) ++counts[static_cast<int>(s.role)];
  if (counts[0] != 1 || counts[1] != 1) fail("needs exactly one stereotype and one antistereotype sentence");
  if (counts[2] > 1) fail("more than one unrelated sentence");
  if (counts[2] == 1 && instance.dataset != DatasetKind::ss) fail("unrelated sentence outside SS");
  if (instance.group.has_value() != (instance.dataset == DatasetKind::cp)) {
    fail("group must be present exactly for CP instances");
  }
  for (const auto& s : instance.sentences) {
    if (!s.tokenized()) continue;
    if (!s.offsets.empty() && s.offsets.size() != s.subtokens.size()) fail("offsets/subtokens size mismatch");
    const auto& sp = s.split;
    if (sp.modified.empty() && sp.unmodified.empty()) continue;  // not split yet
    std::vector<bool> seen(s.size(), false);
    for (const auto* list : {&sp.modified, &sp.unmodified}) {
      for (const std::size_t p : *list) {
        if (p >= s.size()) fail("split position out of range");
        if (seen[p]) fail("split position listed twice");
        seen[p] = true;
      }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) fail("split does not cover every position");
  }
}

// ---------------------------------------------------------------------------
// CrowS-Pairs CSV

std::vector<TestInstance> parse_cp(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> header;
  if (!reader.next(header)) return {};

  auto column = [&](std::string_view name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw Error("cp: missing column '" + std::string(name) + "'");
  };
  const std::size_t more = column("sent_more");
  const std::size_t less = column("sent_less");
  const std::size_t direction = column("stereo_antistereo");
  const std::size_t type = column("bias_type");
  // The published file carries an unnamed leading index column.
  const bool has_index = !header.empty() && header[0].empty();
  const std::size_t needed = std::max({more, less, direction, type}) + 1;

  std::vector<TestInstance> out;
  std::vector<std::string> row;
  for (std::size_t index = 0; reader.next(row); ++index) {
    if (row.size() == 1 && row[0].empty()) {
      --index;
      continue;
    }
    const std::string where = "cp: row " + std::to_string(index) + " (line " + std::to_string(reader.line()) + ")";
    if (row.size() < needed) throw Error(where + ": expected at least " + std::to_string(needed) + " fields");
    if (row[more].empty() || row[less].empty()) throw Error(where + ": empty sentence");

    TestInstance inst;
    inst.dataset = DatasetKind::cp;
    inst.id = has_index && !row[0].empty() ? row[0] : std::to_string(index);
    try {
      inst.bias_type = normalize_bias_type(row[type], DatasetKind::cp);
    } catch (const Error& e) {
      throw Error(where + ": " + e.what());
    }
    // sent_more is the more stereotypical sentence in both directions; the
    // direction says whether it targets the disadvantaged or advantaged group.
    if (row[direction] == "stereo") {
      inst.group = Group::disadvantaged;
    } else if (row[direction] == "antistereo") {
      inst.group = Group::advantaged;
    } else {
      throw Error(where + ": bad stereo_antistereo value '" + row[direction] + "'");
    }
    Sentence st, at;
    st.text = row[more];
    st.role = Role::stereotype;
    at.text = row[less];
    at.role = Role::antistereotype;
    inst.sentences.push_back(std::move(st));
    inst.sentences.push_back(std::move(at));
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<TestInstance> load_cp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return parse_cp(in);
}

// ---------------------------------------------------------------------------
// StereoSet dev JSON

namespace {

bool iequal(char a, char b) {
  return std::tolower(static_cast<unsigned char>(a)) == std::tolower(static_cast<unsigned char>(b));
}

}  // namespace

CharSpan locate_blank_filler(std::string_view context, std::string_view sentence) {
  const auto blank = context.find(kSsBlank);
  if (blank == std::string_view::npos) throw Error("ss: context has no BLANK: " + std::string(context));
  const std::string_view prefix = context.substr(0, blank);
  const std::string_view suffix = context.substr(blank + kSsBlank.size());

  std::size_t head = 0;
  while (head < prefix.size() && head < sentence.size() && iequal(prefix[head], sentence[head])) ++head;
  std::size_t tail = 0;
  while (tail < suffix.size() && head + tail < sentence.size() &&
         iequal(suffix[suffix.size() - 1 - tail], sentence[sentence.size() - 1 - tail])) {
    ++tail;
  }
  CharSpan span{head, sentence.size() - tail};
  while (span.begin < span.end && std::isspace(static_cast<unsigned char>(sentence[span.begin]))) ++span.begin;
  while (span.end > span.begin && std::isspace(static_cast<unsigned char>(sentence[span.end - 1]))) --span.end;
  if (span.begin == span.end) {
    throw Error("ss: cannot find the blank filler in '" + std::string(sentence) + "'");
  }
  return span;
}

TokenSplit split_from_target(const Sentence& sentence) {
  if (!sentence.target_span) throw Error("sentence has no target span: " + sentence.text);
  if (sentence.offsets.size() != sentence.subtokens.size()) {
    throw Error("tokenizer offsets required to split SS sentence: " + sentence.text);
  }
  TokenSplit split;
  for (std::size_t i = 0; i < sentence.offsets.size(); ++i) {
    (sentence.offsets[i].overlaps(*sentence.target_span) ? split.modified : split.unmodified).push_back(i);
  }
  return split;
}

std::vector<TestInstance> parse_ss(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(std::string("ss: invalid JSON: ") + e.what());
  }
  const json* intra = nullptr;
  if (doc.contains("data") && doc["data"].contains("intrasentence")) {
    intra = &doc["data"]["intrasentence"];
  } else if (doc.contains("intrasentence")) {
    intra = &doc["intrasentence"];
  }
  std::vector<TestInstance> out;
  if (intra == nullptr) return out;

  for (std::size_t k = 0; k < intra->size(); ++k) {
    const json& entry = (*intra)[k];
    TestInstance inst;
    inst.dataset = DatasetKind::ss;
    inst.id = entry.value("id", std::to_string(k));
    const std::string where = "ss: entry " + std::to_string(k) + " (" + inst.id + ")";
    try {
      inst.bias_type = normalize_bias_type(entry.at("bias_type").get<std::string>(), DatasetKind::ss);
      inst.context = entry.at("context").get<std::string>();
      for (const json& cand : entry.at("sentences")) {
        if (!cand.contains("gold_label")) throw Error("candidate without gold_label");
        Sentence s;
        s.text = cand.at("sentence").get<std::string>();
        s.role = role_from_string(cand["gold_label"].get<std::string>());
        s.target_span = locate_blank_filler(inst.context, s.text);
        if (inst.find(s.role)) throw Error("duplicate " + std::string(to_string(s.role)) + " candidate");
        inst.sentences.push_back(std::move(s));
      }
    } catch (const json::exception& e) {
      throw Error(where + ": " + e.what());
    } catch (const Error& e) {
      throw Error(where + ": " + e.what());
    }
    if (!inst.find(Role::stereotype) || !inst.find(Role::antistereotype)) {
      throw Error(where + ": missing stereotype or anti-stereotype candidate");
    }
    std::stable_sort(inst.sentences.begin(), inst.sentences.end(),
                     [](const Sentence& a, const Sentence& b) { return a.role < b.role; });
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<TestInstance> load_ss(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return parse_ss(in);
}

// ---------------------------------------------------------------------------
// Canonical JSONL

namespace {

json span_json(const CharSpan& s) { return json::array({s.begin, s.end}); }
CharSpan span_from(const json& j) { return {j.at(0).get<std::size_t>(), j.at(1).get<std::size_t>()}; }

}  // namespace

std::string to_json_line(const TestInstance& inst) {
  json j;
  j["id"] = inst.id;
  j["dataset"] = to_string(inst.dataset);
  j["bias_type"] = inst.bias_type;
  j["group"] = inst.group ? json(to_string(*inst.group)) : json(nullptr);
  if (!inst.context.empty()) j["context"] = inst.context;
  json sentences = json::array();
  for (const auto& s : inst.sentences) {
    json js;
    js["role"] = to_string(s.role);
    js["text"] = s.text;
    js["subtokens"] = s.subtokens;
    if (!s.offsets.empty()) {
      json offs = json::array();
      for (const auto& o : s.offsets) offs.push_back(span_json(o));
      js["offsets"] = std::move(offs);
    }
    if (s.target_span) js["target_span"] = span_json(*s.target_span);
    js["modified"] = s.split.modified;
    js["unmodified"] = s.split.unmodified;
    sentences.push_back(std::move(js));
  }
  j["sentences"] = std::move(sentences);
  return j.dump();
}

TestInstance instance_from_json_line(std::string_view line) {
  try {
    const json j = json::parse(line);
    TestInstance inst;
    inst.id = j.at("id").get<std::string>();
    inst.dataset = dataset_from_string(j.at("dataset").get<std::string>());
    inst.bias_type = j.at("bias_type").get<std::string>();
    if (j.contains("group") && !j["group"].is_null()) inst.group = group_from_string(j["group"].get<std::string>());
    inst.context = j.value("context", std::string());
    for (const json& js : j.at("sentences")) {
      Sentence s;
      s.role = role_from_string(js.at("role").get<std::string>());
      s.text = js.at("text").get<std::string>();
      s.subtokens = js.value("subtokens", std::vector<std::string>{});
      if (js.contains("offsets")) {
        for (const json& o : js["offsets"]) s.offsets.push_back(span_from(o));
      }
      if (js.contains("target_span")) s.target_span = span_from(js["target_span"]);
      s.split.modified = js.value("modified", std::vector<std::size_t>{});
      s.split.unmodified = js.value("unmodified", std::vector<std::size_t>{});
      inst.sentences.push_back(std::move(s));
    }
    validate(inst);
    return inst;
  } catch (const json::exception& e) {
    throw Error(std::string("instance line: ") + e.what());
  }
}

void write_instances(std::ostream& out, const std::vector<TestInstance>& instances) {
  for (const auto& inst : instances) out << to_json_line(inst) << '\n';
}

std::vector<TestInstance> read_instances(std::istream& in) {
  std::vector<TestInstance> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(instance_from_json_line(line));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Human ratings

std::vector<HumanRating> parse_ratings(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> row;
  if (!reader.next(row)) return {};
  if (row.size() < 2 || row[0] != "instance_id" || row[1] != "biased_votes") {
    throw Error("ratings: expected header 'instance_id,biased_votes'");
  }
  std::vector<HumanRating> out;
  std::set<std::string> seen;
  while (reader.next(row)) {
    if (row.size() == 1 && row[0].empty()) continue;
    const std::string where = "ratings: line " + std::to_string(reader.line());
    if (row.size() < 2) throw Error(where + ": expected two fields");
    HumanRating r{row[0], 0};
    try {
      std::size_t used = 0;
      r.biased_votes = std::stoi(row[1], &used);
      if (used != row[1].size()) throw Error("trailing characters");
    } catch (const std::exception&) {
      throw Error(where + ": bad vote count '" + row[1] + "'");
    }
    if (r.biased_votes < 0 || r.biased_votes > 6) throw Error(where + ": votes must lie in [0,6]");
    if (!seen.insert(r.instance_id).second) throw Error(where + ": duplicate instance " + r.instance_id);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<HumanRating> load_ratings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return parse_ratings(in);
}

}  // namespace mlmbias
