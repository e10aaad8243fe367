#include "mlmbias/protocol.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "json.hpp"
#include "mlmbias/digest.hpp"
#include "mlmbias/error.hpp"

namespace mlmbias {

using json = nlohmann::ordered_json;

std::size_t AdapterRequest::mask_count() const {
  return static_cast<std::size_t>(std::count(subtokens.begin(), subtokens.end(), kMaskToken));
}

std::vector<std::size_t> AdapterRequest::masked_positions() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < subtokens.size(); ++i) {
    if (subtokens[i] == kMaskToken) out.push_back(i);
  }
  return out;
}

void check_request(const AdapterRequest& request) {
  auto fail = [&](const std::string& why) { throw Error("request " + request.id + ": " + why); };
  if (request.id.empty()) fail("empty id");
  if (request.targets.size() != request.positions.size()) fail("targets/positions size mismatch");
  for (std::size_t p : request.positions) {
    if (p >= request.subtokens.size()) fail("position " + std::to_string(p) + " out of range");
  }
}

void check_response(const AdapterRequest& request, const AdapterResponse& response) {
  auto fail = [&](const std::string& why) { throw Error("response " + response.id + ": " + why); };
  if (response.id != request.id) fail("answers request " + request.id);
  if (response.logprobs.size() != request.positions.size()) fail("wrong number of logprob entries");
  if (response.argmax.size() != request.positions.size()) fail("wrong number of argmax entries");
  for (std::size_t k = 0; k < request.positions.size(); ++k) {
    for (const auto& target : request.targets[k]) {
      auto it = response.logprobs[k].find(target);
      if (it == response.logprobs[k].end()) fail("missing logprob for '" + target + "'");
      if (!std::isfinite(it->second) || it->second > 0.0) fail("logprob for '" + target + "' is not <= 0");
    }
  }
  if (response.attention.has_value() != request.want_attention) fail("attention present iff requested");
  if (response.attention) {
    if (response.attention->size() != request.subtokens.size()) fail("attention length mismatch");
    for (double a : *response.attention) {
      if (!(a >= 0.0) || !std::isfinite(a)) fail("negative or non-finite attention weight");
    }
  }
}

// ---------------------------------------------------------------------------
// Wire encoding

namespace wire {

namespace {

json parse_line(std::string_view line) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw Error(std::string("protocol: malformed line: ") + e.what());
  }
}

template <typename F>
auto guarded(std::string_view what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error("protocol: bad " + std::string(what) + ": " + e.what());
  }
}

std::string_view kind_name(Kind k) {
  switch (k) {
    case Kind::hello: return "hello";
    case Kind::tokenize: return "tokenize";
    case Kind::score: return "score";
  }
  return "?";
}

}  // namespace

std::string encode_hello(std::string_view id) {
  json j;
  j["id"] = id;
  j["kind"] = kind_name(Kind::hello);
  return j.dump();
}

std::string encode_tokenize(std::string_view id, std::string_view text) {
  json j;
  j["id"] = id;
  j["kind"] = kind_name(Kind::tokenize);
  j["text"] = text;
  return j.dump();
}

std::string encode_score(const AdapterRequest& r) {
  json j;
  j["id"] = r.id;
  j["kind"] = kind_name(Kind::score);
  j["subtokens"] = r.subtokens;
  j["positions"] = r.positions;
  j["targets"] = r.targets;
  j["attention"] = r.want_attention;
  return j.dump();
}

Header peek(std::string_view line) {
  const json j = parse_line(line);
  return guarded("header", [&] {
    Header h;
    h.id = j.at("id").get<std::string>();
    if (j.contains("kind")) {
      const auto k = j["kind"].get<std::string>();
      if (k == "hello") {
        h.kind = Kind::hello;
      } else if (k == "tokenize") {
        h.kind = Kind::tokenize;
      } else if (k == "score") {
        h.kind = Kind::score;
      } else {
        throw Error("protocol: unknown request kind '" + k + "'");
      }
    }
    if (j.contains("error")) h.error = j["error"].get<std::string>();
    return h;
  });
}

std::string decode_tokenize_request(std::string_view line) {
  const json j = parse_line(line);
  return guarded("tokenize request", [&] { return j.at("text").get<std::string>(); });
}

AdapterRequest decode_score_request(std::string_view line) {
  const json j = parse_line(line);
  return guarded("score request", [&] {
    AdapterRequest r;
    r.id = j.at("id").get<std::string>();
    r.subtokens = j.at("subtokens").get<std::vector<std::string>>();
    r.positions = j.at("positions").get<std::vector<std::size_t>>();
    r.targets = j.at("targets").get<std::vector<std::vector<std::string>>>();
    r.want_attention = j.value("attention", false);
    return r;
  });
}

std::string encode_handshake(std::string_view id, const Handshake& hs) {
  json j;
  j["id"] = id;
  j["model"] = hs.model;
  j["tokenizer_hash"] = hs.tokenizer_hash;
  j["attention_definition"] = hs.attention_definition;
  return j.dump();
}

std::string encode_tokenization(std::string_view id, const Tokenization& tok) {
  json j;
  j["id"] = id;
  j["subtokens"] = tok.subtokens;
  if (!tok.offsets.empty()) {
    json offs = json::array();
    for (const auto& o : tok.offsets) offs.push_back(json::array({o.begin, o.end}));
    j["offsets"] = std::move(offs);
  }
  return j.dump();
}

std::string encode_response(const AdapterResponse& r) {
  json j;
  j["id"] = r.id;
  json lp = json::array();
  for (const auto& m : r.logprobs) {
    json o = json::object();
    for (const auto& [tok, v] : m) o[tok] = v;
    lp.push_back(std::move(o));
  }
  j["logprobs"] = std::move(lp);
  j["argmax"] = r.argmax;
  if (r.attention) j["attention"] = *r.attention;
  return j.dump();
}

std::string encode_error(std::string_view id, std::string_view message) {
  json j;
  j["id"] = id;
  j["error"] = message;
  return j.dump();
}

Handshake decode_handshake(std::string_view line) {
  const json j = parse_line(line);
  return guarded("handshake", [&] {
    return Handshake{j.at("model").get<std::string>(), j.value("tokenizer_hash", std::string()),
                     j.value("attention_definition", std::string())};
  });
}

Tokenization decode_tokenization(std::string_view line) {
  const json j = parse_line(line);
  return guarded("tokenization", [&] {
    Tokenization t;
    t.subtokens = j.at("subtokens").get<std::vector<std::string>>();
    if (j.contains("offsets")) {
      for (const json& o : j["offsets"]) t.offsets.push_back({o.at(0).get<std::size_t>(), o.at(1).get<std::size_t>()});
      if (t.offsets.size() != t.subtokens.size()) throw Error("protocol: offsets/subtokens length mismatch");
    }
    return t;
  });
}

AdapterResponse decode_response(std::string_view line) {
  const json j = parse_line(line);
  return guarded("score response", [&] {
    AdapterResponse r;
    r.id = j.at("id").get<std::string>();
    for (const json& o : j.at("logprobs")) {
      std::map<std::string, double> m;
      for (const auto& [tok, v] : o.items()) m.emplace(tok, v.get<double>());
      r.logprobs.push_back(std::move(m));
    }
    r.argmax = j.at("argmax").get<std::vector<std::string>>();
    if (j.contains("attention") && !j["attention"].is_null()) r.attention = j["attention"].get<std::vector<double>>();
    return r;
  });
}

}  // namespace wire

// ---------------------------------------------------------------------------
// Mock adapter

AdapterResponse mock_adapter(const AdapterRequest& request, const MockTables& tables) {
  check_request(request);
  AdapterResponse r;
  r.id = request.id;

  std::string table_max;
  if (tables.argmax_mode == MockTables::ArgmaxMode::table_max) {
    if (tables.logprobs.empty()) throw Error("mock: empty logprob table");
    double best = 0.0;
    for (const auto& [tok, v] : tables.logprobs) {
      if (table_max.empty() || v > best) {  // map order: ties keep the smallest subtoken
        table_max = tok;
        best = v;
      }
    }
  }

  for (std::size_t k = 0; k < request.positions.size(); ++k) {
    std::map<std::string, double> scores;
    for (const auto& target : request.targets[k]) {
      auto it = tables.logprobs.find(target);
      if (it == tables.logprobs.end()) throw Error("mock: no logprob for subtoken '" + target + "'");
      scores.emplace(target, it->second);
    }
    r.logprobs.push_back(std::move(scores));
    switch (tables.argmax_mode) {
      case MockTables::ArgmaxMode::table_max: r.argmax.push_back(table_max); break;
      case MockTables::ArgmaxMode::echo_target:
        r.argmax.push_back(request.targets[k].empty() ? tables.argmax_token : request.targets[k].front());
        break;
      case MockTables::ArgmaxMode::constant: r.argmax.push_back(tables.argmax_token); break;
    }
  }
  if (request.want_attention) {
    std::vector<double> att;
    att.reserve(request.subtokens.size());
    for (const auto& tok : request.subtokens) {
      auto it = tables.attention.find(tok);
      att.push_back(it == tables.attention.end() ? 1.0 : it->second);
    }
    r.attention = std::move(att);
  }
  return r;
}

Tokenization mock_tokenize(std::string_view text, const MockTables& tables) {
  Tokenization out;
  auto emit = [&](std::size_t begin, std::size_t end) {
    const std::string piece(text.substr(begin, end - begin));
    auto it = tables.word_pieces.find(piece);
    if (it == tables.word_pieces.end()) {
      out.subtokens.push_back(piece);
      out.offsets.push_back({begin, end});
      return;
    }
    std::string joined;
    for (const auto& p : it->second) joined += p;
    std::size_t at = begin;
    for (const auto& p : it->second) {
      out.subtokens.push_back(p);
      if (joined == piece) {
        out.offsets.push_back({at, at + p.size()});
        at += p.size();
      } else {
        out.offsets.push_back({begin, end});
      }
    }
  };

  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
    } else if (c < 0x80 && std::ispunct(c)) {
      emit(i, i + 1);
      ++i;
    } else {
      std::size_t j = i;
      while (j < text.size()) {
        const auto d = static_cast<unsigned char>(text[j]);
        if (std::isspace(d) || (d < 0x80 && std::ispunct(d))) break;
        ++j;
      }
      emit(i, j);
      i = j;
    }
  }
  return out;
}

MockTables mock_tables_from_json(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(std::string("mock tables: invalid JSON: ") + e.what());
  }
  try {
    MockTables t;
    if (j.contains("logprobs")) t.logprobs = j["logprobs"].get<std::map<std::string, double>>();
    if (j.contains("attention")) t.attention = j["attention"].get<std::map<std::string, double>>();
    if (j.contains("word_pieces")) {
      t.word_pieces = j["word_pieces"].get<std::map<std::string, std::vector<std::string>>>();
    }
    const std::string mode = j.value("argmax_mode", std::string("table_max"));
    if (mode == "table_max") {
      t.argmax_mode = MockTables::ArgmaxMode::table_max;
    } else if (mode == "echo_target") {
      t.argmax_mode = MockTables::ArgmaxMode::echo_target;
    } else if (mode == "constant") {
      t.argmax_mode = MockTables::ArgmaxMode::constant;
    } else {
      throw Error("mock tables: unknown argmax_mode '" + mode + "'");
    }
    t.argmax_token = j.value("argmax_token", std::string());
    return t;
  } catch (const json::exception& e) {
    throw Error(std::string("mock tables: ") + e.what());
  }
}

std::string mock_tables_to_json(const MockTables& t) {
  json j;
  j["logprobs"] = t.logprobs;
  j["attention"] = t.attention;
  j["word_pieces"] = t.word_pieces;
  switch (t.argmax_mode) {
    case MockTables::ArgmaxMode::table_max: j["argmax_mode"] = "table_max"; break;
    case MockTables::ArgmaxMode::echo_target: j["argmax_mode"] = "echo_target"; break;
    case MockTables::ArgmaxMode::constant: j["argmax_mode"] = "constant"; break;
  }
  j["argmax_token"] = t.argmax_token;
  return j.dump();
}

MockServer::MockServer(MockTables tables) : tables_(std::move(tables)) {
  json vocab;
  vocab["word_pieces"] = tables_.word_pieces;
  json keys = json::array();
  for (const auto& [tok, v] : tables_.logprobs) keys.push_back(tok);
  vocab["vocabulary"] = std::move(keys);
  tokenizer_hash_ = sha256_hex(vocab.dump());
}

std::string MockServer::handle(std::string_view line) const {
  std::string id;
  try {
    const auto header = wire::peek(line);
    id = header.id;
    if (!header.kind) return wire::encode_error(id, "request without kind");
    switch (*header.kind) {
      case wire::Kind::hello:
        return wire::encode_handshake(id, Handshake{"mock", tokenizer_hash_, std::string(kAttentionDefinition)});
      case wire::Kind::tokenize:
        return wire::encode_tokenization(id, mock_tokenize(wire::decode_tokenize_request(line), tables_));
      case wire::Kind::score:
        return wire::encode_response(mock_adapter(wire::decode_score_request(line), tables_));
    }
  } catch (const std::exception& e) {
    return wire::encode_error(id, e.what());
  }
  return wire::encode_error(id, "unreachable");
}

}  // namespace mlmbias
