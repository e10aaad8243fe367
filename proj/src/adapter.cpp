#include "mlmbias/adapter.hpp"

#include <set>

#include "mlmbias/error.hpp"

namespace mlmbias {

std::vector<std::string> MockTransport::exchange(const std::vector<std::string>& request_lines) {
  std::vector<std::string> out;
  out.reserve(request_lines.size());
  for (const auto& line : request_lines) out.push_back(server_.handle(line));
  return out;
}

// ---------------------------------------------------------------------------

CaptureTransport::CaptureTransport(std::unique_ptr<Transport> inner, const std::filesystem::path& capture_path)
    : inner_(std::move(inner)), out_(capture_path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw Error("cannot write capture file " + capture_path.string());
}

std::vector<std::string> CaptureTransport::exchange(const std::vector<std::string>& request_lines) {
  auto responses = inner_->exchange(request_lines);
  std::map<std::string, const std::string*> by_id;
  for (const auto& r : responses) by_id[wire::peek(r).id] = &r;
  for (const auto& req : request_lines) {
    out_ << req << '\n';
    auto it = by_id.find(wire::peek(req).id);
    if (it != by_id.end()) out_ << *it->second << '\n';
  }
  out_.flush();
  return responses;
}

// ---------------------------------------------------------------------------

ReplayTransport::ReplayTransport(const std::filesystem::path& capture_path) {
  std::ifstream in(capture_path, std::ios::binary);
  if (!in) throw Error("cannot open capture file " + capture_path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto header = wire::peek(line);
    auto& entry = entries_[header.id];
    if (header.kind) {
      entry.request = line;
    } else {
      if (!entry.response.empty()) {
        throw Error("capture line " + std::to_string(lineno) + ": duplicate response for " + header.id);
      }
      entry.response = line;
    }
  }
}

std::vector<std::string> ReplayTransport::exchange(const std::vector<std::string>& request_lines) {
  std::vector<std::string> out;
  out.reserve(request_lines.size());
  for (const auto& line : request_lines) {
    const auto id = wire::peek(line).id;
    auto it = entries_.find(id);
    if (it == entries_.end() || it->second.response.empty()) throw Error("replay: no recorded response for " + id);
    if (it->second.request != line) throw Error("replay: request " + id + " differs from the capture");
    out.push_back(it->second.response);
  }
  return out;
}

// ---------------------------------------------------------------------------

AdapterClient::AdapterClient(std::unique_ptr<Transport> transport) : transport_(std::move(transport)) {
  if (!transport_) throw Error("adapter client needs a transport");
}

std::vector<std::string> AdapterClient::round_trip(const std::vector<std::string>& ids,
                                                   const std::vector<std::string>& lines) {
  if (lines.empty()) return {};
  sent_ += lines.size();
  auto responses = transport_->exchange(lines);
  std::map<std::string, std::string> by_id;
  for (auto& r : responses) {
    const auto header = wire::peek(r);
    if (header.error) throw Error("adapter error for " + header.id + ": " + *header.error);
    by_id[header.id] = std::move(r);
  }
  std::vector<std::string> ordered;
  ordered.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw Error("adapter did not answer request " + id);
    ordered.push_back(std::move(it->second));
  }
  return ordered;
}

const Handshake& AdapterClient::handshake() {
  if (!handshake_) {
    const std::string id = "hello";
    auto lines = round_trip({id}, {wire::encode_hello(id)});
    handshake_ = wire::decode_handshake(lines.front());
  }
  return *handshake_;
}

std::vector<Tokenization> AdapterClient::tokenize(const std::vector<std::string>& texts) {
  std::vector<std::string> ids, lines, missing;
  std::set<std::string> queued;
  for (const auto& text : texts) {
    if (token_cache_.count(text) || !queued.insert(text).second) continue;
    ids.push_back("tok/" + std::to_string(next_token_id_++));
    lines.push_back(wire::encode_tokenize(ids.back(), text));
    missing.push_back(text);
  }
  auto responses = round_trip(ids, lines);
  for (std::size_t i = 0; i < responses.size(); ++i) {
    auto tok = wire::decode_tokenization(responses[i]);
    if (tok.subtokens.empty()) throw Error("adapter returned no subtokens for '" + missing[i] + "'");
    token_cache_.emplace(missing[i], std::move(tok));
  }
  std::vector<Tokenization> out;
  out.reserve(texts.size());
  for (const auto& text : texts) out.push_back(token_cache_.at(text));
  return out;
}

Tokenization AdapterClient::tokenize(const std::string& text) { return tokenize(std::vector<std::string>{text}).front(); }

std::vector<AdapterResponse> AdapterClient::score(const std::vector<AdapterRequest>& requests) {
  std::vector<std::string> ids, lines;
  ids.reserve(requests.size());
  lines.reserve(requests.size());
  std::set<std::string> unique;
  for (const auto& r : requests) {
    check_request(r);
    if (!unique.insert(r.id).second) throw Error("duplicate request id " + r.id);
    ids.push_back(r.id);
    lines.push_back(wire::encode_score(r));
  }
  auto raw = round_trip(ids, lines);
  std::vector<AdapterResponse> out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto resp = wire::decode_response(raw[i]);
    check_response(requests[i], resp);
    out.push_back(std::move(resp));
  }
  return out;
}

std::unique_ptr<Transport> make_transport(const TransportOptions& options) {
  if (options.replay) {
    if (options.capture) throw Error("--capture and --replay are mutually exclusive");
    return std::make_unique<ReplayTransport>(*options.replay);
  }
  std::unique_ptr<Transport> t;
  if (options.command) {
    t = std::make_unique<ProcessTransport>(*options.command);
  } else if (options.mock) {
    t = std::make_unique<MockTransport>(*options.mock);
  } else {
    throw Error("no adapter configured: pass --adapter, set MLMBIAS_ADAPTER, or use --replay");
  }
  if (options.capture) t = std::make_unique<CaptureTransport>(std::move(t), *options.capture);
  return t;
}

}  // namespace mlmbias
