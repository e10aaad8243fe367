#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <sys/types.h>
#include <vector>

#include "mlmbias/protocol.hpp"

namespace mlmbias {

// Moves protocol lines to an adapter and back. Responses are matched to
// requests by id, so implementations may return them in any order.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::vector<std::string> exchange(const std::vector<std::string>& request_lines) = 0;
};

// In-process transport backed by MockServer.
class MockTransport final : public Transport {
 public:
  explicit MockTransport(MockTables tables) : server_(std::move(tables)) {}
  std::vector<std::string> exchange(const std::vector<std::string>& request_lines) override;

 private:
  MockServer server_;
};

// Runs `command` through /bin/sh and speaks the protocol over its stdio.
// All request lines of one exchange are written before (and while) the
// responses are read, so the adapter sees them pipelined.
class ProcessTransport final : public Transport {
 public:
  explicit ProcessTransport(const std::string& command);
  ~ProcessTransport() override;
  ProcessTransport(const ProcessTransport&) = delete;
  ProcessTransport& operator=(const ProcessTransport&) = delete;

  std::vector<std::string> exchange(const std::vector<std::string>& request_lines) override;

 private:
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string pending_;  // bytes read past the last complete line
  bool read_line(std::string& line);
};

// Records every request line followed by its response line.
class CaptureTransport final : public Transport {
 public:
  CaptureTransport(std::unique_ptr<Transport> inner, const std::filesystem::path& capture_path);
  std::vector<std::string> exchange(const std::vector<std::string>& request_lines) override;

 private:
  std::unique_ptr<Transport> inner_;
  std::ofstream out_;
};

// Answers from a capture file. A request must match its recorded line byte
// for byte; anything else is an error rather than a silent miss.
class ReplayTransport final : public Transport {
 public:
  explicit ReplayTransport(const std::filesystem::path& capture_path);
  std::vector<std::string> exchange(const std::vector<std::string>& request_lines) override;
  std::size_t recorded() const { return entries_.size(); }

 private:
  struct Entry {
    std::string request;
    std::string response;
  };
  std::map<std::string, Entry> entries_;
};

// Typed protocol client: handshake, cached tokenization and validated scoring.
class AdapterClient {
 public:
  explicit AdapterClient(std::unique_ptr<Transport> transport);

  const Handshake& handshake();
  // Tokenizes every distinct text once; results are cached for the client's
  // lifetime and returned in input order.
  std::vector<Tokenization> tokenize(const std::vector<std::string>& texts);
  Tokenization tokenize(const std::string& text);
  // One validated response per request, in request order.
  std::vector<AdapterResponse> score(const std::vector<AdapterRequest>& requests);

  std::size_t requests_sent() const { return sent_; }

 private:
  std::vector<std::string> round_trip(const std::vector<std::string>& ids, const std::vector<std::string>& lines);

  std::unique_ptr<Transport> transport_;
  std::optional<Handshake> handshake_;
  std::map<std::string, Tokenization> token_cache_;
  std::size_t next_token_id_ = 0;
  std::size_t sent_ = 0;
};

// Builds the transport stack for a run: replay if `replay` is set, otherwise
// the command (or an in-process mock), optionally wrapped for capture.
struct TransportOptions {
  std::optional<std::string> command;
  std::optional<MockTables> mock;
  std::optional<std::filesystem::path> capture;
  std::optional<std::filesystem::path> replay;
};
std::unique_ptr<Transport> make_transport(const TransportOptions& options);

}  // namespace mlmbias
