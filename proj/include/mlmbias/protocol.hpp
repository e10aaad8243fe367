#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mlmbias/dataset.hpp"

namespace mlmbias {

// Sentinel the engine places at masked positions. Adapters translate it to
// their model's own mask token.
inline constexpr std::string_view kMaskToken = "[MASK]";

// Attention definition the engine expects adapters to implement: mean over
// layers, heads and query positions of the attention paid to each position,
// computed on the unmasked input.
inline constexpr std::string_view kAttentionDefinition = "mean_layers_heads_queries_to_key";

// One forward pass. `positions` are indices into `subtokens`; `targets[k]`
// lists the subtokens whose log-probability is wanted at `positions[k]`.
struct AdapterRequest {
  std::string id;
  std::vector<std::string> subtokens;
  std::vector<std::size_t> positions;
  std::vector<std::vector<std::string>> targets;
  bool want_attention = false;

  std::size_t mask_count() const;
  std::vector<std::size_t> masked_positions() const;
  friend bool operator==(const AdapterRequest&, const AdapterRequest&) = default;
};

struct AdapterResponse {
  std::string id;
  // Per requested position: candidate subtoken -> natural-log probability.
  std::vector<std::map<std::string, double>> logprobs;
  // Per requested position: highest-probability vocabulary subtoken.
  std::vector<std::string> argmax;
  // Per request subtoken when attention was requested.
  std::optional<std::vector<double>> attention;

  friend bool operator==(const AdapterResponse&, const AdapterResponse&) = default;
};

struct Handshake {
  std::string model;
  std::string tokenizer_hash;
  std::string attention_definition;

  friend bool operator==(const Handshake&, const Handshake&) = default;
};

struct Tokenization {
  std::vector<std::string> subtokens;
  std::vector<CharSpan> offsets;  // empty when the adapter does not report spans

  friend bool operator==(const Tokenization&, const Tokenization&) = default;
};

// Throws Error unless `request` is internally consistent.
void check_request(const AdapterRequest& request);
// Throws Error unless `response` answers `request` and satisfies the response
// invariants (logprobs <= 0, attention present iff requested and >= 0).
void check_response(const AdapterRequest& request, const AdapterResponse& response);

// Wire encoding: one JSON object per line. Requests carry a `kind` of
// hello, tokenize or score; responses echo the `id` and carry either the
// payload or an `error` string.
namespace wire {

enum class Kind { hello, tokenize, score };

std::string encode_hello(std::string_view id);
std::string encode_tokenize(std::string_view id, std::string_view text);
std::string encode_score(const AdapterRequest& request);

// Header of any line: its id and, for requests, its kind.
struct Header {
  std::string id;
  std::optional<Kind> kind;
  std::optional<std::string> error;
};
Header peek(std::string_view line);

std::string decode_tokenize_request(std::string_view line);
AdapterRequest decode_score_request(std::string_view line);

std::string encode_handshake(std::string_view id, const Handshake& hs);
std::string encode_tokenization(std::string_view id, const Tokenization& tok);
std::string encode_response(const AdapterResponse& response);
std::string encode_error(std::string_view id, std::string_view message);

Handshake decode_handshake(std::string_view line);
Tokenization decode_tokenization(std::string_view line);
AdapterResponse decode_response(std::string_view line);

}  // namespace wire

// Context-independent reference adapter driven by lookup tables.
struct MockTables {
  enum class ArgmaxMode {
    table_max,    // global maximum of `logprobs`, ties to the smallest subtoken
    echo_target,  // the first requested target at each position
    constant,     // always `argmax_token`
  };

  std::map<std::string, double> logprobs;
  std::map<std::string, double> attention;  // missing subtokens weigh 1.0
  std::map<std::string, std::vector<std::string>> word_pieces;  // tokenizer splits
  ArgmaxMode argmax_mode = ArgmaxMode::table_max;
  std::string argmax_token;
};

AdapterResponse mock_adapter(const AdapterRequest& request, const MockTables& tables);

// Splits on whitespace, then separates punctuation characters, then applies
// `word_pieces`. Offsets are byte spans into `text`.
Tokenization mock_tokenize(std::string_view text, const MockTables& tables);

MockTables mock_tables_from_json(std::string_view json_text);
std::string mock_tables_to_json(const MockTables& tables);

// Serves the line protocol for a MockTables instance; one request line in,
// one response line out. Never throws: failures become error responses.
class MockServer {
 public:
  explicit MockServer(MockTables tables);
  std::string handle(std::string_view request_line) const;
  const MockTables& tables() const { return tables_; }

 private:
  MockTables tables_;
  std::string tokenizer_hash_;
};

}  // namespace mlmbias
