#include <gtest/gtest.h>

#include <algorithm>

#include "helpers.hpp"
#include "mlmbias/adapter.hpp"
#include "mlmbias/error.hpp"

using namespace mlmbias;
namespace th = testing_helpers;

namespace {

MockTables small_table() {
  MockTables t;
  t.logprobs = {{"a", -1.0}, {"b", -2.0}, {"c", -3.0}};
  return t;
}

std::vector<AdapterRequest> three_requests() {
  std::vector<AdapterRequest> out;
  for (std::size_t i = 0; i < 3; ++i) {
    out.push_back({"r" + std::to_string(i), {"a", "b", "c"}, {i}, {{std::string(1, static_cast<char>('a' + i))}}, i == 2});
  }
  return out;
}

// Answers in reverse order to exercise id matching.
class ReversingTransport final : public Transport {
 public:
  explicit ReversingTransport(MockTables t) : inner_(std::move(t)) {}
  std::vector<std::string> exchange(const std::vector<std::string>& lines) override {
    auto out = inner_.exchange(lines);
    std::reverse(out.begin(), out.end());
    return out;
  }

 private:
  MockTransport inner_;
};

// Answers every request with a fixed line.
class ScriptedTransport final : public Transport {
 public:
  explicit ScriptedTransport(std::string reply) : reply_(std::move(reply)) {}
  std::vector<std::string> exchange(const std::vector<std::string>& lines) override {
    return std::vector<std::string>(lines.size(), reply_);
  }

 private:
  std::string reply_;
};

}  // namespace

TEST(AdapterClient, ScoresThroughMock) {
  AdapterClient client(std::make_unique<MockTransport>(small_table()));
  EXPECT_EQ(client.handshake().model, "mock");
  const auto reqs = three_requests();
  const auto resp = client.score(reqs);
  ASSERT_EQ(resp.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(resp[i], mock_adapter(reqs[i], small_table()));
}

TEST(AdapterClient, ResponsesMatchedById) {
  AdapterClient ordered(std::make_unique<MockTransport>(small_table()));
  AdapterClient reversed(std::make_unique<ReversingTransport>(small_table()));
  EXPECT_EQ(ordered.score(three_requests()), reversed.score(three_requests()));
}

TEST(AdapterClient, TokenizationIsCached) {
  AdapterClient client(std::make_unique<MockTransport>(small_table()));
  const auto first = client.tokenize(std::vector<std::string>{"a b", "c", "a b"});
  EXPECT_EQ(client.requests_sent(), 2u);
  EXPECT_EQ(first[0], first[2]);
  client.tokenize("c");
  EXPECT_EQ(client.requests_sent(), 2u);
}

TEST(AdapterClient, RejectsDuplicateIdsAndErrorLines) {
  AdapterClient client(std::make_unique<MockTransport>(small_table()));
  auto reqs = three_requests();
  reqs[1].id = reqs[0].id;
  EXPECT_THROW(client.score(reqs), Error);

  AdapterClient failing(std::make_unique<ScriptedTransport>(wire::encode_error("r0", "out of memory")));
  try {
    failing.score({three_requests()[0]});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("out of memory"), std::string::npos);
  }
  AdapterClient silent(std::make_unique<ScriptedTransport>(wire::encode_error("zzz", "x")));
  EXPECT_THROW(silent.handshake(), Error);
}

TEST(AdapterClient, InvalidResponseRejected) {
  AdapterResponse bad{"r0", {{{"a", 0.7}}}, {"a"}, std::nullopt};
  AdapterClient client(std::make_unique<ScriptedTransport>(wire::encode_response(bad)));
  EXPECT_THROW(client.score({three_requests()[0]}), Error);
}

TEST(CaptureReplay, ReplayReproducesResponses) {
  const auto dir = th::temp_dir("capture");
  const auto cap = dir / "run.capture";
  std::vector<AdapterResponse> live;
  Handshake hs;
  {
    AdapterClient client(make_transport({std::nullopt, small_table(), cap, std::nullopt}));
    hs = client.handshake();
    client.tokenize("a b");
    live = client.score(three_requests());
  }
  AdapterClient replay(make_transport({std::nullopt, std::nullopt, std::nullopt, cap}));
  EXPECT_EQ(replay.handshake(), hs);
  EXPECT_EQ(replay.tokenize("a b").subtokens, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(replay.score(three_requests()), live);
  // Any order of the same requests replays too.
  auto reqs = three_requests();
  std::reverse(reqs.begin(), reqs.end());
  EXPECT_NO_THROW(replay.score(reqs));
}

TEST(CaptureReplay, ChangedOrUnknownRequestFails) {
  const auto dir = th::temp_dir("replay_mismatch");
  const auto cap = dir / "run.capture";
  {
    AdapterClient client(make_transport({std::nullopt, small_table(), cap, std::nullopt}));
    client.score(three_requests());
  }
  ReplayTransport replay(cap);
  EXPECT_EQ(replay.recorded(), 3u);
  AdapterClient client(std::make_unique<ReplayTransport>(cap));
  auto reqs = three_requests();
  reqs[0].subtokens[1] = "[MASK]";
  try {
    client.score({reqs[0]});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("differs"), std::string::npos) << e.what();
  }
  reqs[0] = three_requests()[0];
  reqs[0].id = "never-seen";
  EXPECT_THROW(client.score({reqs[0]}), Error);
}

TEST(CaptureReplay, TransportOptionsValidated) {
  EXPECT_THROW(make_transport({}), Error);
  EXPECT_THROW(make_transport({std::nullopt, small_table(), "a", "b"}), Error);
  EXPECT_THROW(ReplayTransport("/nonexistent/capture"), Error);
}

TEST(ProcessTransport, SpeaksProtocolWithMockAdapterProcess) {
  const auto dir = th::temp_dir("process");
  const auto table = dir / "table.json";
  th::write_file(table, mock_tables_to_json(small_table()));
  const std::string cmd = std::string("'") + MLMBIAS_CLI + "' mock-adapter --table '" + table.string() + "'";
  AdapterClient client(std::make_unique<ProcessTransport>(cmd));
  EXPECT_EQ(client.handshake().model, "mock");
  const auto reqs = three_requests();
  const auto resp = client.score(reqs);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(resp[i], mock_adapter(reqs[i], small_table()));
  // Many pipelined requests in one exchange.
  std::vector<AdapterRequest> many;
  for (int i = 0; i < 2000; ++i) {
    auto r = reqs[static_cast<std::size_t>(i % 3)];
    r.id = "m" + std::to_string(i);
    many.push_back(r);
  }
  EXPECT_EQ(client.score(many).size(), 2000u);
}

TEST(ProcessTransport, DeadAdapterReported) {
  AdapterClient client(std::make_unique<ProcessTransport>("exit 0"));
  EXPECT_THROW(client.handshake(), Error);
}
