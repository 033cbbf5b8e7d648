#include <gtest/gtest.h>

#include <thread>

#include "privprof/error.hpp"
#include "privprof/protocols.hpp"
#include "privprof/transport.hpp"
#include "support.hpp"

namespace privprof {
namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return Errc::kProtocol;
}

TEST(Frame, EmptyOpenIsSevenBytes) {
  const auto bytes = encode_frame(Frame{FrameType::kOpen, 1, {}});
  EXPECT_EQ(bytes, (std::vector<std::uint8_t>{0, 0, 0, 3, 2, 0, 1}));
}

TEST(Frame, RandomRoundTrip) {
  Prg rng = Prg::from_u64(200);
  const FrameType types[] = {FrameType::kHello, FrameType::kOpen, FrameType::kResult,
                             FrameType::kClearFeatures, FrameType::kClearResult,
                             FrameType::kError, FrameType::kBye};
  for (int t = 0; t < 1000; ++t) {
    Frame f{types[rng.uniform(7)], static_cast<std::uint16_t>(rng.uniform(65536)), {}};
    f.payload.resize(rng.uniform(300));
    for (auto& b : f.payload) b = static_cast<std::uint8_t>(rng.next_u64());
    std::size_t used = 0;
    const auto bytes = encode_frame(f);
    ASSERT_EQ(decode_frame(bytes, &used), f);
    ASSERT_EQ(used, bytes.size());
    ASSERT_EQ(bytes.size(), kFrameHeader + f.payload.size());
  }
}

TEST(Frame, Errors) {
  auto bytes = encode_frame(Frame{FrameType::kOpen, 1, {1, 2, 3}});
  bytes.pop_back();
  EXPECT_EQ(code_of([&] { decode_frame(bytes); }), Errc::kTruncated);
  EXPECT_EQ(code_of([] { decode_frame(std::vector<std::uint8_t>{0, 0, 0}); }), Errc::kTruncated);
  const std::vector<std::uint8_t> unknown{0, 0, 0, 3, 0x07, 0, 0};
  EXPECT_EQ(code_of([&] { decode_frame(unknown); }), Errc::kUnknownType);
  const std::vector<std::uint8_t> huge{0x01, 0x00, 0x00, 0x04, 0x02, 0, 0};
  EXPECT_EQ(code_of([&] { decode_frame(huge); }), Errc::kOversize);
  Frame big{FrameType::kOpen, 0, std::vector<std::uint8_t>(kMaxPayload + 1)};
  EXPECT_EQ(code_of([&] { encode_frame(big); }), Errc::kOversize);
}

TEST(Frame, MaxPayloadAccepted) {
  Frame f{FrameType::kOpen, 0, std::vector<std::uint8_t>(kMaxPayload, 0xAB)};
  EXPECT_EQ(decode_frame(encode_frame(f)), f);
}

TEST(Endpoint, Parse) {
  EXPECT_EQ(parse_endpoint("example.org:99", 7311), (std::pair<std::string, std::uint16_t>{"example.org", 99}));
  EXPECT_EQ(parse_endpoint("localhost", 7311).second, 7311);
  EXPECT_THROW(parse_endpoint("host:notaport", 7311), Error);
}

TEST(Mux, InterleavedSubSessionsKeepOrder) {
  auto [a, b] = MemoryChannel::make_pair(std::chrono::seconds(5));
  Mux mb(*b);
  for (std::uint8_t i = 0; i < 3; ++i) {
    a->send(Frame{FrameType::kOpen, 2, {i}});
    a->send(Frame{FrameType::kOpen, 1, {static_cast<std::uint8_t>(10 + i)}});
  }
  for (std::uint8_t i = 0; i < 3; ++i) EXPECT_EQ(mb.recv(1, FrameType::kOpen).payload[0], 10 + i);
  for (std::uint8_t i = 0; i < 3; ++i) EXPECT_EQ(mb.recv(2, FrameType::kOpen).payload[0], i);
}

TEST(Mux, WrongTypeAndBye) {
  auto [a, b] = MemoryChannel::make_pair(std::chrono::seconds(5));
  Mux mb(*b);
  a->send(Frame{FrameType::kResult, 1, {}});
  EXPECT_EQ(code_of([&] { mb.recv(1, FrameType::kOpen); }), Errc::kProtocol);
  a->send(Frame{FrameType::kBye, 0, {}});
  EXPECT_EQ(code_of([&] { mb.recv(1, FrameType::kOpen); }), Errc::kChannelClosed);
}

TEST(MemoryChannel, ClosedPeer) {
  auto [a, b] = MemoryChannel::make_pair(std::chrono::seconds(5));
  a->close();
  EXPECT_EQ(code_of([&] { b->recv(); }), Errc::kChannelClosed);
  EXPECT_EQ(code_of([&] { b->send(Frame{}); }), Errc::kChannelClosed);
}

TEST(Tcp, FramesCrossLoopback) {
  TcpListener listener(0);
  std::thread server([&] {
    auto ch = listener.accept();
    Frame f = ch->recv();
    f.payload.push_back(0xFF);
    ch->send(f);
  });
  auto ch = TcpChannel::connect("127.0.0.1", listener.port());
  ch->send(Frame{FrameType::kHello, 3, {1, 2}});
  const Frame back = ch->recv();
  server.join();
  EXPECT_EQ(back, (Frame{FrameType::kHello, 3, {1, 2, 0xFF}}));
  EXPECT_EQ(ch->bytes_sent(), 9u);
  EXPECT_EQ(ch->bytes_received(), 10u);
}

TEST(Tcp, ConnectRefused) {
  std::uint16_t port;
  {
    TcpListener probe(0);
    port = probe.port();
  }
  EXPECT_EQ(code_of([&] { TcpChannel::connect("127.0.0.1", port); }), Errc::kChannelClosed);
}

// The protocol transcript is a function of the inputs and bundles only, not of
// the channel implementation.
TEST(Tcp, TranscriptMatchesMemoryChannel) {
  const Ring r(16);
  auto run = [&](bool tcp) {
    Prg rng = Prg::from_u64(201);
    testing::Lane lane(r, {}, svm_bit_cost(16, Variant::kBasic), rng);
    mpc::SignedGtKernel ka(r, Party::kAlice, 1234, 0), kb(r, Party::kBob, 64000, 0);
    Transcript tr;
    if (!tcp) {
      lane.run(ka, kb, &tr);
      return tr;
    }
    TcpListener listener(0);
    std::thread bob([&] {
      auto ch = listener.accept();
      Mux mux(*ch);
      mpc::Lockstep drv(mux);
      drv.add(1, lane.bob, kb);
      drv.run();
    });
    auto ch = TcpChannel::connect("127.0.0.1", listener.port());
    RecordingChannel rec(*ch, tr);
    Mux mux(rec);
    mpc::Lockstep drv(mux);
    drv.add(1, lane.alice, ka);
    drv.run();
    bob.join();
    return tr;
  };
  const Transcript mem = run(false), tcp = run(true);
  EXPECT_FALSE(mem.sent.empty());
  EXPECT_EQ(mem.sent, tcp.sent);
  EXPECT_EQ(mem.received, tcp.received);
  EXPECT_EQ(mem.digest(), tcp.digest());
  EXPECT_EQ(mem.digest().size(), 64u);
}

}  // namespace
}  // namespace privprof
