#include <doctest.h>

#include "cns/error.hpp"
#include "cns/rng.hpp"
#include "cns/rtt_probe.hpp"

#include <vector>

using namespace cns;

namespace {

constexpr Micros kMs = 1000;
constexpr std::int64_t kSec = 1000000;

/// Client that has completed round 1 at t_Rc = 250 ms with t_Ss = 1150 ms
/// (server clock one second ahead, 100 ms each way, 50 ms processing).
ClientProbeState client_after_round_one() {
    ClientProbeState client;
    const auto req = client.build_request(0);
    client.handle_response(ProbeResponse{req.round, 1150 * kMs, 0, 50 * kMs}, 250 * kMs);
    return client;
}

} // namespace

TEST_CASE("clock offsets") {
    CHECK(SimClock(0).now(5) == 5);
    CHECK(SimClock(1000).now(5) == 1005);
    CHECK(SimClock(-5).now(5) == 0);
    CHECK_THROWS_AS(SimClock(-6).now(5), ParameterError);
}

TEST_CASE("first request carries sentinels") {
    ClientProbeState client;
    const auto req = client.build_request(0);
    CHECK(req.round == 1);
    CHECK(req.client_send == 0);
    CHECK_FALSE(req.prev_server_send.has_value());
    CHECK_FALSE(req.client_idle.has_value());
    CHECK(client.next_round() == 2);
}

TEST_CASE("second request carries the previous round's values") {
    auto client = client_after_round_one();
    const auto req = client.build_request(300 * kMs);
    CHECK(req.round == 2);
    CHECK(req.client_send == 300 * kMs);
    CHECK(req.prev_server_send == 1150 * kMs);
    // Client idle time uses only client-clock readings.
    CHECK(req.client_idle == 50 * kMs);
}

TEST_CASE("client rejects a clock that goes backwards") {
    auto client = client_after_round_one();
    CHECK_THROWS_AS(client.build_request(249 * kMs), ProtocolError);
    CHECK(client.next_round() == 2);
}

TEST_CASE("client refuses a second request while one is outstanding") {
    ClientProbeState client;
    client.build_request(0);
    CHECK_THROWS_AS(client.build_request(10), ProtocolError);
}

TEST_CASE("server response and processing time") {
    ServerProbeState server;
    ProbeRequest req;
    req.round = 1;
    req.client_send = 0;
    const auto outcome = server.handle_request(req, 1100 * kMs, 1150 * kMs);
    CHECK(outcome.response.round == 1);
    CHECK(outcome.response.server_send == 1150 * kMs);
    CHECK(outcome.response.client_send_echo == 0);
    CHECK(outcome.response.server_processing == 50 * kMs);
    CHECK_FALSE(outcome.sample.has_value());
    CHECK(server.last_send() == 1150 * kMs);
}

TEST_CASE("server RTT from the second round") {
    ServerProbeState server;
    server.handle_request(ProbeRequest{1, 0, std::nullopt, std::nullopt}, 1100 * kMs, 1150 * kMs);
    const ProbeRequest second{2, 300 * kMs, 1150 * kMs, 50 * kMs};
    const auto outcome = server.handle_request(second, 1400 * kMs, 1450 * kMs);
    REQUIRE(outcome.sample.has_value());
    CHECK(outcome.sample->value_us == 200000);
    CHECK(outcome.sample->round == 2);
    CHECK(outcome.sample->side == ProbeSide::server);
}

TEST_CASE("server request errors leave state untouched") {
    ServerProbeState server;
    const ProbeRequest first{1, 0, std::nullopt, std::nullopt};
    CHECK_THROWS_AS(server.handle_request(first, 10, 9), ParameterError);
    CHECK_FALSE(server.last_send().has_value());

    server.handle_request(first, 100, 150);
    const ProbeRequest missing_idle{2, 300, 150, std::nullopt};
    CHECK_THROWS_AS(server.handle_request(missing_idle, 400, 450), ProtocolError);
    const ProbeRequest round1_with_history{1, 300, 150, 10};
    CHECK_THROWS_AS(server.handle_request(round1_with_history, 400, 450), ProtocolError);
    const ProbeRequest round0{0, 300, std::nullopt, std::nullopt};
    CHECK_THROWS_AS(server.handle_request(round0, 400, 450), ProtocolError);
    // Claimed idle time longer than the whole gap: negative RTT.
    const ProbeRequest corrupted{2, 300, 150, 1000};
    CHECK_THROWS_AS(server.handle_request(corrupted, 400, 450), ProtocolError);
    CHECK(server.last_send() == 150);
}

TEST_CASE("client RTT excludes server processing") {
    ClientProbeState client;
    client.build_request(0);
    const auto sample = client.handle_response(ProbeResponse{1, 1150 * kMs, 0, 50 * kMs}, 250 * kMs);
    CHECK(sample.value_us == 200000);
    CHECK(sample.value_ms() == 200.0);
    CHECK(sample.round == 1);
    CHECK(sample.side == ProbeSide::client);
    CHECK(client.last_receive() == 250 * kMs);
    CHECK(client.last_server_send() == 1150 * kMs);
}

TEST_CASE("client response errors") {
    ClientProbeState idle;
    CHECK_THROWS_AS(idle.handle_response(ProbeResponse{1, 0, 0, 0}, 5), ProtocolError);

    ClientProbeState client;
    client.build_request(100);
    CHECK_THROWS_AS(client.handle_response(ProbeResponse{1, 0, 99, 0}, 300), ProtocolError);  // echo
    CHECK_THROWS_AS(client.handle_response(ProbeResponse{2, 0, 100, 0}, 300), ProtocolError);  // round
    CHECK_THROWS_AS(client.handle_response(ProbeResponse{1, 0, 100, 201}, 300), ProtocolError);  // negative
    CHECK_THROWS_AS(client.handle_response(ProbeResponse{1, 0, 100, 0}, 50), ProtocolError);    // before send
    CHECK(client.awaiting_response());
    CHECK(client.handle_response(ProbeResponse{1, 0, 100, 200}, 300).value_us == 0);
}

TEST_CASE("exchange with a one-second server offset") {
    const auto rounds = simulate_probe_exchange(100 * kMs, 100 * kMs, 50 * kMs, 0, 1000 * kSec, 3);
    REQUIRE(rounds.size() == 3);
    int server_samples = 0;
    for (const auto& r : rounds) {
        CHECK(r.client.value_us == 200000);
        if (r.server) {
            ++server_samples;
            CHECK(r.server->value_us == 200000);
        }
    }
    CHECK(server_samples == 2);
    CHECK_FALSE(rounds[0].server.has_value());
}

TEST_CASE("huge server offset leaves client RTT unchanged") {
    const auto rounds = simulate_probe_exchange(100 * kMs, 100 * kMs, 50 * kMs, 0, 1000000000LL, 1);
    CHECK(rounds[0].client.value_us == 200000);
}

TEST_CASE("asymmetric delays measure their sum") {
    const auto rounds = simulate_probe_exchange(80 * kMs, 120 * kMs, 50 * kMs, 0, 0, 4);
    for (const auto& r : rounds) {
        CHECK(r.client.value_us == 200000);
        if (r.server) CHECK(r.server->value_us == 200000);
    }
}

TEST_CASE("zero delays") {
    const auto rounds = simulate_probe_exchange(0, 0, 0, 17, -3, 1);
    CHECK(rounds[0].client.value_us == 0);
}

TEST_CASE("opposite offsets over five rounds") {
    const auto rounds = simulate_probe_exchange(150 * kMs, 50 * kMs, 10 * kMs, -500 * kSec, 500 * kSec, 5);
    CHECK(rounds.size() == 5);
    for (const auto& r : rounds) {
        CHECK(r.client.value_us == 200000);
        if (r.server) CHECK(r.server->value_us == 200000);
    }
}

TEST_CASE("client idle time different from processing") {
    ExchangeTiming timing;
    timing.one_way_out = 7;
    timing.one_way_back = 11;
    timing.processing = 3;
    timing.client_idle = 1000;
    timing.server_offset = 5;
    for (const auto& r : simulate_probe_exchange(timing, 6)) {
        CHECK(r.client.value_us == 18);
        if (r.server) CHECK(r.server->value_us == 18);
    }
    CHECK_THROWS_AS(simulate_probe_exchange(timing, 0), ParameterError);
}

TEST_CASE("probe state is constant-size") {
    static_assert(sizeof(ClientProbeState) <= 64);
    static_assert(sizeof(ServerProbeState) <= 16);
}

TEST_CASE("codec layout") {
    const ProbeRequest first{1, 0x0102030405060708ULL, std::nullopt, std::nullopt};
    const auto frame = encode_probe(first);
    CHECK(frame.size() == kProbeFrameSize);
    CHECK(frame[0] == 0x50);
    CHECK(frame[1] == 0x52);
    CHECK(frame[2] == 0x01);
    CHECK(frame[3] == 0x00);
    CHECK(frame[4] == 0);
    CHECK(frame[7] == 1);
    CHECK(frame[8] == 0x01);
    CHECK(frame[15] == 0x08);
    for (int i = 16; i < 32; ++i) CHECK(frame[i] == 0xFF);  // sentinels
    CHECK(std::get<ProbeRequest>(decode_probe(frame)) == first);

    const ProbeResponse resp{7, 11, 13, 17};
    const auto rframe = encode_probe(resp);
    CHECK(rframe[2] == 0x02);
    CHECK(rframe[31] == 17);
    CHECK(std::get<ProbeResponse>(decode_probe(rframe)) == resp);
}

TEST_CASE("codec errors") {
    const auto frame = encode_probe(ProbeResponse{1, 2, 3, 4});
    CHECK_THROWS_AS(decode_probe(std::span(frame).first(10)), DecodeError);
    auto bad = frame;
    bad[0] = 0;
    CHECK_THROWS_AS(decode_probe(bad), DecodeError);
    bad = frame;
    bad[2] = 9;
    CHECK_THROWS_AS(decode_probe(bad), DecodeError);
    bad = frame;
    bad[3] = 1;
    CHECK_THROWS_AS(decode_probe(bad), DecodeError);
    bad = frame;
    bad[7] = 0;
    CHECK_THROWS_AS(decode_probe(bad), DecodeError);

    CHECK_THROWS_AS(encode_probe(ProbeRequest{0, 1, std::nullopt, std::nullopt}), ParameterError);
    CHECK_THROWS_AS(encode_probe(ProbeRequest{2, 1, kNoTimestamp, 5}), ParameterError);
}

TEST_CASE("codec round trip on random frames") {
    Rng rng(2024);
    for (int i = 0; i < 20000; ++i) {
        std::array<std::uint8_t, kProbeFrameSize> bytes{};
        for (auto& b : bytes) b = static_cast<std::uint8_t>(rng.next());
        bytes[0] = 0x50;
        bytes[1] = 0x52;
        bytes[2] = static_cast<std::uint8_t>(1 + rng.uniform_below(2));
        bytes[3] = 0;
        if (rng.uniform_below(4) == 0) std::fill(bytes.begin() + 16, bytes.begin() + 24, 0xFF);
        if (bytes[4] == 0 && bytes[5] == 0 && bytes[6] == 0 && bytes[7] == 0) bytes[7] = 1;
        const auto decoded = decode_probe(bytes);
        CHECK(encode_probe(decoded) == bytes);
    }
}
