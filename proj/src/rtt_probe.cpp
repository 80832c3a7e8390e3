#include "cns/rtt_probe.hpp"

#include "cns/error.hpp"

#include <algorithm>
#include <string>

namespace cns {

Micros SimClock::now(Micros global_us) const {
    const auto global = static_cast<std::int64_t>(global_us);
    if (offset_us_ < 0 && global < -offset_us_) {
        throw ParameterError("local clock reading before epoch (global " + std::to_string(global) +
                             " us, offset " + std::to_string(offset_us_) + " us)");
    }
    return static_cast<Micros>(global + offset_us_);
}

ProbeRequest ClientProbeState::build_request(Micros now_local) {
    if (outstanding_send_) {
        throw ProtocolError("round " + std::to_string(next_round_ - 1) + " is still awaiting its response");
    }
    if (last_receive_ && now_local < *last_receive_) {
        throw ProtocolError("client clock went backwards: " + std::to_string(now_local) + " < " +
                            std::to_string(*last_receive_));
    }
    ProbeRequest request;
    request.round = next_round_;
    request.client_send = now_local;
    if (last_receive_) {
        request.prev_server_send = last_server_send_;
        request.client_idle = now_local - *last_receive_;
    }
    outstanding_send_ = now_local;
    ++next_round_;
    return request;
}

RttSample ClientProbeState::handle_response(const ProbeResponse& response, Micros receive_local) {
    if (!outstanding_send_) {
        throw ProtocolError("response for round " + std::to_string(response.round) +
                            " arrived with no request outstanding");
    }
    const std::uint32_t round = next_round_ - 1;
    if (response.round != round || response.client_send_echo != *outstanding_send_) {
        throw ProtocolError("stale or mismatched response: round " + std::to_string(response.round) +
                            " echo " + std::to_string(response.client_send_echo) + ", expected round " +
                            std::to_string(round) + " echo " + std::to_string(*outstanding_send_));
    }
    if (receive_local < *outstanding_send_) {
        throw ProtocolError("response received before its request was sent");
    }
    const Micros elapsed = receive_local - *outstanding_send_;
    if (response.server_processing > elapsed) {
        throw ProtocolError("negative client RTT in round " + std::to_string(round) +
                            ": server processing exceeds elapsed time");
    }
    const RttSample sample{static_cast<std::int64_t>(elapsed - response.server_processing), round,
                           ProbeSide::client};
    last_receive_ = receive_local;
    last_server_send_ = response.server_send;
    outstanding_send_.reset();
    return sample;
}

ServerProbeState::Outcome ServerProbeState::handle_request(const ProbeRequest& request,
                                                           Micros receive_local, Micros send_local) {
    if (send_local < receive_local) {
        throw ParameterError("server send time precedes receive time");
    }
    if (request.round == 0) throw ProtocolError("probe round counter must start at 1");
    const bool has_history = request.prev_server_send.has_value() && request.client_idle.has_value();
    if (request.round == 1 && (request.prev_server_send || request.client_idle)) {
        throw ProtocolError("round 1 request must not carry previous-round fields");
    }
    if (request.round >= 2 && !has_history) {
        throw ProtocolError("round " + std::to_string(request.round) +
                            " request lacks previous server send time or client idle time");
    }

    Outcome outcome;
    if (request.round >= 2 && last_send_) {
        const Micros echoed = *request.prev_server_send;
        const Micros idle = *request.client_idle;
        if (receive_local < echoed || receive_local - echoed < idle) {
            throw ProtocolError("negative server RTT in round " + std::to_string(request.round));
        }
        outcome.sample = RttSample{static_cast<std::int64_t>(receive_local - echoed - idle),
                                   request.round, ProbeSide::server};
    }
    outcome.response = ProbeResponse{request.round, send_local, request.client_send,
                                     send_local - receive_local};
    last_send_ = send_local;
    return outcome;
}

std::vector<ProbeRound> simulate_probe_exchange(const ExchangeTiming& timing, std::uint32_t rounds) {
    if (rounds < 1) throw ParameterError("probe exchange needs at least one round");
    const SimClock client_clock(timing.client_offset);
    const SimClock server_clock(timing.server_offset);
    const Micros idle = timing.client_idle.value_or(timing.processing);

    // Start late enough that neither local clock reads below zero.
    Micros global = static_cast<Micros>(std::max<std::int64_t>({0, -timing.client_offset, -timing.server_offset}));

    ClientProbeState client;
    ServerProbeState server;
    std::vector<ProbeRound> out;
    out.reserve(rounds);
    for (std::uint32_t k = 1; k <= rounds; ++k) {
        if (k > 1) global += idle;
        const auto request = client.build_request(client_clock.now(global));
        const Micros arrive = global + timing.one_way_out;
        const Micros depart = arrive + timing.processing;
        auto outcome = server.handle_request(request, server_clock.now(arrive), server_clock.now(depart));
        global = depart + timing.one_way_back;
        const auto sample = client.handle_response(outcome.response, client_clock.now(global));
        out.push_back({sample, outcome.sample});
    }
    return out;
}

std::vector<ProbeRound> simulate_probe_exchange(Micros one_way_out, Micros one_way_back,
                                                Micros processing, std::int64_t client_offset,
                                                std::int64_t server_offset, std::uint32_t rounds) {
    ExchangeTiming timing;
    timing.one_way_out = one_way_out;
    timing.one_way_back = one_way_back;
    timing.processing = processing;
    timing.client_offset = client_offset;
    timing.server_offset = server_offset;
    return simulate_probe_exchange(timing, rounds);
}

namespace {

constexpr std::uint8_t kTypeRequest = 0x01;
constexpr std::uint8_t kTypeResponse = 0x02;

void put_be(std::uint8_t* out, std::uint64_t value, int bytes) {
    for (int i = bytes - 1; i >= 0; --i) {
        out[i] = static_cast<std::uint8_t>(value & 0xFF);
        value >>= 8;
    }
}

std::uint64_t get_be(const std::uint8_t* in, int bytes) {
    std::uint64_t value = 0;
    for (int i = 0; i < bytes; ++i) value = (value << 8) | in[i];
    return value;
}

Micros encode_optional(const std::optional<Micros>& field, const char* name) {
    if (!field) return kNoTimestamp;
    if (*field == kNoTimestamp) {
        throw ParameterError(std::string(name) + " collides with the reserved sentinel value");
    }
    return *field;
}

} // namespace

ProbeFrame encode_probe(const ProbeMessage& message) {
    ProbeFrame frame{};
    put_be(frame.data(), kProbeMagic, 2);
    std::uint32_t round = 0;
    std::uint64_t fields[3] = {};
    if (const auto* request = std::get_if<ProbeRequest>(&message)) {
        frame[2] = kTypeRequest;
        round = request->round;
        fields[0] = request->client_send;
        fields[1] = encode_optional(request->prev_server_send, "previous server send time");
        fields[2] = encode_optional(request->client_idle, "client idle time");
    } else {
        const auto& response = std::get<ProbeResponse>(message);
        frame[2] = kTypeResponse;
        round = response.round;
        fields[0] = response.server_send;
        fields[1] = response.client_send_echo;
        fields[2] = response.server_processing;
    }
    if (round == 0) throw ParameterError("probe round counter must be at least 1");
    put_be(frame.data() + 4, round, 4);
    for (int i = 0; i < 3; ++i) put_be(frame.data() + 8 + 8 * i, fields[i], 8);
    return frame;
}

ProbeMessage decode_probe(std::span<const std::uint8_t> bytes) {
    if (bytes.size() != kProbeFrameSize) {
        throw DecodeError("probe frame must be " + std::to_string(kProbeFrameSize) + " bytes, got " +
                          std::to_string(bytes.size()));
    }
    if (get_be(bytes.data(), 2) != kProbeMagic) throw DecodeError("bad probe magic");
    if (bytes[3] != 0) throw DecodeError("reserved probe byte must be zero");
    const auto round = static_cast<std::uint32_t>(get_be(bytes.data() + 4, 4));
    if (round == 0) throw DecodeError("probe round counter is zero");
    const Micros f1 = get_be(bytes.data() + 8, 8);
    const Micros f2 = get_be(bytes.data() + 16, 8);
    const Micros f3 = get_be(bytes.data() + 24, 8);

    switch (bytes[2]) {
    case kTypeRequest: {
        ProbeRequest request;
        request.round = round;
        request.client_send = f1;
        if (f2 != kNoTimestamp) request.prev_server_send = f2;
        if (f3 != kNoTimestamp) request.client_idle = f3;
        return request;
    }
    case kTypeResponse:
        return ProbeResponse{round, f1, f2, f3};
    default:
        throw DecodeError("unknown probe message type " + std::to_string(bytes[2]));
    }
}

} // namespace cns
