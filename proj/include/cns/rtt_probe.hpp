#pragma once

// Stateless round-trip-time probing between a client and a server whose
// clocks are not synchronized.
//
// Timeline of round k (client clock: tSc, tRc; server clock: tRs, tSs):
//
//   client  tSc(k) ----request---->  tRs(k)  server
//                                      | server processing dS(k) = tSs(k) - tRs(k)
//   client  tRc(k) <---response----  tSs(k)
//
// Client:  RTT_c(k) = tRc(k) - tSc(k) - dS(k)
// Server:  RTT_s(k) = tRs(k) - tSs(k-1) - dC(k),  dC(k) = tSc(k) - tRc(k-1)
//
// Each side only ever subtracts timestamps taken on its own clock, so clock
// offsets cancel.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace cns {

/// Timestamp or duration in microseconds.
using Micros = std::uint64_t;

/// Wire value standing for "no previous round".
inline constexpr Micros kNoTimestamp = 0xFFFFFFFFFFFFFFFFULL;

/// Node-local clock: local = global + offset. No drift.
class SimClock {
public:
    explicit SimClock(std::int64_t offset_us = 0) : offset_us_(offset_us) {}

    std::int64_t offset() const noexcept { return offset_us_; }

    /// Throws ParameterError if the local reading would be negative.
    Micros now(Micros global_us) const;

private:
    std::int64_t offset_us_;
};

struct ProbeRequest {
    std::uint32_t round = 1;
    Micros client_send = 0;                         // tSc(k), client clock
    std::optional<Micros> prev_server_send;         // tSs(k-1) echoed, server clock
    std::optional<Micros> client_idle;              // dC(k), client clock difference

    friend bool operator==(const ProbeRequest&, const ProbeRequest&) = default;
};

struct ProbeResponse {
    std::uint32_t round = 1;
    Micros server_send = 0;        // tSs(k), server clock
    Micros client_send_echo = 0;   // tSc(k) echoed
    Micros server_processing = 0;  // dS(k)

    friend bool operator==(const ProbeResponse&, const ProbeResponse&) = default;
};

using ProbeMessage = std::variant<ProbeRequest, ProbeResponse>;

enum class ProbeSide { client, server };

struct RttSample {
    std::int64_t value_us = 0;
    std::uint32_t round = 0;
    ProbeSide side = ProbeSide::client;

    double value_ms() const noexcept { return static_cast<double>(value_us) / 1000.0; }

    friend bool operator==(const RttSample&, const RttSample&) = default;
};

/// Client end of one peer relationship. Holds only the latest round.
class ClientProbeState {
public:
    /// Next round to be sent.
    std::uint32_t next_round() const noexcept { return next_round_; }
    std::optional<Micros> last_receive() const noexcept { return last_receive_; }
    std::optional<Micros> last_server_send() const noexcept { return last_server_send_; }
    bool awaiting_response() const noexcept { return outstanding_send_.has_value(); }

    /// Stamps and returns the next request. Throws ProtocolError when
    /// `now_local` precedes an earlier client timestamp or a response is
    /// still outstanding.
    ProbeRequest build_request(Micros now_local);

    /// Consumes the response to the outstanding request. On error the state
    /// is left untouched and the sample discarded.
    RttSample handle_response(const ProbeResponse& response, Micros receive_local);

private:
    std::uint32_t next_round_ = 1;
    std::optional<Micros> last_receive_;        // tRc(k-1)
    std::optional<Micros> last_server_send_;    // tSs(k-1)
    std::optional<Micros> outstanding_send_;    // tSc(k) awaiting its response
};

/// Server end of one peer relationship.
class ServerProbeState {
public:
    struct Outcome {
        ProbeResponse response;
        std::optional<RttSample> sample;  // absent in round 1
    };

    std::optional<Micros> last_send() const noexcept { return last_send_; }

    /// `receive_local` is tRs(k), `send_local` is tSs(k). Throws
    /// ParameterError if send precedes receive and ProtocolError on a
    /// malformed request. State is only updated on success.
    Outcome handle_request(const ProbeRequest& request, Micros receive_local, Micros send_local);

private:
    std::optional<Micros> last_send_;  // tSs(k-1)
};

struct ProbeRound {
    RttSample client;
    std::optional<RttSample> server;
};

struct ExchangeTiming {
    Micros one_way_out = 0;
    Micros one_way_back = 0;
    Micros processing = 0;
    /// Client wait between a response and the next request; defaults to
    /// `processing` when unset.
    std::optional<Micros> client_idle;
    std::int64_t client_offset = 0;
    std::int64_t server_offset = 0;
};

/// Drives both state machines over a deterministic global timeline.
std::vector<ProbeRound> simulate_probe_exchange(const ExchangeTiming& timing, std::uint32_t rounds);

std::vector<ProbeRound> simulate_probe_exchange(Micros one_way_out, Micros one_way_back,
                                                Micros processing, std::int64_t client_offset,
                                                std::int64_t server_offset, std::uint32_t rounds);

// Wire format, big-endian, fixed size:
//   magic 0x5052 (2) | type 1=request 2=response (1) | reserved 0 (1) |
//   k (4) | field1 (8) | field2 (8) | field3 (8)
inline constexpr std::uint16_t kProbeMagic = 0x5052;
inline constexpr std::size_t kProbeFrameSize = 32;

using ProbeFrame = std::array<std::uint8_t, kProbeFrameSize>;

/// Throws ParameterError for values that cannot be represented (round 0 or
/// a present field equal to the sentinel).
ProbeFrame encode_probe(const ProbeMessage& message);

/// Throws DecodeError on wrong size, bad magic, unknown type, nonzero
/// reserved byte or round 0.
ProbeMessage decode_probe(std::span<const std::uint8_t> bytes);

} // namespace cns
