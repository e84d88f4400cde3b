#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "flowrec/flow.hpp"
#include "flowrec/packet.hpp"
#include "flowrec/pcap.hpp"

namespace flowrec {

struct InvalidScenario : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One TCP client/server exchange. The clean shape is
// S / sa / A / (PA / a) x data_pkts / FA / fa / A.
struct SessionParams {
    IpAddr client, server;
    uint16_t client_port = 49500, server_port = 443;
    int64_t start_us = 0;
    int data_pkts = 2;
    uint32_t payload_size = 64;
    int64_t gap_us = 50'000;
    int64_t fin_ack_delay_us = 0;  // delay of the final ACK after the second FIN
    enum class End { Fin, Rst, None } end = End::Fin;
    bool headless = false;  // data packets only, no handshake or teardown
    bool random_data_direction = false;
};

// SYN / SYN-ACK pairs that never complete the handshake.
struct SynFloodParams {
    IpAddr src, dst;
    uint16_t src_port = 55555, dst_port = 80;
    int n = 1000;
    int64_t start_us = 0;
    int64_t gap_us = 1'000;
    bool with_synack = true;
    bool spoofed = false;  // vary the source address per pair
};

// Handshake followed by keepalive ACK pairs, never terminated.
struct ZombieParams {
    IpAddr client, server;
    uint16_t client_port = 49600, server_port = 80;
    int64_t start_us = 0;
    int64_t duration_us = 3'600'000'000;
    int64_t keepalive_us = 30'000'000;
};

using ScenarioElement = std::variant<SessionParams, SynFloodParams, ZombieParams>;

enum class InterleavePolicy { ByTime, Sequential };

struct Scenario {
    uint64_t seed = 0;
    std::vector<ScenarioElement> elements;
    InterleavePolicy interleave = InterleavePolicy::ByTime;
    size_t truncate_head = 0;  // packets removed from the front of the trace
    size_t truncate_tail = 0;
    double duplicate_fraction = 0.0;
};

// Expected per-flow outcome, computed constructively from the packets the
// generator emits (after truncation and duplication), never by running the
// recovery pipeline.
struct GroundTruthFlow {
    IpAddr src_ip, dst_ip;  // intended initiator -> responder
    uint16_t src_port = 0, dst_port = 0;
    uint8_t proto = 6;
    uint64_t fwd_pkts = 0, bwd_pkts = 0;
    FlagCounts flags_fwd, flags_bwd;
    bool initiated = false;
    bool terminated = false;
    Disposition disposition = Disposition::PartialBoth;
    int64_t first_ts = 0, last_ts = 0;
};

struct SynthResult {
    std::vector<PacketRecord> packets;
    std::vector<GroundTruthFlow> truth;
};

SynthResult synth(const Scenario& scenario);

// Line-oriented scenario file: "key = value" settings plus one element per
// line ("session ...", "syn_flood ...", "zombie ..." with key=value fields).
Scenario parse_scenario_file(const std::string& path);
Scenario parse_scenario_text(const std::string& text);

std::string ground_truth_json(const std::vector<GroundTruthFlow>& truth);

}  // namespace flowrec
