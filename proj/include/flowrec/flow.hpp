#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "flowrec/direction.hpp"
#include "flowrec/packet.hpp"
#include "flowrec/stats.hpp"

namespace flowrec {

// Bidirectional flow identity, stored in the orientation of the flow's
// first observed packet (side a = that packet's source).
struct FlowKey {
    IpAddr ip_a, ip_b;
    uint16_t port_a = 0, port_b = 0;
    uint8_t proto = 0;

    FlowKey reversed() const { return {ip_b, ip_a, port_b, port_a, proto}; }
    bool operator==(const FlowKey&) const = default;
};

struct FlowKeyHash {
    size_t operator()(const FlowKey& k) const {
        uint64_t h = 1469598103934665603ull;
        auto mix = [&h](const uint8_t* p, size_t n) {
            for (size_t i = 0; i < n; i++) {
                h ^= p[i];
                h *= 1099511628211ull;
            }
        };
        mix(k.ip_a.bytes.data(), 16);
        mix(k.ip_b.bytes.data(), 16);
        uint8_t tail[5] = {static_cast<uint8_t>(k.port_a >> 8), static_cast<uint8_t>(k.port_a),
                           static_cast<uint8_t>(k.port_b >> 8), static_cast<uint8_t>(k.port_b),
                           k.proto};
        mix(tail, sizeof(tail));
        return static_cast<size_t>(h);
    }
};

FlowKey make_key(const PacketRecord& pkt);

struct FlagCounts {
    uint64_t syn = 0, ack = 0, fin = 0, rst = 0, psh = 0, urg = 0;
    void add(uint8_t flags) {
        if (flags & tcpflag::kSyn) syn++;
        if (flags & tcpflag::kAck) ack++;
        if (flags & tcpflag::kFin) fin++;
        if (flags & tcpflag::kRst) rst++;
        if (flags & tcpflag::kPsh) psh++;
        if (flags & tcpflag::kUrg) urg++;
    }
};

enum class FlowState { Active, FinWait, Retired };
enum class Disposition { Complete, Uninitialised, Unterminated, PartialBoth };
enum class EndReason { None, FinComplete, Rst, IdleTimeout, ActiveTimeout, NewSyn, EndOfTrace };

std::string disposition_name(Disposition d);
std::string end_reason_name(EndReason r);

namespace anomaly {
inline constexpr uint32_t kSynAfterData = 1u << 0;
inline constexpr uint32_t kFlagAfterFin = 1u << 1;
inline constexpr uint32_t kBackwardsTimestamp = 1u << 2;
}  // namespace anomaly

struct FlowRecord {
    FlowKey key;
    uint64_t flow_id = 0;
    int64_t start_ts = 0;
    int64_t last_ts = 0;
    bool initiator_is_a = true;
    DirectionMethod direction_method = DirectionMethod::DefaultForward;
    Orientation orientation = Orientation::Unknown;
    FlowState state = FlowState::Active;
    Disposition disposition = Disposition::PartialBoth;
    EndReason end_reason = EndReason::None;
    DirStats fwd, bwd;  // initiator -> responder is forward
    FlagCounts flags_fwd, flags_bwd;
    bool initiated = false;  // TCP: SYN seen on the flow's first packet
    bool fin_seen_fwd = false, fin_seen_bwd = false;
    bool rst_seen = false;
    std::optional<int64_t> fin_wait_deadline;
    uint64_t late_packets = 0;
    uint32_t anomaly_flags = 0;
    bool truncated = false;  // any packet with truncated capture
    std::vector<std::string> tokens;  // one per TCP packet, for symbol export
    std::string label;

    uint64_t total_payload() const { return fwd.payload_bytes + bwd.payload_bytes; }
};

struct Timeouts {
    int64_t idle_tcp_us = 300'000'000;
    int64_t idle_udp_us = 120'000'000;  // also applies to other IP protocols
    int64_t fin_wait_us = 10'000'000;
    int64_t rst_linger_us = 1'000'000;
    int64_t active_us = 24ll * 3600 * 1'000'000;
};

struct CacheConfig {
    Timeouts timeouts;
    bool infer_direction = true;
    std::set<uint16_t> reversed_service_ports = kDefaultReversedServicePorts;
    std::vector<Cidr> local_cidrs;
    bool collect_tokens = true;
};

enum class FlowEventKind { Created, Updated, Retired };

struct FlowEvent {
    FlowEventKind kind;
    uint64_t flow_id;
    EndReason reason = EndReason::None;
};

enum class PacketDirection { Forward, Reverse };

struct LookupResult {
    FlowRecord* record = nullptr;
    PacketDirection direction = PacketDirection::Forward;  // relative to stored key
    bool hit() const { return record != nullptr; }
};

// Flow state memory cache. Single-writer: one thread admits packets and
// retires flows; retired records are immutable afterwards.
class FlowCache {
  public:
    explicit FlowCache(CacheConfig config = {});

    // Both key orientations are tried; one cache entry per bidirectional flow.
    LookupResult lookup_bidirectional(const FlowKey& key);

    std::vector<FlowEvent> admit_packet(const PacketRecord& pkt);
    std::vector<FlowEvent> check_timeouts(int64_t now_us);
    std::vector<FlowEvent> finalize_all();

    const std::vector<FlowRecord>& retired() const { return retired_; }
    std::vector<FlowRecord> take_retired() { return std::move(retired_); }

    size_t active_count() const { return table_.size(); }
    uint64_t created() const { return created_; }
    uint64_t retired_count() const { return retired_total_; }
    uint64_t high_watermark() const { return high_watermark_; }
    uint64_t admitted_packets() const { return admitted_packets_; }
    uint64_t late_packets_total() const { return late_packets_total_; }
    uint64_t anomaly_syn_after_data() const { return tally_syn_after_data_; }
    uint64_t anomaly_flag_after_fin() const { return tally_flag_after_fin_; }
    uint64_t anomaly_backwards_ts() const { return tally_backwards_ts_; }
    const CacheConfig& config() const { return config_; }

  private:
    FlowRecord& create_flow(const PacketRecord& pkt, const FlowKey& key,
                            std::vector<FlowEvent>& events);
    void update_flow(FlowRecord& flow, const PacketRecord& pkt, bool forward_side);
    void retire(const FlowKey& stored_key, EndReason trigger, std::vector<FlowEvent>& events);

    CacheConfig config_;
    std::unordered_map<FlowKey, FlowRecord, FlowKeyHash> table_;
    std::vector<FlowRecord> retired_;
    std::unordered_set<FlowKey, FlowKeyHash> retired_keys_;
    uint64_t next_flow_id_ = 0;
    uint64_t created_ = 0;
    uint64_t retired_total_ = 0;
    uint64_t high_watermark_ = 0;
    uint64_t admitted_packets_ = 0;
    uint64_t late_packets_total_ = 0;
    uint64_t tally_syn_after_data_ = 0;
    uint64_t tally_flag_after_fin_ = 0;
    uint64_t tally_backwards_ts_ = 0;
    bool have_clock_ = false;
    int64_t clock_us_ = 0;
    int64_t last_scan_us_ = 0;
};

// Worst-case cache size estimate: f_smax * (d_so + 2 * f_s).
uint64_t estimate_cache_bytes(uint64_t f_smax, uint64_t d_so, uint64_t f_s);

}  // namespace flowrec
