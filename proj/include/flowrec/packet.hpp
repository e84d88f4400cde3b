#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace flowrec {

// TCP header flag bits (wire encoding).
namespace tcpflag {
inline constexpr uint8_t kFin = 0x01;
inline constexpr uint8_t kSyn = 0x02;
inline constexpr uint8_t kRst = 0x04;
inline constexpr uint8_t kPsh = 0x08;
inline constexpr uint8_t kAck = 0x10;
inline constexpr uint8_t kUrg = 0x20;
inline constexpr uint8_t kMask = 0x3f;
}  // namespace tcpflag

// IPv4 or IPv6 address. IPv4 occupies the first 4 bytes.
struct IpAddr {
    bool v6 = false;
    std::array<uint8_t, 16> bytes{};

    static IpAddr from_v4(uint32_t host_order);
    static std::optional<IpAddr> parse(const std::string& text);
    std::string to_string() const;

    auto operator<=>(const IpAddr&) const = default;
};

enum class ProtoKind { Tcp, Udp, Other };

inline ProtoKind proto_kind(uint8_t ip_proto) {
    if (ip_proto == 6) return ProtoKind::Tcp;
    if (ip_proto == 17) return ProtoKind::Udp;
    return ProtoKind::Other;
}

// Renders "tcp", "udp", or the raw IP protocol number.
std::string proto_name(uint8_t ip_proto);
// Accepts "tcp"/"udp" (any case), "6"/"17", or any decimal protocol number.
std::optional<uint8_t> parse_proto(const std::string& text);

// One decoded packet event. Timestamps are microseconds since epoch.
struct PacketRecord {
    int64_t ts_us = 0;
    IpAddr src_ip;
    IpAddr dst_ip;
    uint16_t src_port = 0;  // 0 when the protocol has no ports
    uint16_t dst_port = 0;
    uint8_t ip_proto = 0;
    uint8_t tcp_flags = 0;  // empty for non-TCP
    uint32_t ip_len = 0;       // total IP length from the header
    uint32_t payload_len = 0;  // transport payload length per headers
    std::vector<uint8_t> payload;  // captured payload bytes, may be shorter than payload_len
    bool truncated = false;        // captured length < original length

    ProtoKind kind() const { return proto_kind(ip_proto); }
    bool is_tcp() const { return ip_proto == 6; }
};

}  // namespace flowrec
