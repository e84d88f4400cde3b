#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "flowrec/packet.hpp"

namespace testutil {

inline flowrec::IpAddr ip(const std::string& text) {
    auto a = flowrec::IpAddr::parse(text);
    if (!a) throw std::runtime_error("bad test address: " + text);
    return *a;
}

inline flowrec::PacketRecord tcp(int64_t ts_us, const std::string& src, uint16_t sport,
                                 const std::string& dst, uint16_t dport, uint8_t flags,
                                 std::vector<uint8_t> payload = {}) {
    flowrec::PacketRecord p;
    p.ts_us = ts_us;
    p.src_ip = ip(src);
    p.dst_ip = ip(dst);
    p.src_port = sport;
    p.dst_port = dport;
    p.ip_proto = 6;
    p.tcp_flags = flags;
    p.payload_len = static_cast<uint32_t>(payload.size());
    p.payload = std::move(payload);
    p.ip_len = 40 + p.payload_len;
    return p;
}

inline flowrec::PacketRecord udp(int64_t ts_us, const std::string& src, uint16_t sport,
                                 const std::string& dst, uint16_t dport,
                                 std::vector<uint8_t> payload = {}) {
    flowrec::PacketRecord p;
    p.ts_us = ts_us;
    p.src_ip = ip(src);
    p.dst_ip = ip(dst);
    p.src_port = sport;
    p.dst_port = dport;
    p.ip_proto = 17;
    p.payload_len = static_cast<uint32_t>(payload.size());
    p.payload = std::move(payload);
    p.ip_len = 28 + p.payload_len;
    return p;
}

// scratch file path under the build tree, unique per name
inline std::string tmp_path(const std::string& name) {
    auto dir = std::filesystem::path("test_tmp");
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

}  // namespace testutil
