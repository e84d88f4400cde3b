#include "flowrec/packet.hpp"

#include <arpa/inet.h>

#include <cstdio>
#include <cstring>

namespace flowrec {

IpAddr IpAddr::from_v4(uint32_t host_order) {
    IpAddr a;
    a.v6 = false;
    a.bytes[0] = static_cast<uint8_t>(host_order >> 24);
    a.bytes[1] = static_cast<uint8_t>(host_order >> 16);
    a.bytes[2] = static_cast<uint8_t>(host_order >> 8);
    a.bytes[3] = static_cast<uint8_t>(host_order);
    return a;
}

std::optional<IpAddr> IpAddr::parse(const std::string& text) {
    IpAddr a;
    in_addr v4{};
    if (inet_pton(AF_INET, text.c_str(), &v4) == 1) {
        a.v6 = false;
        std::memcpy(a.bytes.data(), &v4, 4);
        return a;
    }
    in6_addr v6{};
    if (inet_pton(AF_INET6, text.c_str(), &v6) == 1) {
        a.v6 = true;
        std::memcpy(a.bytes.data(), &v6, 16);
        return a;
    }
    return std::nullopt;
}

std::string IpAddr::to_string() const {
    char buf[INET6_ADDRSTRLEN] = {0};
    if (v6) {
        inet_ntop(AF_INET6, bytes.data(), buf, sizeof(buf));
    } else {
        inet_ntop(AF_INET, bytes.data(), buf, sizeof(buf));
    }
    return buf;
}

std::string proto_name(uint8_t ip_proto) {
    if (ip_proto == 6) return "tcp";
    if (ip_proto == 17) return "udp";
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%u", ip_proto);
    return buf;
}

std::optional<uint8_t> parse_proto(const std::string& text) {
    std::string low;
    low.reserve(text.size());
    for (char c : text) low.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (low == "tcp") return 6;
    if (low == "udp") return 17;
    if (low == "icmp") return 1;
    if (low.empty()) return std::nullopt;
    char* end = nullptr;
    long v = std::strtol(low.c_str(), &end, 10);
    if (end == nullptr || *end != '\0' || v < 0 || v > 255) return std::nullopt;
    return static_cast<uint8_t>(v);
}

}  // namespace flowrec
