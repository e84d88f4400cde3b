#include "flowrec/direction.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>

namespace flowrec {

PortClass classify_port(uint16_t port) {
    if (port <= 1023) return PortClass::WellKnown;
    if (port <= 49151) return PortClass::Registered;
    return PortClass::Dynamic;
}

std::string direction_method_name(DirectionMethod m) {
    switch (m) {
        case DirectionMethod::SynObserved: return "syn-observed";
        case DirectionMethod::SynackObserved: return "synack-observed";
        case DirectionMethod::PortInferred: return "port-inferred";
        case DirectionMethod::FtpSpecial: return "ftp-special";
        case DirectionMethod::DefaultForward: return "default-forward";
    }
    return "default-forward";
}

DirectionVerdict infer_direction(const PacketRecord& first_pkt,
                                 const std::set<uint16_t>& reversed_service_ports) {
    if (first_pkt.is_tcp()) {
        bool syn = first_pkt.tcp_flags & tcpflag::kSyn;
        bool ack = first_pkt.tcp_flags & tcpflag::kAck;
        if (syn && !ack) return {DirectionDecision::Forward, DirectionMethod::SynObserved};
        if (syn && ack) return {DirectionDecision::Reverse, DirectionMethod::SynackObserved};
    }
    if (first_pkt.kind() == ProtoKind::Other) {
        return {DirectionDecision::Forward, DirectionMethod::DefaultForward};
    }
    uint16_t sp = first_pkt.src_port;
    uint16_t dp = first_pkt.dst_port;
    bool sp_dyn = classify_port(sp) == PortClass::Dynamic;
    bool dp_dyn = classify_port(dp) == PortClass::Dynamic;
    if (!sp_dyn || !dp_dyn) {
        // server-initiated data channels keep first-packet orientation
        if (reversed_service_ports.count(sp)) {
            return {DirectionDecision::Forward, DirectionMethod::FtpSpecial};
        }
        if (sp == dp) return {DirectionDecision::Forward, DirectionMethod::DefaultForward};
        // lowest numeric port is deemed the service (destination) port
        uint16_t service = std::min(sp, dp);
        if (service == sp) return {DirectionDecision::Reverse, DirectionMethod::PortInferred};
        return {DirectionDecision::Forward, DirectionMethod::PortInferred};
    }
    return {DirectionDecision::Forward, DirectionMethod::DefaultForward};
}

Cidr Cidr::parse(const std::string& text) {
    auto slash = text.find('/');
    if (slash == std::string::npos) throw MalformedCidr("missing '/' in CIDR: " + text);
    auto addr = IpAddr::parse(text.substr(0, slash));
    if (!addr) throw MalformedCidr("bad address in CIDR: " + text);
    char* end = nullptr;
    long p = std::strtol(text.c_str() + slash + 1, &end, 10);
    int max_bits = addr->v6 ? 128 : 32;
    if (end == nullptr || *end != '\0' || p < 0 || p > max_bits) {
        throw MalformedCidr("bad prefix length in CIDR: " + text);
    }
    return Cidr{*addr, static_cast<int>(p)};
}

bool Cidr::contains(const IpAddr& addr) const {
    if (addr.v6 != base.v6) return false;
    int bits = prefix_len;
    for (int i = 0; bits > 0; i++, bits -= 8) {
        uint8_t mask = bits >= 8 ? 0xff : static_cast<uint8_t>(0xff << (8 - bits));
        if ((addr.bytes[i] & mask) != (base.bytes[i] & mask)) return false;
    }
    return true;
}

std::vector<Cidr> load_cidr_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MalformedCidr("cannot open CIDR file: " + path);
    std::vector<Cidr> out;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        // trim
        size_t a = line.find_first_not_of(" \t\r");
        if (a == std::string::npos) continue;
        size_t b = line.find_last_not_of(" \t\r");
        out.push_back(Cidr::parse(line.substr(a, b - a + 1)));
    }
    return out;
}

std::string orientation_name(Orientation o) {
    switch (o) {
        case Orientation::Inbound: return "inbound";
        case Orientation::Outbound: return "outbound";
        case Orientation::Internal: return "internal";
        case Orientation::External: return "external";
        case Orientation::Unknown: return "unknown";
    }
    return "unknown";
}

Orientation orient(const IpAddr& initiator, const IpAddr& responder,
                   const std::vector<Cidr>& local_cidrs) {
    if (local_cidrs.empty()) return Orientation::Unknown;
    auto is_local = [&](const IpAddr& a) {
        for (const auto& c : local_cidrs)
            if (c.contains(a)) return true;
        return false;
    };
    bool ini = is_local(initiator);
    bool res = is_local(responder);
    if (ini && res) return Orientation::Internal;
    if (ini) return Orientation::Outbound;
    if (res) return Orientation::Inbound;
    return Orientation::External;
}

}  // namespace flowrec
