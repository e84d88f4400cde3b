#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "flowrec/packet.hpp"

namespace flowrec {

// IANA port blocks.
enum class PortClass { WellKnown, Registered, Dynamic };

PortClass classify_port(uint16_t port);

enum class DirectionMethod { SynObserved, SynackObserved, PortInferred, FtpSpecial, DefaultForward };
enum class DirectionDecision { Forward, Reverse, Unknown };

struct DirectionVerdict {
    DirectionDecision decision = DirectionDecision::Forward;
    DirectionMethod method = DirectionMethod::DefaultForward;
};

std::string direction_method_name(DirectionMethod m);

// Ports where the server legitimately initiates the connection
// (FTP / FTPS data channels).
inline const std::set<uint16_t> kDefaultReversedServicePorts = {20, 989};

// Decide initiator -> responder orientation from the first packet of a flow.
// Evidence order: TCP SYN, TCP SYN+ACK, port semantics, default forward.
DirectionVerdict infer_direction(const PacketRecord& first_pkt,
                                 const std::set<uint16_t>& reversed_service_ports =
                                     kDefaultReversedServicePorts);

struct MalformedCidr : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Cidr {
    IpAddr base;
    int prefix_len = 0;

    static Cidr parse(const std::string& text);  // throws MalformedCidr
    bool contains(const IpAddr& addr) const;
};

// Loads one CIDR per line; '#' starts a comment.
std::vector<Cidr> load_cidr_file(const std::string& path);

enum class Orientation { Inbound, Outbound, Internal, External, Unknown };

std::string orientation_name(Orientation o);

Orientation orient(const IpAddr& initiator, const IpAddr& responder,
                   const std::vector<Cidr>& local_cidrs);

}  // namespace flowrec
