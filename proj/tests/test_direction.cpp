#include <doctest.h>

#include "flowrec/direction.hpp"
#include "helpers.hpp"

using namespace flowrec;
using testutil::ip;
using testutil::tcp;
using testutil::udp;

TEST_CASE("iana port blocks") {
    CHECK(classify_port(0) == PortClass::WellKnown);
    CHECK(classify_port(1023) == PortClass::WellKnown);
    CHECK(classify_port(1024) == PortClass::Registered);
    CHECK(classify_port(49151) == PortClass::Registered);
    CHECK(classify_port(49152) == PortClass::Dynamic);
    CHECK(classify_port(65535) == PortClass::Dynamic);
}

TEST_CASE("syn evidence wins over ports") {
    // server-side SYN on a well-known source port still marks the sender as initiator
    auto v = infer_direction(tcp(0, "10.0.0.2", 443, "10.0.0.1", 51000, tcpflag::kSyn));
    CHECK(v.decision == DirectionDecision::Forward);
    CHECK(v.method == DirectionMethod::SynObserved);
}

TEST_CASE("syn-ack marks the sender as responder") {
    auto v = infer_direction(
        tcp(0, "10.0.0.2", 443, "10.0.0.1", 51000, tcpflag::kSyn | tcpflag::kAck));
    CHECK(v.decision == DirectionDecision::Reverse);
    CHECK(v.method == DirectionMethod::SynackObserved);
}

TEST_CASE("headless packets fall back to the lower service port") {
    auto fwd = infer_direction(tcp(0, "10.0.0.1", 51000, "10.0.0.2", 443, tcpflag::kAck));
    CHECK(fwd.decision == DirectionDecision::Forward);
    CHECK(fwd.method == DirectionMethod::PortInferred);

    auto rev = infer_direction(tcp(0, "10.0.0.2", 443, "10.0.0.1", 51000, tcpflag::kAck));
    CHECK(rev.decision == DirectionDecision::Reverse);
    CHECK(rev.method == DirectionMethod::PortInferred);

    // registered beats dynamic too
    auto reg = infer_direction(udp(0, "10.0.0.1", 50000, "10.0.0.2", 8080));
    CHECK(reg.decision == DirectionDecision::Forward);
    CHECK(reg.method == DirectionMethod::PortInferred);
}

TEST_CASE("ftp data channel keeps the server as source") {
    auto v = infer_direction(tcp(0, "10.0.0.2", 20, "10.0.0.1", 51000, tcpflag::kAck));
    CHECK(v.decision == DirectionDecision::Forward);
    CHECK(v.method == DirectionMethod::FtpSpecial);

    auto ftps = infer_direction(tcp(0, "10.0.0.2", 989, "10.0.0.1", 51000, tcpflag::kAck));
    CHECK(ftps.method == DirectionMethod::FtpSpecial);
}

TEST_CASE("no port evidence leaves the observed orientation") {
    auto v = infer_direction(tcp(0, "10.0.0.1", 50001, "10.0.0.2", 50002, tcpflag::kAck));
    CHECK(v.decision == DirectionDecision::Forward);
    CHECK(v.method == DirectionMethod::DefaultForward);
}

TEST_CASE("cidr parse and membership") {
    auto c = Cidr::parse("192.168.0.0/16");
    CHECK(c.contains(ip("192.168.3.4")));
    CHECK_FALSE(c.contains(ip("192.169.0.1")));
    CHECK_THROWS_AS(Cidr::parse("bogus/99"), MalformedCidr);
    CHECK_THROWS_AS(Cidr::parse("10.0.0.0/33"), MalformedCidr);

    auto v6 = Cidr::parse("2001:db8::/32");
    CHECK(v6.contains(*IpAddr::parse("2001:db8::1")));
    CHECK_FALSE(v6.contains(*IpAddr::parse("2001:db9::1")));
}

TEST_CASE("orientation from local networks") {
    std::vector<Cidr> local = {Cidr::parse("10.0.0.0/8")};
    CHECK(orient(ip("10.0.0.1"), ip("8.8.8.8"), local) == Orientation::Outbound);
    CHECK(orient(ip("8.8.8.8"), ip("10.0.0.1"), local) == Orientation::Inbound);
    CHECK(orient(ip("10.0.0.1"), ip("10.0.0.2"), local) == Orientation::Internal);
    CHECK(orient(ip("8.8.8.8"), ip("9.9.9.9"), local) == Orientation::External);
    CHECK(orient(ip("10.0.0.1"), ip("8.8.8.8"), {}) == Orientation::Unknown);
}
