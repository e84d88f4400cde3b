#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "flowrec/features.hpp"
#include "helpers.hpp"

using namespace flowrec;
using testutil::tcp;
using testutil::tmp_path;

namespace {

std::vector<FlowRecord> flows_from(const std::vector<PacketRecord>& pkts) {
    FlowCache cache;
    for (const auto& p : pkts) cache.admit_packet(p);
    cache.finalize_all();
    return cache.take_retired();
}

std::vector<FeatureRow> rows_from(const std::vector<PacketRecord>& pkts) {
    std::vector<FeatureRow> rows;
    for (const auto& f : flows_from(pkts)) rows.push_back(finalize_row(f));
    return rows;
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    double mx = 0, my = 0;
    size_t n = xs.size();
    for (size_t i = 0; i < n; i++) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= double(n);
    my /= double(n);
    double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = 0; i < n; i++) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0 || syy == 0) return 0;
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST_CASE("schema has the documented width and a flow row fills every cell") {
    CHECK(flow_file_columns().size() == 52);
    CHECK(flow_file_columns().front() == "flow_id");
    CHECK(flow_file_columns().back() == "label");
}

TEST_CASE("finalized rows render src and dst in initiator orientation") {
    using namespace tcpflag;
    // first packet is the server's syn-ack: stored key is server-first,
    // the exported row must flip it back
    auto rows = rows_from({tcp(0, "10.0.0.2", 443, "10.0.0.1", 51000, kSyn | kAck),
                           tcp(1'000, "10.0.0.1", 51000, "10.0.0.2", 443, kAck)});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].src_ip.to_string() == "10.0.0.1");
    CHECK(rows[0].src_port == 51000);
    CHECK(rows[0].dst_ip.to_string() == "10.0.0.2");
    CHECK(rows[0].dst_port == 443);
    CHECK(rows[0].direction_method == DirectionMethod::SynackObserved);
    // the syn-ack was sent by the responder, so it counts backward
    CHECK(rows[0].bwd.pkts == 1);
    CHECK(rows[0].fwd.pkts == 1);
}

TEST_CASE("undefined statistics render as empty cells") {
    using namespace tcpflag;
    auto rows = rows_from({tcp(0, "10.0.0.1", 51000, "10.0.0.2", 443, kSyn)});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].fwd.len_min.has_value());   // one packet: lengths defined
    CHECK_FALSE(rows[0].fwd.iat_min.has_value());  // iat needs two packets
    CHECK_FALSE(rows[0].bwd.len_min.has_value());  // no backward packets at all

    auto path = tmp_path("features_empty.csv");
    write_flow_file(rows, path, SortMode::ByStartTime);
    std::ifstream in(path);
    std::string header, line;
    std::getline(in, header);
    std::getline(in, line);
    CHECK(line.find(",,") != std::string::npos);

    auto back = read_flow_file(path);
    REQUIRE(back.size() == 1);
    CHECK_FALSE(back[0].fwd.iat_min.has_value());
    CHECK_FALSE(back[0].bwd.len_min.has_value());
}

TEST_CASE("write then read round-trips a generated corpus") {
    using namespace tcpflag;
    std::vector<PacketRecord> pkts;
    for (int i = 0; i < 30; i++) {
        int64_t t0 = i * 10'000;
        auto cli = "10.0.0." + std::to_string(1 + i);
        pkts.push_back(tcp(t0, cli, 49001, "10.0.1.1", 443, kSyn));
        pkts.push_back(tcp(t0 + 1'000, "10.0.1.1", 443, cli, 49001, kSyn | kAck));
        pkts.push_back(tcp(t0 + 2'000, cli, 49001, "10.0.1.1", 443, kPsh | kAck, {1, 2}));
        pkts.push_back(tcp(t0 + 3'000, cli, 49001, "10.0.1.1", 443, kFin | kAck));
        pkts.push_back(tcp(t0 + 4'000, "10.0.1.1", 443, cli, 49001, kFin | kAck));
    }
    auto rows = rows_from(pkts);
    auto path = tmp_path("features_roundtrip.csv");
    CHECK(write_flow_file(rows, path, SortMode::ByStartTime) == rows.size());

    auto back = read_flow_file(path);
    REQUIRE(back.size() == rows.size());
    for (size_t i = 0; i < rows.size(); i++) {
        CAPTURE(i);
        CHECK(back[i].flow_id == rows[i].flow_id);
        CHECK(back[i].start_ts == rows[i].start_ts);
        CHECK(back[i].src_ip == rows[i].src_ip);
        CHECK(back[i].dst_port == rows[i].dst_port);
        CHECK(back[i].fwd.pkts == rows[i].fwd.pkts);
        CHECK(back[i].flags_fwd.syn == rows[i].flags_fwd.syn);
        CHECK(back[i].disposition == rows[i].disposition);
        CHECK(back[i].end_reason == rows[i].end_reason);
        if (rows[i].fwd.len_mean) {
            CHECK(*back[i].fwd.len_mean == doctest::Approx(*rows[i].fwd.len_mean));
        }
    }
}

TEST_CASE("start-time sort reorders flows retired out of order") {
    using namespace tcpflag;
    std::vector<PacketRecord> pkts = {
        // long-lived flow starts first, retires last
        tcp(0, "10.0.0.1", 49001, "10.0.0.2", 443, kSyn),
        tcp(10'000, "10.0.0.3", 49002, "10.0.0.2", 443, kSyn),
        tcp(20'000, "10.0.0.3", 49002, "10.0.0.2", 443, kFin | kAck),
        tcp(30'000, "10.0.0.2", 443, "10.0.0.3", 49002, kFin | kAck),
        tcp(40'000'000, "10.0.0.1", 49001, "10.0.0.2", 443, kFin | kAck),
        tcp(40'010'000, "10.0.0.2", 443, "10.0.0.1", 49001, kFin | kAck),
    };
    auto rows = rows_from(pkts);
    REQUIRE(rows.size() == 2);
    // retirement order has the short flow first
    CHECK(rows[0].start_ts > rows[1].start_ts);

    auto sorted_path = tmp_path("features_sorted.csv");
    write_flow_file(rows, sorted_path, SortMode::ByStartTime);
    auto sorted = read_flow_file(sorted_path);
    CHECK(sorted[0].start_ts <= sorted[1].start_ts);

    auto raw_path = tmp_path("features_retire_order.csv");
    write_flow_file(rows, raw_path, SortMode::ByRetirement);
    auto raw = read_flow_file(raw_path);
    CHECK(raw[0].flow_id == rows[0].flow_id);
}

TEST_CASE("column subset export keeps names and order") {
    using namespace tcpflag;
    auto rows = rows_from({tcp(0, "10.0.0.1", 51000, "10.0.0.2", 443, kSyn)});
    auto path = tmp_path("features_subset.csv");
    write_flow_file_subset(rows, path, SortMode::ByStartTime,
                           {"flow_id", "syn_fwd", "label"});
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "flow_id,syn_fwd,label");
    CHECK_THROWS_AS(write_flow_file_subset(rows, path, SortMode::ByStartTime, {"nope"}),
                    std::invalid_argument);
}

TEST_CASE("correlation filter drops a duplicated column and zero variance first") {
    std::mt19937_64 rng(5);
    std::vector<FeatureRow> rows;
    for (int i = 0; i < 300; i++) {
        FeatureRow r;
        r.duration_us = int64_t(rng() % 1'000'000);
        r.src_port = uint16_t(1024 + rng() % 60000);
        r.dst_port = 443;  // zero variance
        r.fwd.pkts = uint64_t(rng() % 50);
        r.bwd.pkts = r.fwd.pkts;  // exact duplicate of fwd_pkts
        r.fwd.bytes = uint64_t(rng() % 5000);
        r.bwd.bytes = uint64_t(rng() % 5000);
        rows.push_back(r);
    }
    auto result = filter_correlated(rows, 0.95);

    bool dup_dropped = false, zero_dropped = false;
    for (const auto& d : result.dropped) {
        if (d.name == "bwd_pkts" && d.against == "fwd_pkts") dup_dropped = true;
        if (d.name == "dst_port" && d.against.empty()) zero_dropped = true;
        CHECK(std::find(result.retained.begin(), result.retained.end(), d.name) ==
              result.retained.end());
    }
    CHECK(dup_dropped);
    CHECK(zero_dropped);
    CHECK(std::find(result.retained.begin(), result.retained.end(), "fwd_pkts") !=
          result.retained.end());

    // brute force: every retained pair stays under the threshold
    for (size_t a = 0; a < result.retained.size(); a++) {
        for (size_t b = a + 1; b < result.retained.size(); b++) {
            std::vector<double> xs, ys;
            for (const auto& r : rows) {
                xs.push_back(numeric_feature_value(r, result.retained[a]));
                ys.push_back(numeric_feature_value(r, result.retained[b]));
            }
            CAPTURE(result.retained[a]);
            CAPTURE(result.retained[b]);
            CHECK(std::fabs(pearson(xs, ys)) < 0.95);
        }
    }
}
