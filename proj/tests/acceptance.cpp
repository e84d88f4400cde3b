// Acceptance gate: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Everything runs on synthesized traces; expected values are
// computed constructively, never by the code under test.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "flowrec/composition.hpp"
#include "flowrec/labels.hpp"
#include "flowrec/pcap.hpp"
#include "flowrec/pipeline.hpp"
#include "flowrec/symbols.hpp"
#include "flowrec/synth.hpp"
#include "helpers.hpp"

using namespace flowrec;
using testutil::ip;
using testutil::tmp_path;

namespace {

struct Check {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Scenario clean_corpus(int sessions, uint64_t seed = 1) {
    Scenario sc;
    sc.seed = seed;
    for (int i = 0; i < sessions; i++) {
        SessionParams s;
        s.client = ip("10.0." + std::to_string(i / 200) + "." + std::to_string(1 + i % 200));
        s.server = ip("10.200.0.1");
        s.client_port = uint16_t(49152 + i % 16000);
        s.server_port = 443;
        s.start_us = int64_t(i) * 20'000;
        s.data_pkts = 2;
        sc.elements.emplace_back(s);
    }
    return sc;
}

std::vector<FeatureRow> extract_rows(const std::string& pcap, const std::string& csv,
                                     RunConfig config = {}) {
    config.inputs = {pcap};
    config.flow_out = csv;
    run_extraction(config);
    return read_flow_file(csv);
}

// criterion 1
Check clean_corpus_check() {
    Check c;
    auto t0 = std::chrono::steady_clock::now();
    auto result = synth(clean_corpus(100));
    auto pcap = tmp_path("acc1.pcap");
    write_pcap(result.packets, pcap);

    RunConfig config;
    config.inputs = {pcap};
    config.flow_out = tmp_path("acc1.csv");
    auto run = run_extraction(config);
    auto rows = read_flow_file(config.flow_out);

    c.require(rows.size() == 100, "expected 100 flows, got " + std::to_string(rows.size()));
    uint64_t syn = 0, fin = 0;
    for (const auto& r : rows) {
        c.require(r.disposition == Disposition::Complete, "non-complete flow");
        c.require(r.flags_fwd.syn + r.flags_bwd.syn == 2, "per-flow syn total != 2");
        c.require(r.flags_fwd.fin + r.flags_bwd.fin == 2, "per-flow fin total != 2");
        syn += r.flags_fwd.syn + r.flags_bwd.syn;
        fin += r.flags_fwd.fin + r.flags_bwd.fin;
    }
    c.require(syn == fin, "global syn/fin imbalance");
    c.require(run.diagnostics.late_packets_total == 0, "late packets on a clean corpus");
    c.require(elapsed_s(t0) < 5.0, "runtime limit exceeded");
    return c;
}

// criterion 2
Check syn_flood_check() {
    Check c;
    SynFloodParams f;
    f.src = ip("10.9.9.9");
    f.dst = ip("10.200.0.1");
    f.n = 1000;
    Scenario sc;
    sc.elements.emplace_back(f);
    auto result = synth(sc);
    auto pcap = tmp_path("acc2.pcap");
    write_pcap(result.packets, pcap);
    auto rows = extract_rows(pcap, tmp_path("acc2.csv"));
    c.require(rows.size() == 1, "flood did not aggregate to one flow");
    if (rows.size() == 1) {
        c.require(rows[0].flags_fwd.syn == 1000, "syn_fwd != 1000");
        c.require(rows[0].flags_bwd.syn == 1000, "syn_bwd != 1000");
    }
    return c;
}

// criterion 3
Check headless_check() {
    Check c;
    auto sc = clean_corpus(100);
    auto full = synth(sc);
    sc.truncate_head = full.packets.size() / 20;  // drop the first 5%
    auto result = synth(sc);

    auto pcap = tmp_path("acc3.pcap");
    write_pcap(result.packets, pcap);
    RunConfig config;
    config.inputs = {pcap};
    config.flow_out = tmp_path("acc3.csv");
    auto run = run_extraction(config);
    auto rows = read_flow_file(config.flow_out);

    uint64_t packets_in_rows = 0;
    for (const auto& r : rows) packets_in_rows += r.fwd.pkts + r.bwd.pkts;
    c.require(packets_in_rows == result.packets.size(), "packet conservation violated");
    c.require(run.reader_stats.packets_skipped == 0, "recovery dropped packets");

    size_t truth_uninitialised = 0;
    for (const auto& g : result.truth) {
        if (!g.initiated) truth_uninitialised++;
    }
    size_t got_uninitialised = 0;
    for (const auto& r : rows) {
        if (r.disposition == Disposition::Uninitialised) got_uninitialised++;
        else c.require(r.disposition == Disposition::Complete, "unexpected disposition");
    }
    c.require(truth_uninitialised > 0, "degenerate scenario: nothing truncated");
    c.require(got_uninitialised == truth_uninitialised,
              "uninitialised flow count mismatch: got " + std::to_string(got_uninitialised) +
                  ", truth " + std::to_string(truth_uninitialised));
    return c;
}

// criterion 4
Check direction_check() {
    Check c;
    auto t0 = std::chrono::steady_clock::now();
    Scenario sc;
    sc.seed = 77;
    const int n = 1000;
    for (int i = 0; i < n; i++) {
        SessionParams s;
        s.client = ip("10.0." + std::to_string(i / 250) + "." + std::to_string(1 + i % 250));
        s.server = ip("10.200.0.1");
        s.client_port = uint16_t(49152 + i % 16000);
        s.server_port = 443;  // well-known service port
        s.start_us = int64_t(i) * 5'000;
        s.headless = true;
        s.random_data_direction = true;  // first observed packet direction random
        s.data_pkts = 3;
        sc.elements.emplace_back(s);
    }
    auto result = synth(sc);
    auto pcap = tmp_path("acc4.pcap");
    write_pcap(result.packets, pcap);

    auto rows = extract_rows(pcap, tmp_path("acc4.csv"));
    c.require(rows.size() == n, "flow count mismatch");
    size_t with_service_dst = 0;
    for (const auto& r : rows) {
        if (r.dst_port == 443) with_service_dst++;
    }
    c.require(with_service_dst == rows.size(), "inference missed a service port");

    RunConfig control;
    control.infer_direction = false;
    auto control_rows = extract_rows(pcap, tmp_path("acc4_control.csv"), control);
    size_t control_hits = 0;
    for (const auto& r : control_rows) {
        if (r.dst_port == 443) control_hits++;
    }
    double p = double(control_hits) / double(control_rows.size());
    double half = 2.576 * std::sqrt(p * (1 - p) / double(control_rows.size()));
    c.require(p + half < 0.9, "control run confidence interval reaches 0.9");
    c.require(elapsed_s(t0) < 10.0, "runtime limit exceeded");
    return c;
}

// criterion 5
Check fin_wait_check() {
    Check c;
    SessionParams s;
    s.client = ip("10.0.0.1");
    s.server = ip("10.0.0.2");
    s.fin_ack_delay_us = 3'000'000;  // closing ack 3 s after the second fin
    Scenario sc;
    sc.elements.emplace_back(s);
    auto result = synth(sc);
    auto pcap = tmp_path("acc5.pcap");
    write_pcap(result.packets, pcap);
    auto rows = extract_rows(pcap, tmp_path("acc5.csv"));
    c.require(rows.size() == 1, "expected one flow");
    if (rows.size() == 1) {
        c.require(rows[0].flags_fwd.fin == 1 && rows[0].flags_bwd.fin == 1, "fin counts");
        c.require(rows[0].fwd.pkts + rows[0].bwd.pkts == result.packets.size(),
                  "late ack not attributed to the flow");
        c.require(rows[0].end_reason == EndReason::FinComplete, "end reason");
    }
    return c;
}

// criterion 6
Check new_syn_check() {
    Check c;
    Scenario sc;
    SessionParams s;
    s.client = ip("10.0.0.1");
    s.server = ip("10.0.0.2");
    SessionParams again = s;
    again.start_us = 2'450'000;  // 2 s after the first session ends
    sc.elements.emplace_back(s);
    sc.elements.emplace_back(again);
    auto result = synth(sc);
    auto pcap = tmp_path("acc6.pcap");
    write_pcap(result.packets, pcap);
    auto rows = extract_rows(pcap, tmp_path("acc6.csv"));
    c.require(rows.size() == 2, "tuple reuse did not split");
    for (const auto& r : rows) {
        c.require(r.disposition == Disposition::Complete, "split flow not complete");
    }
    return c;
}

// criterion 7
Check sorting_check() {
    Check c;
    Scenario sc;
    // long-lived flow starting first, short flows retiring before it
    SessionParams slow;
    slow.client = ip("10.0.0.1");
    slow.server = ip("10.0.0.2");
    slow.gap_us = 4'000'000;
    sc.elements.emplace_back(slow);
    for (int i = 0; i < 5; i++) {
        SessionParams quick;
        quick.client = ip("10.0.1." + std::to_string(i + 1));
        quick.server = ip("10.0.0.2");
        quick.start_us = 100'000 + int64_t(i) * 200'000;
        sc.elements.emplace_back(quick);
    }
    auto result = synth(sc);
    auto pcap = tmp_path("acc7.pcap");
    write_pcap(result.packets, pcap);
    auto rows = extract_rows(pcap, tmp_path("acc7.csv"));
    c.require(rows.size() == 6, "flow count mismatch");
    for (size_t i = 1; i < rows.size(); i++) {
        c.require(rows[i - 1].start_ts <= rows[i].start_ts, "output not start-time ordered");
    }
    return c;
}

// criterion 8
Check continuation_check() {
    Check c;
    Scenario sc = clean_corpus(20, 8);
    SynFloodParams flood;
    flood.src = ip("10.9.9.9");
    flood.dst = ip("10.200.0.1");
    flood.n = 30;
    flood.start_us = 100'000;
    sc.elements.emplace_back(flood);
    auto result = synth(sc);

    auto whole_pcap = tmp_path("acc8.pcap");
    write_pcap(result.packets, whole_pcap);
    auto whole_csv = tmp_path("acc8.csv");
    RunConfig config;
    config.inputs = {whole_pcap};
    config.flow_out = whole_csv;
    run_extraction(config);
    auto slurp = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        return std::string{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    };
    auto reference = slurp(whole_csv);

    for (size_t cut = 10; cut < result.packets.size(); cut += 10) {
        std::vector<PacketRecord> head(result.packets.begin(),
                                       result.packets.begin() + ptrdiff_t(cut));
        std::vector<PacketRecord> tail(result.packets.begin() + ptrdiff_t(cut),
                                       result.packets.end());
        auto pa = tmp_path("acc8_a.pcap");
        auto pb = tmp_path("acc8_b.pcap");
        write_pcap(head, pa);
        write_pcap(tail, pb);
        auto split_csv = tmp_path("acc8_split.csv");
        RunConfig split;
        split.inputs = {pa, pb};
        split.flow_out = split_csv;
        run_extraction(split);
        if (slurp(split_csv) != reference) {
            c.require(false, "split at packet " + std::to_string(cut) + " changed the output");
            break;
        }
    }
    return c;
}

// criterion 9
Check cache_formula_check() {
    Check c;
    c.require(estimate_cache_bytes(10'000, 64, 256) == 5'760'000, "formula value");
    c.require(estimate_cache_bytes(0, 64, 256) == 0, "zero flows");
    std::mt19937_64 rng(4);
    for (int i = 0; i < 100; i++) {
        uint64_t f = rng() % 100'000, d = rng() % 1'000, p = rng() % 10'000, k = rng() % 50;
        c.require(estimate_cache_bytes(k * f, d, p) == k * estimate_cache_bytes(f, d, p),
                  "linearity in the concurrency bound");
    }
    return c;
}

// criterion 10
Check entropy_check() {
    Check c;
    std::array<uint64_t, 256> hist{};
    hist[42] = 10'000;
    c.require(std::fabs(shannon_entropy(hist)) < 1e-9, "identical bytes");
    std::array<uint64_t, 256> uniform{};
    uniform.fill(1);
    c.require(std::fabs(shannon_entropy(uniform) - 8.0) < 1e-9, "uniform bytes");
    return c;
}

// criterion 11
Check symbols_check() {
    Check c;
    Scenario sc = clean_corpus(30, 11);
    SynFloodParams flood;
    flood.src = ip("10.9.9.9");
    flood.dst = ip("10.200.0.1");
    flood.n = 40;
    flood.start_us = 50'000;
    sc.elements.emplace_back(flood);
    auto result = synth(sc);
    auto pcap = tmp_path("acc11.pcap");
    write_pcap(result.packets, pcap);

    RunConfig config;
    config.inputs = {pcap};
    config.flow_out = tmp_path("acc11.csv");
    config.symbols_out = tmp_path("acc11_symbols.txt");
    run_extraction(config);
    auto rows = read_flow_file(config.flow_out);  // start-time order, like the symbol file
    auto seqs = parse_symbol_file(config.symbols_out);
    c.require(seqs.size() == rows.size(), "flow count mismatch between csv and symbols");

    for (size_t i = 0; i < seqs.size() && i < rows.size(); i++) {
        FlagCounts fwd, bwd;
        for (const auto& tok : seqs[i]) {
            if (tok == "-") continue;
            bool forward = bool(std::isupper(static_cast<unsigned char>(tok[0])));
            FlagCounts& counts = forward ? fwd : bwd;
            for (char ch : tok) {
                c.require(forward == bool(std::isupper(static_cast<unsigned char>(ch))),
                          "mixed case inside a token");
                switch (std::tolower(static_cast<unsigned char>(ch))) {
                    case 's': counts.syn++; break;
                    case 'f': counts.fin++; break;
                    case 'r': counts.rst++; break;
                    case 'p': counts.psh++; break;
                    case 'u': counts.urg++; break;
                    case 'a': counts.ack++; break;
                    default: c.require(false, "unknown symbol letter");
                }
            }
        }
        const auto& r = rows[i];
        c.require(fwd.syn == r.flags_fwd.syn && bwd.syn == r.flags_bwd.syn, "syn mismatch");
        c.require(fwd.fin == r.flags_fwd.fin && bwd.fin == r.flags_bwd.fin, "fin mismatch");
        c.require(fwd.rst == r.flags_fwd.rst && bwd.rst == r.flags_bwd.rst, "rst mismatch");
        c.require(fwd.psh == r.flags_fwd.psh && bwd.psh == r.flags_bwd.psh, "psh mismatch");
        c.require(fwd.ack == r.flags_fwd.ack && bwd.ack == r.flags_bwd.ack, "ack mismatch");
        c.require(fwd.urg == r.flags_fwd.urg && bwd.urg == r.flags_bwd.urg, "urg mismatch");
    }

    // the multi-flag token forms seen in a clean trace
    bool saw_sa = false, saw_pa = false, saw_fa = false;
    for (const auto& seq : seqs) {
        for (const auto& tok : seq) {
            if (tok == "sa") saw_sa = true;
            if (tok == "PA") saw_pa = true;
            if (tok == "FA") saw_fa = true;
        }
    }
    c.require(saw_sa && saw_pa && saw_fa, "expected token forms missing");
    return c;
}

// criterion 12
Check label_roundtrip_check() {
    Check c;
    auto result = synth(clean_corpus(100, 12));
    auto pcap = tmp_path("acc12.pcap");
    write_pcap(result.packets, pcap);
    auto csv = tmp_path("acc12.csv");
    auto rows = extract_rows(pcap, csv);
    apply_default_labels(rows, "normal");
    for (size_t i = 0; i < rows.size(); i += 10) {
        rows[i].label = "attack-" + std::to_string(i);  // label 10% of the rows
    }
    auto labelled_csv = tmp_path("acc12_labelled.csv");
    write_flow_file(rows, labelled_csv, SortMode::ByStartTime);

    // treat our own export as the legacy dataset
    LegacyColumnMap map;
    map.timestamp = "start_ts";
    map.duration = "duration_us";
    map.proto = "proto";
    map.src_ip = "src_ip";
    map.src_port = "src_port";
    map.dst_ip = "dst_ip";
    map.dst_port = "dst_port";
    map.label = "label";
    map.ts_format = "epoch_us";
    map.duration_unit = "us";
    auto legacy = read_csv(labelled_csv);
    auto extraction = extract_signatures(legacy, map, "normal");
    c.require(extraction.signatures.size() == 10, "expected 10 signatures");
    c.require(extraction.unparseable.empty(), "legacy rows failed to parse");

    auto sigs = extraction.signatures;
    std::shuffle(sigs.begin(), sigs.end(), std::mt19937_64(3));

    auto fresh = read_flow_file(csv);
    apply_default_labels(fresh, "normal");
    MatchTolerance tol;
    tol.ts_tolerance_us = 0;
    tol.duration_tolerance_abs_us = 0;
    tol.duration_tolerance_frac = 0.0;
    auto report = reapply_signatures(fresh, sigs, tol, "normal");
    c.require(report.relabelled == sigs.size(), "not every signature relabelled");
    c.require(report.unmatched.empty(), "unmatched list not empty");
    return c;
}

// criterion 13
Check stats_oracle_check() {
    Check c;
    std::mt19937_64 rng(13);
    for (int flow = 0; flow < 1000; flow++) {
        DirStats s;
        std::vector<double> lens, iats;
        int n = 1 + int(rng() % 30);
        int64_t ts = 0, prev = 0;
        for (int i = 0; i < n; i++) {
            ts += 1 + int64_t(rng() % 2'000'000);
            PacketRecord p;
            p.ts_us = ts;
            p.ip_len = 40 + uint32_t(rng() % 1460);
            s.add_packet(p);
            lens.push_back(double(p.ip_len));
            if (i > 0) iats.push_back(double(ts - prev));
            prev = ts;
        }
        auto check_pair = [&](const std::vector<double>& xs, double mean, double stddev) {
            if (xs.empty()) return;
            double m = 0;
            for (double x : xs) m += x;
            m /= double(xs.size());
            double ss = 0;
            for (double x : xs) ss += (x - m) * (x - m);
            double sd = std::sqrt(ss / double(xs.size()));
            double scale = std::max({1.0, std::fabs(m), std::fabs(sd)});
            c.require(std::fabs(mean - m) / scale < 1e-6, "mean drift");
            c.require(std::fabs(stddev - sd) / scale < 1e-6, "std drift");
        };
        check_pair(lens, s.len_mean, s.len_std());
        check_pair(iats, s.iat_mean, s.iat_std());
    }
    return c;
}

// criterion 14
Check steady_state_check() {
    Check c;
    auto t0 = std::chrono::steady_clock::now();
    Scenario sc;
    sc.seed = 14;
    // headless carryover draining by T = 120 s
    const int64_t kDrainUs = 120'000'000;
    for (int i = 0; i < 30; i++) {
        SessionParams s;
        s.client = ip("10.7.0." + std::to_string(i + 1));
        s.server = ip("10.200.0.1");
        s.headless = true;
        s.data_pkts = 24;
        s.gap_us = 5'000'000;  // 24 packets spread over 115 s
        s.start_us = int64_t(i) * 10'000;
        sc.elements.emplace_back(s);
    }
    // clean traffic throughout
    for (int i = 0; i < 380; i++) {
        SessionParams s;
        s.client = ip("10.8." + std::to_string(i / 250) + "." + std::to_string(1 + i % 250));
        s.server = ip("10.200.0.1");
        s.start_us = int64_t(i) * 1'000'000;
        sc.elements.emplace_back(s);
    }
    auto result = synth(sc);
    auto pcap = tmp_path("acc14.pcap");
    write_pcap(result.packets, pcap);
    auto rows = extract_rows(pcap, tmp_path("acc14.csv"));

    int64_t window = 60'000'000;
    auto report = detect_steady_state(flow_intervals(rows), window, 0.9);
    c.require(report.steady_start_ts.has_value(), "no steady phase found");
    if (report.steady_start_ts) {
        c.require(std::llabs(*report.steady_start_ts - kDrainUs) <= window,
                  "steady start " + std::to_string(*report.steady_start_ts) +
                      " not within one window of the drain point");
    }
    c.require(elapsed_s(t0) < 10.0, "runtime limit exceeded");
    return c;
}

// criterion 15
Check correlation_check() {
    Check c;
    std::mt19937_64 rng(15);
    std::vector<FeatureRow> rows;
    for (int i = 0; i < 500; i++) {
        FeatureRow r;
        r.duration_us = int64_t(rng() % 1'000'000);
        r.src_port = uint16_t(1024 + rng() % 60000);
        r.dst_port = uint16_t(rng() % 1024);
        r.fwd.pkts = uint64_t(rng() % 100);
        r.bwd.pkts = r.fwd.pkts;  // duplicated column
        r.fwd.bytes = 40 * r.fwd.pkts + rng() % 1000;
        r.bwd.bytes = uint64_t(rng() % 5000);
        r.entropy_fwd = double(rng() % 1000) / 125.0;
        rows.push_back(r);
    }
    auto result = filter_correlated(rows, 0.95);
    bool dup_dropped = false;
    for (const auto& d : result.dropped) {
        if ((d.name == "bwd_pkts" && d.against == "fwd_pkts") ||
            (d.name == "fwd_pkts" && d.against == "bwd_pkts")) {
            dup_dropped = true;
        }
    }
    c.require(dup_dropped, "duplicated column not dropped");

    auto value_vec = [&](const std::string& name) {
        std::vector<double> v;
        for (const auto& r : rows) v.push_back(numeric_feature_value(r, name));
        return v;
    };
    for (size_t a = 0; a < result.retained.size(); a++) {
        for (size_t b = a + 1; b < result.retained.size(); b++) {
            auto xs = value_vec(result.retained[a]);
            auto ys = value_vec(result.retained[b]);
            double mx = 0, my = 0;
            for (size_t i = 0; i < xs.size(); i++) {
                mx += xs[i];
                my += ys[i];
            }
            mx /= double(xs.size());
            my /= double(ys.size());
            double sxy = 0, sxx = 0, syy = 0;
            for (size_t i = 0; i < xs.size(); i++) {
                sxy += (xs[i] - mx) * (ys[i] - my);
                sxx += (xs[i] - mx) * (xs[i] - mx);
                syy += (ys[i] - my) * (ys[i] - my);
            }
            double r = (sxx == 0 || syy == 0) ? 0 : sxy / std::sqrt(sxx * syy);
            c.require(std::fabs(r) < 0.95, "retained pair " + result.retained[a] + "/" +
                                               result.retained[b] + " still correlated");
        }
    }
    return c;
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        Check (*fn)();
    };
    const Criterion criteria[] = {
        {"clean corpus recovers 100 complete flows with balanced handshakes", clean_corpus_check},
        {"identical-tuple syn flood aggregates into a single flow", syn_flood_check},
        {"headless trace keeps every packet and marks affected flows", headless_check},
        {"direction inference pins the service port as destination", direction_check},
        {"fin-wait attributes the delayed closing ack to the flow", fin_wait_check},
        {"tuple reuse splits into two complete flows", new_syn_check},
        {"flow file is nondecreasing in start time", sorting_check},
        {"split traces reproduce the single-file output byte for byte", continuation_check},
        {"cache size estimate is exact and linear", cache_formula_check},
        {"payload entropy hits both extremes", entropy_check},
        {"symbol sequences re-derive the csv flag counters", symbols_check},
        {"labels survive a zero-tolerance signature round trip", label_roundtrip_check},
        {"streaming statistics match the two-pass oracle", stats_oracle_check},
        {"steady state begins when the headless prefix drains", steady_state_check},
        {"correlation filter removes the duplicated column", correlation_check},
    };

    int failures = 0;
    int index = 0;
    for (const auto& criterion : criteria) {
        index++;
        Check c;
        try {
            c = criterion.fn();
        } catch (const std::exception& e) {
            c.ok = false;
            c.detail = std::string("exception: ") + e.what();
        }
        if (c.ok) {
            std::printf("PASS  criterion %2d: %s\n", index, criterion.name);
        } else {
            std::printf("FAIL  criterion %2d: %s (%s)\n", index, criterion.name,
                        c.detail.c_str());
            failures++;
        }
    }
    if (failures) std::printf("%d of 15 criteria failed\n", failures);
    else std::printf("all 15 criteria passed\n");
    return failures == 0 ? 0 : 1;
}
