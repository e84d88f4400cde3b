#include "flowrec/composition.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include <json.hpp>

namespace flowrec {

std::vector<FlowInterval> flow_intervals(const std::vector<FlowRecord>& flows) {
    std::vector<FlowInterval> out;
    out.reserve(flows.size());
    for (const auto& f : flows) {
        bool terminated =
            f.end_reason == EndReason::FinComplete || f.end_reason == EndReason::Rst;
        out.push_back({f.start_ts, f.last_ts, f.initiated, terminated});
    }
    return out;
}

std::vector<FlowInterval> flow_intervals(const std::vector<FeatureRow>& rows) {
    std::vector<FlowInterval> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        bool initiated = r.disposition == Disposition::Complete ||
                         r.disposition == Disposition::Unterminated;
        bool terminated = r.end_reason == EndReason::FinComplete || r.end_reason == EndReason::Rst;
        out.push_back({r.start_ts, r.end_ts, initiated, terminated});
    }
    return out;
}

PhaseReport detect_steady_state(const std::vector<FlowInterval>& flows, int64_t window_us,
                                double ratio_threshold) {
    if (window_us <= 0) throw DegenerateWindow("steady-state window must be positive");
    if (!(ratio_threshold > 0.0 && ratio_threshold <= 1.0)) {
        throw std::invalid_argument("ratio threshold must be in (0, 1]");
    }
    PhaseReport report;
    if (flows.empty()) return report;

    int64_t first = flows[0].start_ts, last = flows[0].end_ts;
    uint64_t uninit = 0, unterm = 0;
    for (const auto& f : flows) {
        first = std::min(first, f.start_ts);
        last = std::max(last, f.end_ts);
        if (!f.initiated) uninit++;
        if (!f.terminated) unterm++;
    }
    report.first_packet_ts = first;
    report.last_packet_ts = last;
    report.uninitialised_flow_fraction =
        static_cast<double>(uninit) / static_cast<double>(flows.size());
    report.unterminated_flow_fraction =
        static_cast<double>(unterm) / static_cast<double>(flows.size());

    // concurrency curve (F_smax): sweep over interval endpoints
    std::map<int64_t, int64_t> delta;
    for (const auto& f : flows) {
        delta[f.start_ts] += 1;
        delta[f.end_ts + 1] -= 1;
    }
    int64_t depth = 0;
    int64_t best = 0, best_ts = first;
    for (const auto& [ts, d] : delta) {
        depth += d;
        if (depth > best) {
            best = depth;
            best_ts = ts;
        }
    }
    report.max_concurrent_flows = static_cast<uint64_t>(best);
    report.max_concurrent_ts = best_ts;

    // windowed initiation-ratio curve; a persistent uninitialised flow only
    // suppresses the region if it pushes the ratio below the threshold
    int64_t step = std::max<int64_t>(window_us / 4, 1);
    struct Run {
        int64_t start, end;
    };
    std::optional<Run> current, longest;
    for (int64_t w = first; w <= last; w += step) {
        int64_t w_end = w + window_us;
        uint64_t active = 0, initiated = 0;
        for (const auto& f : flows) {
            if (f.start_ts < w_end && f.end_ts >= w) {
                active++;
                if (f.initiated) initiated++;
            }
        }
        bool ok = active == 0 ||
                  static_cast<double>(initiated) / static_cast<double>(active) >= ratio_threshold;
        if (ok) {
            if (!current) {
                current = Run{w, std::min(w_end, last)};
            } else {
                current->end = std::min(w_end, last);
            }
        } else if (current) {
            if (!longest || current->end - current->start > longest->end - longest->start) {
                longest = current;
            }
            current.reset();
        }
    }
    if (current && (!longest || current->end - current->start > longest->end - longest->start)) {
        longest = current;
    }
    if (longest) {
        report.steady_start_ts = std::max(longest->start, first);
        report.steady_end_ts = longest->end;
    }
    return report;
}

DiagnosticsReport build_diagnostics(const ReaderStats& reader_stats,
                                    const std::vector<BoundaryGap>& gaps, const FlowCache& cache,
                                    uint64_t label_errors) {
    DiagnosticsReport d;
    d.packets_total = cache.admitted_packets();
    d.packets_skipped = reader_stats.packets_skipped;
    d.fragments_skipped = reader_stats.fragments_skipped;
    d.malformed_records = reader_stats.malformed_records;
    d.backwards_timestamps = reader_stats.backwards_timestamps;
    d.nano_truncated = reader_stats.nano_truncated;
    d.late_packets_total = cache.late_packets_total();
    d.flows_created = cache.created();
    d.flows_retired = cache.retired_count();
    d.cache_high_watermark = cache.high_watermark();
    d.packets_per_flow = cache.created() > 0 ? static_cast<double>(cache.admitted_packets()) /
                                                   static_cast<double>(cache.created())
                                             : 0.0;
    d.boundary_gaps = gaps;
    d.anomaly_syn_after_data = cache.anomaly_syn_after_data();
    d.anomaly_flag_after_fin = cache.anomaly_flag_after_fin();
    d.anomaly_backwards_timestamp = cache.anomaly_backwards_ts();
    d.label_errors = label_errors;

    std::map<std::string, uint64_t> reasons, dispositions;
    for (const auto& f : cache.retired()) {
        reasons[end_reason_name(f.end_reason)]++;
        dispositions[disposition_name(f.disposition)]++;
    }
    d.by_end_reason.assign(reasons.begin(), reasons.end());
    d.by_disposition.assign(dispositions.begin(), dispositions.end());
    return d;
}

std::string DiagnosticsReport::to_text() const {
    std::ostringstream out;
    out << "packets_total: " << packets_total << "\n";
    out << "packets_skipped: " << packets_skipped << "\n";
    out << "fragments_skipped: " << fragments_skipped << "\n";
    out << "malformed_records: " << malformed_records << "\n";
    out << "backwards_timestamps: " << backwards_timestamps << "\n";
    out << "nano_truncated: " << nano_truncated << "\n";
    out << "late_packets_total: " << late_packets_total << "\n";
    out << "flows_created: " << flows_created << "\n";
    out << "flows_retired: " << flows_retired << "\n";
    out << "cache_high_watermark: " << cache_high_watermark << "\n";
    out << "packets_per_flow: " << packets_per_flow << "\n";
    for (const auto& [k, v] : by_end_reason) out << "end_reason." << k << ": " << v << "\n";
    for (const auto& [k, v] : by_disposition) out << "disposition." << k << ": " << v << "\n";
    for (const auto& g : boundary_gaps) {
        out << "boundary_gap." << g.file_index << ": " << g.gap_us
            << (g.negative ? " (negative)" : "") << "\n";
    }
    out << "anomaly.syn_after_data: " << anomaly_syn_after_data << "\n";
    out << "anomaly.flag_after_fin: " << anomaly_flag_after_fin << "\n";
    out << "anomaly.backwards_timestamp: " << anomaly_backwards_timestamp << "\n";
    out << "label_errors: " << label_errors << "\n";
    return out.str();
}

std::string DiagnosticsReport::to_json() const {
    nlohmann::ordered_json j;
    j["packets_total"] = packets_total;
    j["packets_skipped"] = packets_skipped;
    j["fragments_skipped"] = fragments_skipped;
    j["malformed_records"] = malformed_records;
    j["backwards_timestamps"] = backwards_timestamps;
    j["nano_truncated"] = nano_truncated;
    j["late_packets_total"] = late_packets_total;
    j["flows_created"] = flows_created;
    j["flows_retired"] = flows_retired;
    j["cache_high_watermark"] = cache_high_watermark;
    j["packets_per_flow"] = packets_per_flow;
    j["end_reason"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : by_end_reason) j["end_reason"][k] = v;
    j["disposition"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : by_disposition) j["disposition"][k] = v;
    j["boundary_gaps"] = nlohmann::ordered_json::array();
    for (const auto& g : boundary_gaps) {
        j["boundary_gaps"].push_back({{"file_index", g.file_index},
                                      {"gap_us", g.gap_us},
                                      {"negative", g.negative}});
    }
    j["anomaly"] = {{"syn_after_data", anomaly_syn_after_data},
                    {"flag_after_fin", anomaly_flag_after_fin},
                    {"backwards_timestamp", anomaly_backwards_timestamp}};
    j["label_errors"] = label_errors;
    return j.dump(2);
}

}  // namespace flowrec
