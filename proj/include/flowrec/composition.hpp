#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flowrec/features.hpp"
#include "flowrec/flow.hpp"
#include "flowrec/pcap.hpp"

namespace flowrec {

// Lifetime of one retired flow, for composition analytics.
struct FlowInterval {
    int64_t start_ts = 0;
    int64_t end_ts = 0;
    bool initiated = false;   // initiation exchange observed
    bool terminated = false;  // termination exchange observed
};

struct PhaseReport {
    int64_t first_packet_ts = 0;
    int64_t last_packet_ts = 0;
    std::optional<int64_t> steady_start_ts;
    std::optional<int64_t> steady_end_ts;
    double uninitialised_flow_fraction = 0.0;
    double unterminated_flow_fraction = 0.0;
    uint64_t max_concurrent_flows = 0;  // F_smax over the flow-lifetime curve
    int64_t max_concurrent_ts = 0;
};

struct DegenerateWindow : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Slides a window over trace time and finds the maximal span where the
// fraction of active flows with observed initiation stays at or above
// ratio_threshold. Also reports F_smax from the concurrency curve.
PhaseReport detect_steady_state(const std::vector<FlowInterval>& flows, int64_t window_us,
                                double ratio_threshold);

std::vector<FlowInterval> flow_intervals(const std::vector<FlowRecord>& flows);
std::vector<FlowInterval> flow_intervals(const std::vector<FeatureRow>& rows);

struct DiagnosticsReport {
    uint64_t packets_total = 0;    // IP packets admitted to the flow stage
    uint64_t packets_skipped = 0;  // non-IP or unsupported
    uint64_t fragments_skipped = 0;
    uint64_t malformed_records = 0;
    uint64_t backwards_timestamps = 0;
    uint64_t nano_truncated = 0;
    uint64_t late_packets_total = 0;
    uint64_t flows_created = 0;
    uint64_t flows_retired = 0;
    uint64_t cache_high_watermark = 0;
    double packets_per_flow = 0.0;  // reported, not asserted
    std::vector<std::pair<std::string, uint64_t>> by_end_reason;
    std::vector<std::pair<std::string, uint64_t>> by_disposition;
    std::vector<BoundaryGap> boundary_gaps;
    uint64_t anomaly_syn_after_data = 0;
    uint64_t anomaly_flag_after_fin = 0;
    uint64_t anomaly_backwards_timestamp = 0;
    uint64_t label_errors = 0;

    std::string to_text() const;  // key: value lines
    std::string to_json() const;  // same keys, machine readable
};

DiagnosticsReport build_diagnostics(const ReaderStats& reader_stats,
                                    const std::vector<BoundaryGap>& gaps, const FlowCache& cache,
                                    uint64_t label_errors = 0);

}  // namespace flowrec
