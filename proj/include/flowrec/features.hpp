#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "flowrec/flow.hpp"

namespace flowrec {

struct DirSummary {
    uint64_t pkts = 0;
    uint64_t bytes = 0;
    uint64_t payload_bytes = 0;
    std::optional<double> len_min, len_max, len_mean, len_std;  // defined when pkts >= 1
    std::optional<double> iat_min, iat_max, iat_mean, iat_std;  // defined when pkts >= 2
};

// Finalized, exportable per-flow feature vector. src/dst are rendered in
// initiator -> responder orientation.
struct FeatureRow {
    uint64_t flow_id = 0;
    int64_t start_ts = 0;
    int64_t end_ts = 0;
    int64_t duration_us = 0;
    uint8_t proto = 0;
    IpAddr src_ip, dst_ip;
    uint16_t src_port = 0, dst_port = 0;
    DirectionMethod direction_method = DirectionMethod::DefaultForward;
    Orientation orientation = Orientation::Unknown;
    DirSummary fwd, bwd;
    FlagCounts flags_fwd, flags_bwd;
    double entropy_fwd = 0.0, entropy_bwd = 0.0;
    bool truncated = false;
    Disposition disposition = Disposition::PartialBoth;
    EndReason end_reason = EndReason::None;
    uint64_t late_packets = 0;
    std::string label;
};

FeatureRow finalize_row(const FlowRecord& flow);

enum class SortMode { ByStartTime, ByRetirement };

// Fixed flow-file schema, in column order.
const std::vector<std::string>& flow_file_columns();

// Writes the flow CSV; returns the row count written.
uint64_t write_flow_file(const std::vector<FeatureRow>& rows, const std::string& path,
                         SortMode sort);

// Strict reader for the flow-file schema above.
std::vector<FeatureRow> read_flow_file(const std::string& path);

struct InsufficientRows : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DroppedColumn {
    std::string name;
    std::string against;  // retained column it correlated with, empty for zero variance
    double r = 0.0;
};

struct CorrelationFilterResult {
    std::vector<std::string> retained;
    std::vector<DroppedColumn> dropped;
};

// Names of the numeric feature columns considered by the correlation filter,
// in header order. Undefined statistics are treated as 0.
const std::vector<std::string>& numeric_feature_columns();
double numeric_feature_value(const FeatureRow& row, const std::string& column);

// Greedy Pearson-correlation filter: zero-variance columns are dropped
// first, then a column is dropped if |r| with any retained earlier column
// reaches the threshold.
CorrelationFilterResult filter_correlated(const std::vector<FeatureRow>& rows, double threshold);

// Restricts a flow file to a named column subset ("small data" export).
// Unknown names throw std::invalid_argument.
uint64_t write_flow_file_subset(const std::vector<FeatureRow>& rows, const std::string& path,
                                SortMode sort, const std::vector<std::string>& columns);

}  // namespace flowrec
