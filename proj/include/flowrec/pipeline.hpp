#pragma once

#include <optional>
#include <string>
#include <vector>

#include "flowrec/composition.hpp"
#include "flowrec/features.hpp"
#include "flowrec/flow.hpp"
#include "flowrec/pcap.hpp"

namespace flowrec {

// Export-time filtering only; the cache always processes the full trace so
// diagnostics keep counting dropped classes.
enum class DropPolicy { KeepAll, DropUninitialised, DropUnterminated, DropBoth };

std::string drop_policy_name(DropPolicy p);
std::optional<DropPolicy> parse_drop_policy(const std::string& text);

bool keep_row(const FeatureRow& row, DropPolicy policy);

struct RunConfig {
    std::vector<std::string> inputs;  // ordered PCAP paths, processed as one stream
    std::string flow_out;             // empty skips the flow CSV
    std::string diagnostics_out;      // empty skips the diagnostics file
    std::string symbols_out;          // empty skips the symbol file
    Timeouts timeouts;
    SortMode sort = SortMode::ByStartTime;
    DropPolicy drop = DropPolicy::KeepAll;
    int64_t steady_window_us = 60'000'000;
    double steady_ratio_threshold = 0.9;
    bool infer_direction = true;
    std::set<uint16_t> reversed_service_ports = kDefaultReversedServicePorts;
    std::string cidr_file;                    // local networks for orientation
    std::vector<std::string> feature_subset;  // empty keeps every column
    std::optional<double> correlation_threshold;

    void validate() const;  // throws std::invalid_argument
};

struct ExtractionResult {
    std::vector<FlowRecord> flows;  // every retired flow, retirement order
    std::vector<FeatureRow> rows;   // same flows, finalized
    ReaderStats reader_stats;
    std::vector<BoundaryGap> gaps;
    DiagnosticsReport diagnostics;
    uint64_t rows_written = 0;
    CorrelationFilterResult correlation;  // populated when a threshold is set
};

ExtractionResult run_extraction(const RunConfig& config);

}  // namespace flowrec
