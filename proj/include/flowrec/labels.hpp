#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "flowrec/csv.hpp"
#include "flowrec/features.hpp"

namespace flowrec {

// Label-recovery tuple. Address and port pairs are stored unordered
// (canonically sorted), which discards the legacy tool's direction choice.
struct FlowSignature {
    int64_t ts_us = 0;
    int64_t duration_us = 0;
    uint8_t proto = 0;
    IpAddr addr_lo, addr_hi;
    uint16_t port_lo = 0, port_hi = 0;
    std::string label;
};

struct MatchTolerance {
    int64_t ts_tolerance_us = 5'000'000;
    int64_t duration_tolerance_abs_us = 1'000'000;
    double duration_tolerance_frac = 0.10;  // relative to the signature duration
    double score_threshold = 0.5;
    double weight_ts = 0.6;
    double weight_duration = 0.4;

    int64_t duration_tolerance_for(int64_t sig_duration_us) const;
};

FlowSignature signature_from_row(const FeatureRow& row);

// Step 1 of label recovery: every row gets the default label, overwriting
// anything already present.
void apply_default_labels(std::vector<FeatureRow>& rows, const std::string& default_label);

struct MissingColumn : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Column mapping for a legacy flow dataset, loaded from a key=value file.
struct LegacyColumnMap {
    std::string timestamp, duration, proto;
    std::string src_ip, src_port, dst_ip, dst_port;
    std::string label;
    std::string ts_format = "epoch";    // epoch | epoch_ms | epoch_us | pattern:<strptime>
    int utc_offset_minutes = 0;         // correction for offset legacy timestamps
    std::string duration_unit = "s";    // s | ms | us

    static LegacyColumnMap load(const std::string& path);
};

struct UnparseableRow {
    size_t row_index = 0;  // 0-based data row
    std::string reason;
};

struct SignatureExtraction {
    std::vector<FlowSignature> signatures;
    std::vector<UnparseableRow> unparseable;  // collected, not fatal
    uint64_t rows_total = 0;
    uint64_t rows_default = 0;
};

// Step 2: one signature per non-default-labelled legacy row.
SignatureExtraction extract_signatures(const CsvTable& legacy, const LegacyColumnMap& map,
                                       const std::string& default_label);

struct UnmatchedSignature {
    FlowSignature signature;
    std::optional<uint64_t> nearest_flow_id;  // nearest-miss context
    double nearest_score = 0.0;
};

struct SignatureMatchReport {
    uint64_t relabelled = 0;
    uint64_t conflicts = 0;  // best candidate already carried a non-default label
    std::vector<UnmatchedSignature> unmatched;
};

// Step 3: candidate search on (proto, unordered address pair, unordered port
// pair), then a weighted timestamp/duration score; the label is applied to
// the best candidate only when the score reaches the threshold.
SignatureMatchReport reapply_signatures(std::vector<FeatureRow>& rows,
                                        const std::vector<FlowSignature>& sigs,
                                        const MatchTolerance& tol,
                                        const std::string& default_label);

uint64_t write_unmatched_csv(const std::vector<UnmatchedSignature>& unmatched,
                             const std::string& path);

}  // namespace flowrec
