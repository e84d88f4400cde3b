#include "flowrec/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "flowrec/symbols.hpp"

namespace flowrec {

std::string drop_policy_name(DropPolicy p) {
    switch (p) {
        case DropPolicy::KeepAll: return "keep-all";
        case DropPolicy::DropUninitialised: return "drop-uninitialised";
        case DropPolicy::DropUnterminated: return "drop-unterminated";
        case DropPolicy::DropBoth: return "drop-both";
    }
    return "keep-all";
}

std::optional<DropPolicy> parse_drop_policy(const std::string& text) {
    if (text == "keep-all") return DropPolicy::KeepAll;
    if (text == "drop-uninitialised" || text == "uninitialised") return DropPolicy::DropUninitialised;
    if (text == "drop-unterminated" || text == "unterminated") return DropPolicy::DropUnterminated;
    if (text == "drop-both" || text == "both") return DropPolicy::DropBoth;
    return std::nullopt;
}

bool keep_row(const FeatureRow& row, DropPolicy policy) {
    bool initiated = row.disposition == Disposition::Complete ||
                     row.disposition == Disposition::Unterminated;
    bool terminated = row.end_reason == EndReason::FinComplete || row.end_reason == EndReason::Rst;
    switch (policy) {
        case DropPolicy::KeepAll: return true;
        case DropPolicy::DropUninitialised: return initiated;
        case DropPolicy::DropUnterminated: return terminated;
        case DropPolicy::DropBoth: return initiated && terminated;
    }
    return true;
}

void RunConfig::validate() const {
    if (inputs.empty()) throw std::invalid_argument("at least one input PCAP is required");
    auto positive = [](int64_t v, const char* what) {
        if (v <= 0) throw std::invalid_argument(std::string(what) + " must be positive");
    };
    positive(timeouts.idle_tcp_us, "idle tcp timeout");
    positive(timeouts.idle_udp_us, "idle udp timeout");
    positive(timeouts.fin_wait_us, "fin-wait period");
    positive(timeouts.rst_linger_us, "rst linger");
    positive(timeouts.active_us, "active timeout");
    positive(steady_window_us, "steady-state window");
    if (!(steady_ratio_threshold > 0.0 && steady_ratio_threshold <= 1.0)) {
        throw std::invalid_argument("steady-state ratio threshold must be in (0, 1]");
    }
    if (correlation_threshold && !(*correlation_threshold > 0.0 && *correlation_threshold <= 1.0)) {
        throw std::invalid_argument("correlation threshold must be in (0, 1]");
    }
}

ExtractionResult run_extraction(const RunConfig& config) {
    config.validate();

    CacheConfig cache_config;
    cache_config.timeouts = config.timeouts;
    cache_config.infer_direction = config.infer_direction;
    cache_config.reversed_service_ports = config.reversed_service_ports;
    if (!config.cidr_file.empty()) cache_config.local_cidrs = load_cidr_file(config.cidr_file);

    ExtractionResult result;
    FlowCache cache(cache_config);
    TraceReader reader(config.inputs);
    while (auto pkt = reader.next()) {
        cache.admit_packet(*pkt);
    }
    cache.finalize_all();

    result.reader_stats = reader.stats();
    result.gaps = reader.boundary_gaps();
    result.diagnostics = build_diagnostics(result.reader_stats, result.gaps, cache);
    result.flows = cache.take_retired();

    result.rows.reserve(result.flows.size());
    for (const auto& f : result.flows) result.rows.push_back(finalize_row(f));

    if (!config.symbols_out.empty()) {
        export_symbol_sequences(result.flows, config.symbols_out);
    }

    if (!config.flow_out.empty()) {
        std::vector<FeatureRow> kept;
        kept.reserve(result.rows.size());
        for (const auto& r : result.rows) {
            if (keep_row(r, config.drop)) kept.push_back(r);
        }

        std::vector<std::string> columns = config.feature_subset;
        if (config.correlation_threshold) {
            result.correlation = filter_correlated(kept, *config.correlation_threshold);
            if (columns.empty()) columns = flow_file_columns();
            std::erase_if(columns, [&](const std::string& c) {
                for (const auto& d : result.correlation.dropped) {
                    if (d.name == c) return true;
                }
                return false;
            });
        }
        if (columns.empty()) {
            result.rows_written = write_flow_file(kept, config.flow_out, config.sort);
        } else {
            result.rows_written =
                write_flow_file_subset(kept, config.flow_out, config.sort, columns);
        }
    }

    if (!config.diagnostics_out.empty()) {
        std::ofstream out(config.diagnostics_out, std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + config.diagnostics_out);
        out << result.diagnostics.to_json() << "\n";
    }
    return result;
}

}  // namespace flowrec
