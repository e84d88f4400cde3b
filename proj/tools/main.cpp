#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>

#include <CLI11.hpp>

#include "flowrec/composition.hpp"
#include "flowrec/labels.hpp"
#include "flowrec/pipeline.hpp"
#include "flowrec/symbols.hpp"
#include "flowrec/synth.hpp"

namespace {

using namespace flowrec;

int64_t to_us(double seconds) {
    return static_cast<int64_t>(std::llround(seconds * 1e6));
}

std::vector<std::string> load_column_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open column list: " + path);
    std::vector<std::string> columns;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        size_t a = line.find_first_not_of(" \t\r");
        if (a == std::string::npos) continue;
        size_t b = line.find_last_not_of(" \t\r");
        columns.push_back(line.substr(a, b - a + 1));
    }
    return columns;
}

void print_phase_report(const PhaseReport& report) {
    std::printf("first_packet_ts: %lld\n", static_cast<long long>(report.first_packet_ts));
    std::printf("last_packet_ts: %lld\n", static_cast<long long>(report.last_packet_ts));
    if (report.steady_start_ts) {
        std::printf("steady_start_ts: %lld\n", static_cast<long long>(*report.steady_start_ts));
        std::printf("steady_end_ts: %lld\n", static_cast<long long>(*report.steady_end_ts));
    } else {
        std::printf("steady_state: none detected\n");
    }
    std::printf("uninitialised_flow_fraction: %.4f\n", report.uninitialised_flow_fraction);
    std::printf("unterminated_flow_fraction: %.4f\n", report.unterminated_flow_fraction);
    std::printf("max_concurrent_flows: %llu\n",
                static_cast<unsigned long long>(report.max_concurrent_flows));
    std::printf("max_concurrent_ts: %lld\n", static_cast<long long>(report.max_concurrent_ts));
}

struct TimeoutFlags {
    double idle_tcp = 300.0, idle_udp = 120.0, fin_wait = 10.0, rst_linger = 1.0;
    double active = 86400.0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--idle-tcp", idle_tcp, "TCP idle timeout, seconds")
            ->capture_default_str();
        cmd->add_option("--idle-udp", idle_udp, "UDP and other-IP idle timeout, seconds")
            ->capture_default_str();
        cmd->add_option("--fin-wait", fin_wait, "post-FIN wait period, seconds")
            ->capture_default_str();
        cmd->add_option("--rst-linger", rst_linger, "post-RST linger, seconds")
            ->capture_default_str();
        cmd->add_option("--active", active, "active timeout, seconds")->capture_default_str();
    }

    Timeouts resolve() const {
        return {to_us(idle_tcp), to_us(idle_udp), to_us(fin_wait), to_us(rst_linger),
                to_us(active)};
    }
};

int cmd_extract(const RunConfig& config) {
    auto result = run_extraction(config);
    std::fputs(result.diagnostics.to_text().c_str(), stdout);
    std::printf("rows_written: %llu\n", static_cast<unsigned long long>(result.rows_written));
    for (const auto& d : result.correlation.dropped) {
        if (d.against.empty()) {
            std::printf("correlation.dropped: %s (zero variance)\n", d.name.c_str());
        } else {
            std::printf("correlation.dropped: %s (r=%.4f with %s)\n", d.name.c_str(), d.r,
                        d.against.c_str());
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Flow record recovery toolkit: turns packet traces into "
                 "labelled bidirectional flow datasets"};
    app.require_subcommand(1);

    // extract
    auto* extract = app.add_subcommand("extract", "PCAPs -> flow CSV + diagnostics");
    RunConfig config;
    TimeoutFlags extract_timeouts;
    std::string sort_name = "start-time", drop_name = "keep-all";
    std::string columns_file;
    double correlation = 0.0;
    std::vector<uint16_t> reversed_ports;
    bool no_inference = false;
    double steady_window = 60.0, steady_threshold = 0.9;
    extract->add_option("--in", config.inputs, "input PCAP, repeatable, processed in order")
        ->required();
    extract->add_option("--out", config.flow_out, "flow CSV output path")->required();
    extract->add_option("--diagnostics", config.diagnostics_out, "diagnostics JSON output path");
    extract->add_option("--symbols", config.symbols_out, "symbol sequence output path");
    extract->add_option("--sort", sort_name, "row order: start-time | retirement")
        ->capture_default_str();
    extract
        ->add_option("--drop", drop_name,
                     "keep-all | drop-uninitialised | drop-unterminated | drop-both")
        ->capture_default_str();
    extract_timeouts.attach(extract);
    extract->add_flag("--no-direction-inference", no_inference,
                      "keep first-packet orientation instead of inferring the initiator");
    extract->add_option("--reversed-port", reversed_ports,
                        "service port where the server initiates (default 20, 989)");
    extract->add_option("--cidrs", config.cidr_file, "local networks file for orientation");
    extract->add_option("--columns", columns_file, "file naming the columns to export");
    extract->add_option("--correlation", correlation,
                        "drop numeric columns with pairwise |r| at or above this threshold");
    extract->add_option("--steady-window", steady_window, "steady-state window, seconds")
        ->capture_default_str();
    extract->add_option("--steady-threshold", steady_threshold, "steady-state initiation ratio")
        ->capture_default_str();

    // labels
    auto* labels = app.add_subcommand("labels", "flow CSV + legacy CSV -> labelled CSV");
    std::string labels_flows, labels_legacy, labels_map, labels_out, labels_unmatched;
    std::string default_label = "normal";
    MatchTolerance tolerance;
    double ts_tol = 5.0, dur_tol_abs = 1.0;
    labels->add_option("--flows", labels_flows, "recovered flow CSV")->required();
    labels->add_option("--legacy", labels_legacy, "legacy labelled dataset CSV")->required();
    labels->add_option("--map", labels_map, "column mapping for the legacy dataset")->required();
    labels->add_option("--out", labels_out, "labelled flow CSV output")->required();
    labels->add_option("--unmatched", labels_unmatched, "unmatched signatures CSV output");
    labels->add_option("--default", default_label, "label for unmatched flows")
        ->capture_default_str();
    labels->add_option("--ts-tolerance", ts_tol, "timestamp tolerance, seconds")
        ->capture_default_str();
    labels->add_option("--duration-tolerance", dur_tol_abs, "duration tolerance floor, seconds")
        ->capture_default_str();
    labels
        ->add_option("--duration-tolerance-frac", tolerance.duration_tolerance_frac,
                     "relative duration tolerance")
        ->capture_default_str();
    labels->add_option("--threshold", tolerance.score_threshold, "minimum match score")
        ->capture_default_str();

    // analyze
    auto* analyze = app.add_subcommand("analyze", "flow CSV -> phase report + diagnostics");
    std::string analyze_flows;
    double analyze_window = 60.0, analyze_threshold = 0.9;
    analyze->add_option("--flows", analyze_flows, "recovered flow CSV")->required();
    analyze->add_option("--window", analyze_window, "steady-state window, seconds")
        ->capture_default_str();
    analyze->add_option("--threshold", analyze_threshold, "steady-state initiation ratio")
        ->capture_default_str();

    // symbols
    auto* symbols = app.add_subcommand("symbols", "PCAPs -> per-flow flag token sequences");
    std::vector<std::string> symbols_in;
    std::string symbols_out;
    TimeoutFlags symbols_timeouts;
    symbols->add_option("--in", symbols_in, "input PCAP, repeatable")->required();
    symbols->add_option("--out", symbols_out, "symbol file output")->required();
    symbols_timeouts.attach(symbols);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "scenario -> PCAP + ground truth");
    std::string scenario_file, synth_out, truth_out;
    synth_cmd->add_option("--scenario", scenario_file, "scenario description file")->required();
    synth_cmd->add_option("--out", synth_out, "PCAP output path")->required();
    synth_cmd->add_option("--truth", truth_out, "ground truth JSON output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e);
        return 0;
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (extract->parsed()) {
            config.timeouts = extract_timeouts.resolve();
            config.infer_direction = !no_inference;
            if (!reversed_ports.empty()) {
                config.reversed_service_ports.clear();
                config.reversed_service_ports.insert(reversed_ports.begin(),
                                                     reversed_ports.end());
            }
            if (sort_name == "start-time") config.sort = SortMode::ByStartTime;
            else if (sort_name == "retirement") config.sort = SortMode::ByRetirement;
            else throw std::invalid_argument("unknown sort mode: " + sort_name);
            auto drop = parse_drop_policy(drop_name);
            if (!drop) throw std::invalid_argument("unknown drop policy: " + drop_name);
            config.drop = *drop;
            if (!columns_file.empty()) config.feature_subset = load_column_list(columns_file);
            if (correlation > 0.0) config.correlation_threshold = correlation;
            config.steady_window_us = to_us(steady_window);
            config.steady_ratio_threshold = steady_threshold;
            return cmd_extract(config);
        }
        if (labels->parsed()) {
            tolerance.ts_tolerance_us = to_us(ts_tol);
            tolerance.duration_tolerance_abs_us = to_us(dur_tol_abs);
            auto rows = read_flow_file(labels_flows);
            auto legacy = read_csv(labels_legacy);
            auto map = LegacyColumnMap::load(labels_map);
            apply_default_labels(rows, default_label);
            auto extraction = extract_signatures(legacy, map, default_label);
            auto report = reapply_signatures(rows, extraction.signatures, tolerance,
                                             default_label);
            write_flow_file(rows, labels_out, SortMode::ByStartTime);
            if (!labels_unmatched.empty()) {
                write_unmatched_csv(report.unmatched, labels_unmatched);
            }
            std::printf("legacy_rows: %llu\n",
                        static_cast<unsigned long long>(extraction.rows_total));
            std::printf("legacy_rows_default: %llu\n",
                        static_cast<unsigned long long>(extraction.rows_default));
            std::printf("legacy_rows_unparseable: %llu\n",
                        static_cast<unsigned long long>(extraction.unparseable.size()));
            std::printf("signatures: %llu\n",
                        static_cast<unsigned long long>(extraction.signatures.size()));
            std::printf("relabelled: %llu\n", static_cast<unsigned long long>(report.relabelled));
            std::printf("conflicts: %llu\n", static_cast<unsigned long long>(report.conflicts));
            std::printf("unmatched: %llu\n",
                        static_cast<unsigned long long>(report.unmatched.size()));
            return 0;
        }
        if (analyze->parsed()) {
            auto rows = read_flow_file(analyze_flows);
            auto report = detect_steady_state(flow_intervals(rows), to_us(analyze_window),
                                              analyze_threshold);
            print_phase_report(report);
            return 0;
        }
        if (symbols->parsed()) {
            RunConfig sym_config;
            sym_config.inputs = symbols_in;
            sym_config.symbols_out = symbols_out;
            sym_config.timeouts = symbols_timeouts.resolve();
            auto result = run_extraction(sym_config);
            std::printf("flows: %llu\n", static_cast<unsigned long long>(result.rows.size()));
            return 0;
        }
        if (synth_cmd->parsed()) {
            auto scenario = parse_scenario_file(scenario_file);
            auto result = synth(scenario);
            write_pcap(result.packets, synth_out);
            if (!truth_out.empty()) {
                std::ofstream out(truth_out, std::ios::trunc);
                if (!out) throw IoError("cannot open for writing: " + truth_out);
                out << ground_truth_json(result.truth) << "\n";
            }
            std::printf("packets: %llu\n",
                        static_cast<unsigned long long>(result.packets.size()));
            std::printf("flows: %llu\n", static_cast<unsigned long long>(result.truth.size()));
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
