#include "flowrec/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <unordered_map>

#include "flowrec/csv.hpp"

namespace flowrec {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string fmt_u64(uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%llu", static_cast<unsigned long long>(v));
    return buf;
}

std::string fmt_i64(int64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(v));
    return buf;
}

std::string opt_cell(const std::optional<double>& v) {
    return v ? fmt_double(*v) : std::string();
}

DirSummary summarize(const DirStats& s) {
    DirSummary d;
    d.pkts = s.packets;
    d.bytes = s.bytes;
    d.payload_bytes = s.payload_bytes;
    if (s.packets >= 1) {
        d.len_min = s.len_min;
        d.len_max = s.len_max;
        d.len_mean = s.len_mean;
        d.len_std = s.len_std();
    }
    if (s.packets >= 2) {
        d.iat_min = s.iat_min;
        d.iat_max = s.iat_max;
        d.iat_mean = s.iat_mean;
        d.iat_std = s.iat_std();
    }
    return d;
}

}  // namespace

FeatureRow finalize_row(const FlowRecord& flow) {
    FeatureRow r;
    r.flow_id = flow.flow_id;
    r.start_ts = flow.start_ts;
    r.end_ts = flow.last_ts;
    r.duration_us = flow.last_ts - flow.start_ts;
    r.proto = flow.key.proto;
    // initiator -> responder orientation (flipped from the stored key when
    // the direction decision was reverse)
    if (flow.initiator_is_a) {
        r.src_ip = flow.key.ip_a;
        r.src_port = flow.key.port_a;
        r.dst_ip = flow.key.ip_b;
        r.dst_port = flow.key.port_b;
    } else {
        r.src_ip = flow.key.ip_b;
        r.src_port = flow.key.port_b;
        r.dst_ip = flow.key.ip_a;
        r.dst_port = flow.key.port_a;
    }
    r.direction_method = flow.direction_method;
    r.orientation = flow.orientation;
    r.fwd = summarize(flow.fwd);
    r.bwd = summarize(flow.bwd);
    r.flags_fwd = flow.flags_fwd;
    r.flags_bwd = flow.flags_bwd;
    r.entropy_fwd = shannon_entropy(flow.fwd.byte_hist);
    r.entropy_bwd = shannon_entropy(flow.bwd.byte_hist);
    r.truncated = flow.truncated;
    r.disposition = flow.disposition;
    r.end_reason = flow.end_reason;
    r.late_packets = flow.late_packets;
    r.label = flow.label;
    return r;
}

const std::vector<std::string>& flow_file_columns() {
    static const std::vector<std::string> kColumns = {
        "flow_id", "start_ts", "end_ts", "duration_us", "proto", "src_ip", "src_port",
        "dst_ip", "dst_port", "direction_method", "orientation", "fwd_pkts", "bwd_pkts",
        "fwd_bytes", "bwd_bytes", "fwd_payload_bytes", "bwd_payload_bytes", "fwd_len_min",
        "fwd_len_max", "fwd_len_mean", "fwd_len_std", "bwd_len_min", "bwd_len_max",
        "bwd_len_mean", "bwd_len_std", "fwd_iat_min", "fwd_iat_max", "fwd_iat_mean",
        "fwd_iat_std", "bwd_iat_min", "bwd_iat_max", "bwd_iat_mean", "bwd_iat_std",
        "syn_fwd", "syn_bwd", "ack_fwd", "ack_bwd", "fin_fwd", "fin_bwd", "rst_fwd",
        "rst_bwd", "psh_fwd", "psh_bwd", "urg_fwd", "urg_bwd", "entropy_fwd", "entropy_bwd",
        "truncated", "disposition", "end_reason", "late_packets", "label"};
    return kColumns;
}

namespace {

std::vector<std::string> render_cells(const FeatureRow& r) {
    std::vector<std::string> c;
    c.reserve(flow_file_columns().size());
    c.push_back(fmt_u64(r.flow_id));
    c.push_back(fmt_i64(r.start_ts));
    c.push_back(fmt_i64(r.end_ts));
    c.push_back(fmt_i64(r.duration_us));
    c.push_back(proto_name(r.proto));
    c.push_back(r.src_ip.to_string());
    c.push_back(fmt_u64(r.src_port));
    c.push_back(r.dst_ip.to_string());
    c.push_back(fmt_u64(r.dst_port));
    c.push_back(direction_method_name(r.direction_method));
    c.push_back(orientation_name(r.orientation));
    c.push_back(fmt_u64(r.fwd.pkts));
    c.push_back(fmt_u64(r.bwd.pkts));
    c.push_back(fmt_u64(r.fwd.bytes));
    c.push_back(fmt_u64(r.bwd.bytes));
    c.push_back(fmt_u64(r.fwd.payload_bytes));
    c.push_back(fmt_u64(r.bwd.payload_bytes));
    c.push_back(opt_cell(r.fwd.len_min));
    c.push_back(opt_cell(r.fwd.len_max));
    c.push_back(opt_cell(r.fwd.len_mean));
    c.push_back(opt_cell(r.fwd.len_std));
    c.push_back(opt_cell(r.bwd.len_min));
    c.push_back(opt_cell(r.bwd.len_max));
    c.push_back(opt_cell(r.bwd.len_mean));
    c.push_back(opt_cell(r.bwd.len_std));
    c.push_back(opt_cell(r.fwd.iat_min));
    c.push_back(opt_cell(r.fwd.iat_max));
    c.push_back(opt_cell(r.fwd.iat_mean));
    c.push_back(opt_cell(r.fwd.iat_std));
    c.push_back(opt_cell(r.bwd.iat_min));
    c.push_back(opt_cell(r.bwd.iat_max));
    c.push_back(opt_cell(r.bwd.iat_mean));
    c.push_back(opt_cell(r.bwd.iat_std));
    c.push_back(fmt_u64(r.flags_fwd.syn));
    c.push_back(fmt_u64(r.flags_bwd.syn));
    c.push_back(fmt_u64(r.flags_fwd.ack));
    c.push_back(fmt_u64(r.flags_bwd.ack));
    c.push_back(fmt_u64(r.flags_fwd.fin));
    c.push_back(fmt_u64(r.flags_bwd.fin));
    c.push_back(fmt_u64(r.flags_fwd.rst));
    c.push_back(fmt_u64(r.flags_bwd.rst));
    c.push_back(fmt_u64(r.flags_fwd.psh));
    c.push_back(fmt_u64(r.flags_bwd.psh));
    c.push_back(fmt_u64(r.flags_fwd.urg));
    c.push_back(fmt_u64(r.flags_bwd.urg));
    c.push_back(fmt_double(r.entropy_fwd));
    c.push_back(fmt_double(r.entropy_bwd));
    c.push_back(r.truncated ? "1" : "0");
    c.push_back(disposition_name(r.disposition));
    c.push_back(end_reason_name(r.end_reason));
    c.push_back(fmt_u64(r.late_packets));
    c.push_back(r.label);
    return c;
}

std::vector<const FeatureRow*> sorted_view(const std::vector<FeatureRow>& rows, SortMode sort) {
    std::vector<const FeatureRow*> view;
    view.reserve(rows.size());
    for (const auto& r : rows) view.push_back(&r);
    if (sort == SortMode::ByStartTime) {
        std::stable_sort(view.begin(), view.end(), [](const FeatureRow* a, const FeatureRow* b) {
            if (a->start_ts != b->start_ts) return a->start_ts < b->start_ts;
            return a->flow_id < b->flow_id;
        });
    }
    return view;
}

void write_csv_line(std::ofstream& out, const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); i++) {
        if (i > 0) out << ',';
        out << csv_escape(cells[i]);
    }
    out << '\n';
}

}  // namespace

uint64_t write_flow_file(const std::vector<FeatureRow>& rows, const std::string& path,
                         SortMode sort) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    write_csv_line(out, flow_file_columns());
    auto view = sorted_view(rows, sort);
    for (const auto* r : view) write_csv_line(out, render_cells(*r));
    if (!out) throw std::runtime_error("write failed: " + path);
    return view.size();
}

uint64_t write_flow_file_subset(const std::vector<FeatureRow>& rows, const std::string& path,
                                SortMode sort, const std::vector<std::string>& columns) {
    const auto& all = flow_file_columns();
    std::vector<size_t> idx;
    for (const auto& name : columns) {
        auto it = std::find(all.begin(), all.end(), name);
        if (it == all.end()) throw std::invalid_argument("unknown flow column: " + name);
        idx.push_back(static_cast<size_t>(it - all.begin()));
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    write_csv_line(out, columns);
    auto view = sorted_view(rows, sort);
    for (const auto* r : view) {
        auto cells = render_cells(*r);
        std::vector<std::string> sub;
        sub.reserve(idx.size());
        for (size_t i : idx) sub.push_back(cells[i]);
        write_csv_line(out, sub);
    }
    if (!out) throw std::runtime_error("write failed: " + path);
    return view.size();
}

namespace {

std::optional<double> parse_opt(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return std::stod(s);
}

DirectionMethod parse_direction_method(const std::string& s) {
    if (s == "syn-observed") return DirectionMethod::SynObserved;
    if (s == "synack-observed") return DirectionMethod::SynackObserved;
    if (s == "port-inferred") return DirectionMethod::PortInferred;
    if (s == "ftp-special") return DirectionMethod::FtpSpecial;
    return DirectionMethod::DefaultForward;
}

Orientation parse_orientation(const std::string& s) {
    if (s == "inbound") return Orientation::Inbound;
    if (s == "outbound") return Orientation::Outbound;
    if (s == "internal") return Orientation::Internal;
    if (s == "external") return Orientation::External;
    return Orientation::Unknown;
}

Disposition parse_disposition(const std::string& s) {
    if (s == "complete") return Disposition::Complete;
    if (s == "uninitialised") return Disposition::Uninitialised;
    if (s == "unterminated") return Disposition::Unterminated;
    return Disposition::PartialBoth;
}

EndReason parse_end_reason(const std::string& s) {
    if (s == "fin-complete") return EndReason::FinComplete;
    if (s == "rst") return EndReason::Rst;
    if (s == "idle-timeout") return EndReason::IdleTimeout;
    if (s == "active-timeout") return EndReason::ActiveTimeout;
    if (s == "new-syn") return EndReason::NewSyn;
    if (s == "end-of-trace") return EndReason::EndOfTrace;
    return EndReason::None;
}

}  // namespace

std::vector<FeatureRow> read_flow_file(const std::string& path) {
    CsvTable t = read_csv(path);
    if (t.header != flow_file_columns()) {
        throw std::runtime_error("unexpected flow file schema: " + path);
    }
    std::vector<FeatureRow> rows;
    rows.reserve(t.rows.size());
    for (const auto& c : t.rows) {
        if (c.size() != t.header.size()) {
            throw std::runtime_error("short row in flow file: " + path);
        }
        FeatureRow r;
        size_t i = 0;
        r.flow_id = std::stoull(c[i++]);
        r.start_ts = std::stoll(c[i++]);
        r.end_ts = std::stoll(c[i++]);
        r.duration_us = std::stoll(c[i++]);
        r.proto = parse_proto(c[i++]).value_or(0);
        r.src_ip = IpAddr::parse(c[i++]).value_or(IpAddr{});
        r.src_port = static_cast<uint16_t>(std::stoul(c[i++]));
        r.dst_ip = IpAddr::parse(c[i++]).value_or(IpAddr{});
        r.dst_port = static_cast<uint16_t>(std::stoul(c[i++]));
        r.direction_method = parse_direction_method(c[i++]);
        r.orientation = parse_orientation(c[i++]);
        r.fwd.pkts = std::stoull(c[i++]);
        r.bwd.pkts = std::stoull(c[i++]);
        r.fwd.bytes = std::stoull(c[i++]);
        r.bwd.bytes = std::stoull(c[i++]);
        r.fwd.payload_bytes = std::stoull(c[i++]);
        r.bwd.payload_bytes = std::stoull(c[i++]);
        r.fwd.len_min = parse_opt(c[i++]);
        r.fwd.len_max = parse_opt(c[i++]);
        r.fwd.len_mean = parse_opt(c[i++]);
        r.fwd.len_std = parse_opt(c[i++]);
        r.bwd.len_min = parse_opt(c[i++]);
        r.bwd.len_max = parse_opt(c[i++]);
        r.bwd.len_mean = parse_opt(c[i++]);
        r.bwd.len_std = parse_opt(c[i++]);
        r.fwd.iat_min = parse_opt(c[i++]);
        r.fwd.iat_max = parse_opt(c[i++]);
        r.fwd.iat_mean = parse_opt(c[i++]);
        r.fwd.iat_std = parse_opt(c[i++]);
        r.bwd.iat_min = parse_opt(c[i++]);
        r.bwd.iat_max = parse_opt(c[i++]);
        r.bwd.iat_mean = parse_opt(c[i++]);
        r.bwd.iat_std = parse_opt(c[i++]);
        r.flags_fwd.syn = std::stoull(c[i++]);
        r.flags_bwd.syn = std::stoull(c[i++]);
        r.flags_fwd.ack = std::stoull(c[i++]);
        r.flags_bwd.ack = std::stoull(c[i++]);
        r.flags_fwd.fin = std::stoull(c[i++]);
        r.flags_bwd.fin = std::stoull(c[i++]);
        r.flags_fwd.rst = std::stoull(c[i++]);
        r.flags_bwd.rst = std::stoull(c[i++]);
        r.flags_fwd.psh = std::stoull(c[i++]);
        r.flags_bwd.psh = std::stoull(c[i++]);
        r.flags_fwd.urg = std::stoull(c[i++]);
        r.flags_bwd.urg = std::stoull(c[i++]);
        r.entropy_fwd = std::stod(c[i++]);
        r.entropy_bwd = std::stod(c[i++]);
        r.truncated = c[i++] == "1";
        r.disposition = parse_disposition(c[i++]);
        r.end_reason = parse_end_reason(c[i++]);
        r.late_packets = std::stoull(c[i++]);
        r.label = c[i++];
        rows.push_back(std::move(r));
    }
    return rows;
}

const std::vector<std::string>& numeric_feature_columns() {
    static const std::vector<std::string> kNumeric = [] {
        std::vector<std::string> v = {"duration_us", "src_port", "dst_port"};
        const auto& all = flow_file_columns();
        auto first = std::find(all.begin(), all.end(), "fwd_pkts");
        auto last = std::find(all.begin(), all.end(), "entropy_bwd");
        v.insert(v.end(), first, last + 1);
        v.push_back("late_packets");
        return v;
    }();
    return kNumeric;
}

double numeric_feature_value(const FeatureRow& r, const std::string& column) {
    static const std::unordered_map<std::string, std::function<double(const FeatureRow&)>> kGet = {
        {"duration_us", [](const FeatureRow& x) { return double(x.duration_us); }},
        {"src_port", [](const FeatureRow& x) { return double(x.src_port); }},
        {"dst_port", [](const FeatureRow& x) { return double(x.dst_port); }},
        {"fwd_pkts", [](const FeatureRow& x) { return double(x.fwd.pkts); }},
        {"bwd_pkts", [](const FeatureRow& x) { return double(x.bwd.pkts); }},
        {"fwd_bytes", [](const FeatureRow& x) { return double(x.fwd.bytes); }},
        {"bwd_bytes", [](const FeatureRow& x) { return double(x.bwd.bytes); }},
        {"fwd_payload_bytes", [](const FeatureRow& x) { return double(x.fwd.payload_bytes); }},
        {"bwd_payload_bytes", [](const FeatureRow& x) { return double(x.bwd.payload_bytes); }},
        {"fwd_len_min", [](const FeatureRow& x) { return x.fwd.len_min.value_or(0.0); }},
        {"fwd_len_max", [](const FeatureRow& x) { return x.fwd.len_max.value_or(0.0); }},
        {"fwd_len_mean", [](const FeatureRow& x) { return x.fwd.len_mean.value_or(0.0); }},
        {"fwd_len_std", [](const FeatureRow& x) { return x.fwd.len_std.value_or(0.0); }},
        {"bwd_len_min", [](const FeatureRow& x) { return x.bwd.len_min.value_or(0.0); }},
        {"bwd_len_max", [](const FeatureRow& x) { return x.bwd.len_max.value_or(0.0); }},
        {"bwd_len_mean", [](const FeatureRow& x) { return x.bwd.len_mean.value_or(0.0); }},
        {"bwd_len_std", [](const FeatureRow& x) { return x.bwd.len_std.value_or(0.0); }},
        {"fwd_iat_min", [](const FeatureRow& x) { return x.fwd.iat_min.value_or(0.0); }},
        {"fwd_iat_max", [](const FeatureRow& x) { return x.fwd.iat_max.value_or(0.0); }},
        {"fwd_iat_mean", [](const FeatureRow& x) { return x.fwd.iat_mean.value_or(0.0); }},
        {"fwd_iat_std", [](const FeatureRow& x) { return x.fwd.iat_std.value_or(0.0); }},
        {"bwd_iat_min", [](const FeatureRow& x) { return x.bwd.iat_min.value_or(0.0); }},
        {"bwd_iat_max", [](const FeatureRow& x) { return x.bwd.iat_max.value_or(0.0); }},
        {"bwd_iat_mean", [](const FeatureRow& x) { return x.bwd.iat_mean.value_or(0.0); }},
        {"bwd_iat_std", [](const FeatureRow& x) { return x.bwd.iat_std.value_or(0.0); }},
        {"syn_fwd", [](const FeatureRow& x) { return double(x.flags_fwd.syn); }},
        {"syn_bwd", [](const FeatureRow& x) { return double(x.flags_bwd.syn); }},
        {"ack_fwd", [](const FeatureRow& x) { return double(x.flags_fwd.ack); }},
        {"ack_bwd", [](const FeatureRow& x) { return double(x.flags_bwd.ack); }},
        {"fin_fwd", [](const FeatureRow& x) { return double(x.flags_fwd.fin); }},
        {"fin_bwd", [](const FeatureRow& x) { return double(x.flags_bwd.fin); }},
        {"rst_fwd", [](const FeatureRow& x) { return double(x.flags_fwd.rst); }},
        {"rst_bwd", [](const FeatureRow& x) { return double(x.flags_bwd.rst); }},
        {"psh_fwd", [](const FeatureRow& x) { return double(x.flags_fwd.psh); }},
        {"psh_bwd", [](const FeatureRow& x) { return double(x.flags_bwd.psh); }},
        {"urg_fwd", [](const FeatureRow& x) { return double(x.flags_fwd.urg); }},
        {"urg_bwd", [](const FeatureRow& x) { return double(x.flags_bwd.urg); }},
        {"entropy_fwd", [](const FeatureRow& x) { return x.entropy_fwd; }},
        {"entropy_bwd", [](const FeatureRow& x) { return x.entropy_bwd; }},
        {"late_packets", [](const FeatureRow& x) { return double(x.late_packets); }},
    };
    return kGet.at(column)(r);
}

CorrelationFilterResult filter_correlated(const std::vector<FeatureRow>& rows, double threshold) {
    if (rows.size() < 2) throw InsufficientRows("correlation filter needs at least 2 rows");
    if (!(threshold > 0.0 && threshold <= 1.0)) {
        throw std::invalid_argument("correlation threshold must be in (0, 1]");
    }
    const auto& names = numeric_feature_columns();
    size_t n = rows.size();
    std::vector<std::vector<double>> cols(names.size(), std::vector<double>(n));
    for (size_t j = 0; j < names.size(); j++) {
        for (size_t i = 0; i < n; i++) cols[j][i] = numeric_feature_value(rows[i], names[j]);
    }
    auto mean_of = [n](const std::vector<double>& v) {
        double s = 0;
        for (double x : v) s += x;
        return s / static_cast<double>(n);
    };
    std::vector<double> means(names.size()), vars(names.size());
    for (size_t j = 0; j < names.size(); j++) {
        means[j] = mean_of(cols[j]);
        double s = 0;
        for (double x : cols[j]) s += (x - means[j]) * (x - means[j]);
        vars[j] = s / static_cast<double>(n);
    }
    auto pearson = [&](size_t a, size_t b) {
        double cov = 0;
        for (size_t i = 0; i < n; i++) cov += (cols[a][i] - means[a]) * (cols[b][i] - means[b]);
        cov /= static_cast<double>(n);
        return cov / std::sqrt(vars[a] * vars[b]);
    };

    CorrelationFilterResult result;
    std::vector<size_t> retained_idx;
    for (size_t j = 0; j < names.size(); j++) {
        if (vars[j] == 0.0) {
            result.dropped.push_back({names[j], "", 0.0});  // zero variance
            continue;
        }
        bool drop = false;
        for (size_t k : retained_idx) {
            double r = pearson(k, j);
            if (std::fabs(r) >= threshold) {
                result.dropped.push_back({names[j], names[k], r});
                drop = true;
                break;
            }
        }
        if (!drop) {
            retained_idx.push_back(j);
            result.retained.push_back(names[j]);
        }
    }
    return result;
}

}  // namespace flowrec
