#include "flowrec/labels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <unordered_map>

namespace flowrec {

int64_t MatchTolerance::duration_tolerance_for(int64_t sig_duration_us) const {
    double rel = duration_tolerance_frac * static_cast<double>(sig_duration_us);
    return std::max<int64_t>(duration_tolerance_abs_us, static_cast<int64_t>(rel));
}

namespace {

void sort_pair(IpAddr& a, IpAddr& b) {
    if (b < a) std::swap(a, b);
}

}  // namespace

FlowSignature signature_from_row(const FeatureRow& row) {
    FlowSignature s;
    s.ts_us = row.start_ts;
    s.duration_us = row.duration_us;
    s.proto = row.proto;
    s.addr_lo = row.src_ip;
    s.addr_hi = row.dst_ip;
    sort_pair(s.addr_lo, s.addr_hi);
    s.port_lo = std::min(row.src_port, row.dst_port);
    s.port_hi = std::max(row.src_port, row.dst_port);
    s.label = row.label;
    return s;
}

void apply_default_labels(std::vector<FeatureRow>& rows, const std::string& default_label) {
    for (auto& r : rows) r.label = default_label;
}

LegacyColumnMap LegacyColumnMap::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open column map: " + path);
    LegacyColumnMap m;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            size_t a = s.find_first_not_of(" \t\r");
            if (a == std::string::npos) return std::string();
            size_t b = s.find_last_not_of(" \t\r");
            return s.substr(a, b - a + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key == "timestamp") m.timestamp = val;
        else if (key == "duration") m.duration = val;
        else if (key == "proto") m.proto = val;
        else if (key == "src_ip") m.src_ip = val;
        else if (key == "src_port") m.src_port = val;
        else if (key == "dst_ip") m.dst_ip = val;
        else if (key == "dst_port") m.dst_port = val;
        else if (key == "label") m.label = val;
        else if (key == "ts_format") m.ts_format = val;
        else if (key == "utc_offset_minutes") m.utc_offset_minutes = std::stoi(val);
        else if (key == "duration_unit") m.duration_unit = val;
    }
    return m;
}

namespace {

int64_t parse_legacy_ts(const std::string& text, const LegacyColumnMap& map) {
    int64_t us;
    if (map.ts_format == "epoch") {
        us = static_cast<int64_t>(std::llround(std::stod(text) * 1e6));
    } else if (map.ts_format == "epoch_ms") {
        us = static_cast<int64_t>(std::llround(std::stod(text) * 1e3));
    } else if (map.ts_format == "epoch_us") {
        us = std::stoll(text);
    } else if (map.ts_format.rfind("pattern:", 0) == 0) {
        std::tm tm{};
        std::string pattern = map.ts_format.substr(8);
        if (strptime(text.c_str(), pattern.c_str(), &tm) == nullptr) {
            throw std::invalid_argument("timestamp does not match pattern: " + text);
        }
        us = static_cast<int64_t>(timegm(&tm)) * 1'000'000;
    } else {
        throw std::invalid_argument("unknown ts_format: " + map.ts_format);
    }
    return us - static_cast<int64_t>(map.utc_offset_minutes) * 60 * 1'000'000;
}

int64_t parse_legacy_duration(const std::string& text, const LegacyColumnMap& map) {
    double v = std::stod(text);
    if (map.duration_unit == "s") return static_cast<int64_t>(std::llround(v * 1e6));
    if (map.duration_unit == "ms") return static_cast<int64_t>(std::llround(v * 1e3));
    return static_cast<int64_t>(std::llround(v));
}

uint16_t parse_port_strict(const std::string& text) {
    size_t pos = 0;
    unsigned long v = std::stoul(text, &pos, 10);
    if (pos != text.size() || v > 65535) {
        throw std::invalid_argument("bad port value: " + text);
    }
    return static_cast<uint16_t>(v);
}

}  // namespace

SignatureExtraction extract_signatures(const CsvTable& legacy, const LegacyColumnMap& map,
                                       const std::string& default_label) {
    auto need = [&](const std::string& name) {
        int c = legacy.column(name);
        if (c < 0) throw MissingColumn("legacy dataset lacks column: " + name);
        return static_cast<size_t>(c);
    };
    size_t c_ts = need(map.timestamp);
    size_t c_dur = need(map.duration);
    size_t c_proto = need(map.proto);
    size_t c_sip = need(map.src_ip);
    size_t c_sport = need(map.src_port);
    size_t c_dip = need(map.dst_ip);
    size_t c_dport = need(map.dst_port);
    size_t c_label = need(map.label);

    SignatureExtraction out;
    out.rows_total = legacy.rows.size();
    for (size_t i = 0; i < legacy.rows.size(); i++) {
        const auto& row = legacy.rows[i];
        if (row.size() <= std::max({c_ts, c_dur, c_proto, c_sip, c_sport, c_dip, c_dport, c_label})) {
            out.unparseable.push_back({i, "short row"});
            continue;
        }
        if (row[c_label] == default_label) {
            out.rows_default++;
            continue;  // signatures are built only from non-default samples
        }
        try {
            FlowSignature s;
            s.ts_us = parse_legacy_ts(row[c_ts], map);
            s.duration_us = parse_legacy_duration(row[c_dur], map);
            auto proto = parse_proto(row[c_proto]);
            if (!proto) throw std::invalid_argument("bad protocol: " + row[c_proto]);
            s.proto = *proto;
            auto sip = IpAddr::parse(row[c_sip]);
            auto dip = IpAddr::parse(row[c_dip]);
            if (!sip || !dip) throw std::invalid_argument("bad address");
            s.addr_lo = *sip;
            s.addr_hi = *dip;
            sort_pair(s.addr_lo, s.addr_hi);
            uint16_t sp = parse_port_strict(row[c_sport]);
            uint16_t dp = parse_port_strict(row[c_dport]);
            s.port_lo = std::min(sp, dp);
            s.port_hi = std::max(sp, dp);
            s.label = row[c_label];
            out.signatures.push_back(std::move(s));
        } catch (const std::exception& e) {
            out.unparseable.push_back({i, e.what()});
        }
    }
    return out;
}

namespace {

std::string candidate_key(uint8_t proto, const IpAddr& lo, const IpAddr& hi, uint16_t plo,
                          uint16_t phi) {
    std::string k;
    k.reserve(40);
    k.push_back(static_cast<char>(proto));
    k.append(reinterpret_cast<const char*>(lo.bytes.data()), 16);
    k.append(reinterpret_cast<const char*>(hi.bytes.data()), 16);
    k.push_back(static_cast<char>(plo >> 8));
    k.push_back(static_cast<char>(plo & 0xff));
    k.push_back(static_cast<char>(phi >> 8));
    k.push_back(static_cast<char>(phi & 0xff));
    return k;
}

// one score term: exact match scores 1 even at zero tolerance
double tolerance_term(int64_t delta, int64_t tolerance) {
    if (delta == 0) return 1.0;
    if (tolerance <= 0) return 0.0;
    double x = 1.0 - static_cast<double>(delta) / static_cast<double>(tolerance);
    return x > 0.0 ? x : 0.0;
}

}  // namespace

SignatureMatchReport reapply_signatures(std::vector<FeatureRow>& rows,
                                        const std::vector<FlowSignature>& sigs,
                                        const MatchTolerance& tol,
                                        const std::string& default_label) {
    std::unordered_map<std::string, std::vector<size_t>> index;
    for (size_t i = 0; i < rows.size(); i++) {
        FlowSignature s = signature_from_row(rows[i]);
        index[candidate_key(s.proto, s.addr_lo, s.addr_hi, s.port_lo, s.port_hi)].push_back(i);
    }

    SignatureMatchReport report;
    for (const auto& sig : sigs) {
        auto it = index.find(
            candidate_key(sig.proto, sig.addr_lo, sig.addr_hi, sig.port_lo, sig.port_hi));
        if (it == index.end()) {
            report.unmatched.push_back({sig, std::nullopt, 0.0});
            continue;
        }
        int64_t dur_tol = tol.duration_tolerance_for(sig.duration_us);
        struct Best {
            double score = -1.0;
            int64_t dts = 0;
            uint64_t flow_id = 0;
            size_t row = 0;
        } best;
        for (size_t i : it->second) {
            const FeatureRow& r = rows[i];
            int64_t dts = std::llabs(r.start_ts - sig.ts_us);
            int64_t ddur = std::llabs(r.duration_us - sig.duration_us);
            double score = tol.weight_ts * tolerance_term(dts, tol.ts_tolerance_us) +
                           tol.weight_duration * tolerance_term(ddur, dur_tol);
            bool better = score > best.score ||
                          (score == best.score &&
                           (dts < best.dts || (dts == best.dts && r.flow_id < best.flow_id)));
            if (better) best = {score, dts, r.flow_id, i};
        }
        if (best.score >= tol.score_threshold) {
            FeatureRow& target = rows[best.row];
            if (target.label != default_label && target.label != sig.label) {
                report.conflicts++;  // first-write-wins
            } else {
                target.label = sig.label;
                report.relabelled++;
            }
        } else {
            report.unmatched.push_back({sig, best.flow_id, std::max(best.score, 0.0)});
        }
    }
    return report;
}

uint64_t write_unmatched_csv(const std::vector<UnmatchedSignature>& unmatched,
                             const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "ts_us,duration_us,proto,addr_lo,addr_hi,port_lo,port_hi,label,"
           "nearest_flow_id,nearest_score\n";
    for (const auto& u : unmatched) {
        const auto& s = u.signature;
        out << s.ts_us << ',' << s.duration_us << ',' << proto_name(s.proto) << ','
            << s.addr_lo.to_string() << ',' << s.addr_hi.to_string() << ',' << s.port_lo << ','
            << s.port_hi << ',' << csv_escape(s.label) << ',';
        if (u.nearest_flow_id) out << *u.nearest_flow_id;
        char buf[32];
        std::snprintf(buf, sizeof(buf), ",%.4f\n", u.nearest_score);
        out << buf;
    }
    return unmatched.size();
}

}  // namespace flowrec
