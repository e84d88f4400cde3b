#include "flowrec/synth.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <json.hpp>

namespace flowrec {

namespace {

PacketRecord tcp_pkt(int64_t ts, const IpAddr& src, uint16_t sp, const IpAddr& dst, uint16_t dp,
                     uint8_t flags, std::vector<uint8_t> payload = {}) {
    PacketRecord p;
    p.ts_us = ts;
    p.src_ip = src;
    p.dst_ip = dst;
    p.src_port = sp;
    p.dst_port = dp;
    p.ip_proto = 6;
    p.tcp_flags = flags;
    p.payload_len = static_cast<uint32_t>(payload.size());
    p.payload = std::move(payload);
    p.ip_len = 40 + p.payload_len;  // 20 IP + 20 TCP
    return p;
}

std::vector<uint8_t> random_payload(std::mt19937_64& rng, uint32_t size) {
    std::vector<uint8_t> data(size);
    for (auto& b : data) b = static_cast<uint8_t>(rng());
    return data;
}

struct TaggedPacket {
    PacketRecord pkt;
    size_t flow_uid;
};

struct FlowIntent {
    IpAddr src_ip, dst_ip;
    uint16_t src_port, dst_port;
};

void gen_session(const SessionParams& s, std::mt19937_64& rng, size_t uid,
                 std::vector<TaggedPacket>& out, std::vector<FlowIntent>& intents) {
    if (s.data_pkts < 0 || s.gap_us <= 0) throw InvalidScenario("bad session parameters");
    intents.push_back({s.client, s.server, s.client_port, s.server_port});
    using namespace tcpflag;
    int64_t t = s.start_us;
    auto fwd = [&](uint8_t flags, std::vector<uint8_t> pl = {}) {
        out.push_back({tcp_pkt(t, s.client, s.client_port, s.server, s.server_port, flags,
                               std::move(pl)),
                       uid});
    };
    auto bwd = [&](uint8_t flags, std::vector<uint8_t> pl = {}) {
        out.push_back({tcp_pkt(t, s.server, s.server_port, s.client, s.client_port, flags,
                               std::move(pl)),
                       uid});
    };
    if (!s.headless) {
        fwd(kSyn);
        t += s.gap_us;
        bwd(kSyn | kAck);
        t += s.gap_us;
        fwd(kAck);
        t += s.gap_us;
    }
    for (int i = 0; i < s.data_pkts; i++) {
        bool forward = true;
        if (s.random_data_direction) forward = (rng() & 1) != 0;
        auto pl = random_payload(rng, s.payload_size);
        if (forward) {
            fwd(kPsh | kAck, std::move(pl));
            t += s.gap_us;
            if (!s.headless) {
                bwd(kAck);
                t += s.gap_us;
            }
        } else {
            bwd(kPsh | kAck, std::move(pl));
            t += s.gap_us;
            if (!s.headless) {
                fwd(kAck);
                t += s.gap_us;
            }
        }
    }
    if (!s.headless) {
        if (s.end == SessionParams::End::Fin) {
            fwd(kFin | kAck);
            t += s.gap_us;
            bwd(kFin | kAck);
            t += s.fin_ack_delay_us > 0 ? s.fin_ack_delay_us : s.gap_us;
            fwd(kAck);
        } else if (s.end == SessionParams::End::Rst) {
            fwd(kRst | kAck);
        }
    }
}

void gen_flood(const SynFloodParams& f, size_t& next_uid, std::vector<TaggedPacket>& out,
               std::vector<FlowIntent>& intents) {
    if (f.n <= 0 || f.gap_us <= 0) throw InvalidScenario("bad syn_flood parameters");
    using namespace tcpflag;
    int64_t t = f.start_us;
    size_t shared_uid = next_uid;
    if (!f.spoofed) {
        next_uid++;
        intents.push_back({f.src, f.dst, f.src_port, f.dst_port});
    }
    for (int i = 0; i < f.n; i++) {
        IpAddr src = f.src;
        size_t uid = shared_uid;
        if (f.spoofed) {
            // distinct source per pair: distinct tuples, distinct flows
            uint32_t base = (uint32_t(src.bytes[0]) << 24) | (uint32_t(src.bytes[1]) << 16) |
                            (uint32_t(src.bytes[2]) << 8) | src.bytes[3];
            src = IpAddr::from_v4(base + static_cast<uint32_t>(i));
            uid = next_uid++;
            intents.push_back({src, f.dst, f.src_port, f.dst_port});
        }
        out.push_back({tcp_pkt(t, src, f.src_port, f.dst, f.dst_port, kSyn), uid});
        if (f.with_synack) {
            out.push_back(
                {tcp_pkt(t + f.gap_us / 2, f.dst, f.dst_port, src, f.src_port, kSyn | kAck), uid});
        }
        t += f.gap_us;
    }
}

void gen_zombie(const ZombieParams& z, size_t uid, std::vector<TaggedPacket>& out,
                std::vector<FlowIntent>& intents) {
    if (z.duration_us <= 0 || z.keepalive_us <= 0) throw InvalidScenario("bad zombie parameters");
    intents.push_back({z.client, z.server, z.client_port, z.server_port});
    using namespace tcpflag;
    int64_t t = z.start_us;
    out.push_back({tcp_pkt(t, z.client, z.client_port, z.server, z.server_port, kSyn), uid});
    out.push_back({tcp_pkt(t + 1000, z.server, z.server_port, z.client, z.client_port,
                           kSyn | kAck),
                   uid});
    out.push_back({tcp_pkt(t + 2000, z.client, z.client_port, z.server, z.server_port, kAck), uid});
    int64_t end = z.start_us + z.duration_us;
    for (t += z.keepalive_us; t < end; t += z.keepalive_us) {
        out.push_back({tcp_pkt(t, z.client, z.client_port, z.server, z.server_port, kAck), uid});
        out.push_back(
            {tcp_pkt(t + 1000, z.server, z.server_port, z.client, z.client_port, kAck), uid});
    }
}

}  // namespace

SynthResult synth(const Scenario& scenario) {
    std::mt19937_64 rng(scenario.seed);
    std::vector<TaggedPacket> packets;
    std::vector<FlowIntent> intents;
    size_t next_uid = 0;
    for (const auto& element : scenario.elements) {
        if (const auto* s = std::get_if<SessionParams>(&element)) {
            gen_session(*s, rng, next_uid++, packets, intents);
        } else if (const auto* f = std::get_if<SynFloodParams>(&element)) {
            gen_flood(*f, next_uid, packets, intents);
        } else if (const auto* z = std::get_if<ZombieParams>(&element)) {
            gen_zombie(*z, next_uid++, packets, intents);
        }
    }

    if (scenario.interleave == InterleavePolicy::ByTime) {
        std::stable_sort(packets.begin(), packets.end(),
                         [](const TaggedPacket& a, const TaggedPacket& b) {
                             return a.pkt.ts_us < b.pkt.ts_us;
                         });
    }

    if (scenario.duplicate_fraction > 0.0) {
        std::bernoulli_distribution dup(scenario.duplicate_fraction);
        std::vector<TaggedPacket> with_dups;
        with_dups.reserve(packets.size());
        for (const auto& tp : packets) {
            with_dups.push_back(tp);
            if (dup(rng)) with_dups.push_back(tp);
        }
        packets = std::move(with_dups);
    }

    if (scenario.truncate_head + scenario.truncate_tail >= packets.size()) {
        if (scenario.truncate_head > 0 || scenario.truncate_tail > 0) packets.clear();
    } else {
        packets.erase(packets.begin(),
                      packets.begin() + static_cast<ptrdiff_t>(scenario.truncate_head));
        packets.erase(packets.end() - static_cast<ptrdiff_t>(scenario.truncate_tail),
                      packets.end());
    }

    // ground truth from the surviving packets, per intended flow
    std::map<size_t, GroundTruthFlow> truth;
    for (const auto& tp : packets) {
        const FlowIntent& intent = intents[tp.flow_uid];
        auto [it, fresh] = truth.try_emplace(tp.flow_uid);
        GroundTruthFlow& g = it->second;
        if (fresh) {
            g.src_ip = intent.src_ip;
            g.dst_ip = intent.dst_ip;
            g.src_port = intent.src_port;
            g.dst_port = intent.dst_port;
            g.proto = 6;
            g.first_ts = g.last_ts = tp.pkt.ts_us;
            g.initiated = (tp.pkt.tcp_flags & tcpflag::kSyn) != 0;
        }
        g.last_ts = std::max(g.last_ts, tp.pkt.ts_us);
        bool forward = tp.pkt.src_ip == intent.src_ip && tp.pkt.src_port == intent.src_port;
        if (forward) {
            g.fwd_pkts++;
            g.flags_fwd.add(tp.pkt.tcp_flags);
        } else {
            g.bwd_pkts++;
            g.flags_bwd.add(tp.pkt.tcp_flags);
        }
    }
    SynthResult result;
    for (auto& [uid, g] : truth) {
        g.terminated = (g.flags_fwd.fin > 0 && g.flags_bwd.fin > 0) ||
                       g.flags_fwd.rst > 0 || g.flags_bwd.rst > 0;
        if (g.initiated && g.terminated) {
            g.disposition = Disposition::Complete;
        } else if (g.terminated) {
            g.disposition = Disposition::Uninitialised;
        } else if (g.initiated) {
            g.disposition = Disposition::Unterminated;
        } else {
            g.disposition = Disposition::PartialBoth;
        }
        result.truth.push_back(g);
    }
    result.packets.reserve(packets.size());
    for (auto& tp : packets) result.packets.push_back(std::move(tp.pkt));
    return result;
}

namespace {

std::pair<IpAddr, uint16_t> parse_endpoint(const std::string& text) {
    auto colon = text.rfind(':');
    if (colon == std::string::npos) throw InvalidScenario("endpoint needs ip:port: " + text);
    auto ip = IpAddr::parse(text.substr(0, colon));
    if (!ip) throw InvalidScenario("bad endpoint address: " + text);
    unsigned long port = std::stoul(text.substr(colon + 1));
    if (port > 65535) throw InvalidScenario("bad endpoint port: " + text);
    return {*ip, static_cast<uint16_t>(port)};
}

int64_t seconds_to_us(const std::string& text) {
    return static_cast<int64_t>(std::llround(std::stod(text) * 1e6));
}

std::map<std::string, std::string> parse_kv(std::istringstream& in) {
    std::map<std::string, std::string> kv;
    std::string token;
    while (in >> token) {
        auto eq = token.find('=');
        if (eq == std::string::npos) throw InvalidScenario("expected key=value, got: " + token);
        kv[token.substr(0, eq)] = token.substr(eq + 1);
    }
    return kv;
}

}  // namespace

Scenario parse_scenario_text(const std::string& text) {
    Scenario sc;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string word;
        if (!(ls >> word)) continue;

        if (word == "session" || word == "syn_flood" || word == "zombie") {
            auto kv = parse_kv(ls);
            auto get = [&](const char* key) -> std::optional<std::string> {
                auto it = kv.find(key);
                if (it == kv.end()) return std::nullopt;
                return it->second;
            };
            if (word == "session") {
                SessionParams s;
                if (auto v = get("client")) std::tie(s.client, s.client_port) = parse_endpoint(*v);
                if (auto v = get("server")) std::tie(s.server, s.server_port) = parse_endpoint(*v);
                if (auto v = get("start")) s.start_us = seconds_to_us(*v);
                if (auto v = get("data")) s.data_pkts = std::stoi(*v);
                if (auto v = get("payload")) s.payload_size = std::stoul(*v);
                if (auto v = get("gap")) s.gap_us = seconds_to_us(*v);
                if (auto v = get("fin_ack_delay")) s.fin_ack_delay_us = seconds_to_us(*v);
                if (auto v = get("headless")) s.headless = *v == "1" || *v == "true";
                if (auto v = get("random_dir")) s.random_data_direction = *v == "1" || *v == "true";
                if (auto v = get("end")) {
                    if (*v == "fin") s.end = SessionParams::End::Fin;
                    else if (*v == "rst") s.end = SessionParams::End::Rst;
                    else if (*v == "none") s.end = SessionParams::End::None;
                    else throw InvalidScenario("unknown session end: " + *v);
                }
                sc.elements.emplace_back(s);
            } else if (word == "syn_flood") {
                SynFloodParams f;
                if (auto v = get("src")) std::tie(f.src, f.src_port) = parse_endpoint(*v);
                if (auto v = get("dst")) std::tie(f.dst, f.dst_port) = parse_endpoint(*v);
                if (auto v = get("n")) f.n = std::stoi(*v);
                if (auto v = get("start")) f.start_us = seconds_to_us(*v);
                if (auto v = get("gap")) f.gap_us = seconds_to_us(*v);
                if (auto v = get("synack")) f.with_synack = *v == "1" || *v == "true";
                if (auto v = get("spoofed")) f.spoofed = *v == "1" || *v == "true";
                sc.elements.emplace_back(f);
            } else {
                ZombieParams z;
                if (auto v = get("client")) std::tie(z.client, z.client_port) = parse_endpoint(*v);
                if (auto v = get("server")) std::tie(z.server, z.server_port) = parse_endpoint(*v);
                if (auto v = get("start")) z.start_us = seconds_to_us(*v);
                if (auto v = get("duration")) z.duration_us = seconds_to_us(*v);
                if (auto v = get("keepalive")) z.keepalive_us = seconds_to_us(*v);
                sc.elements.emplace_back(z);
            }
            continue;
        }

        // "key = value" scenario settings
        std::string eq, value;
        if (!(ls >> eq >> value) || eq != "=") {
            throw InvalidScenario("cannot parse scenario line: " + line);
        }
        if (word == "seed") sc.seed = std::stoull(value);
        else if (word == "truncate_head") sc.truncate_head = std::stoul(value);
        else if (word == "truncate_tail") sc.truncate_tail = std::stoul(value);
        else if (word == "duplicate") sc.duplicate_fraction = std::stod(value);
        else if (word == "interleave") {
            if (value == "by-time") sc.interleave = InterleavePolicy::ByTime;
            else if (value == "sequential") sc.interleave = InterleavePolicy::Sequential;
            else throw InvalidScenario("unknown interleave policy: " + value);
        } else {
            throw InvalidScenario("unknown scenario setting: " + word);
        }
    }
    return sc;
}

Scenario parse_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidScenario("cannot open scenario file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario_text(buf.str());
}

std::string ground_truth_json(const std::vector<GroundTruthFlow>& truth) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& g : truth) {
        nlohmann::ordered_json j;
        j["src_ip"] = g.src_ip.to_string();
        j["src_port"] = g.src_port;
        j["dst_ip"] = g.dst_ip.to_string();
        j["dst_port"] = g.dst_port;
        j["proto"] = proto_name(g.proto);
        j["fwd_pkts"] = g.fwd_pkts;
        j["bwd_pkts"] = g.bwd_pkts;
        j["syn_fwd"] = g.flags_fwd.syn;
        j["syn_bwd"] = g.flags_bwd.syn;
        j["fin_fwd"] = g.flags_fwd.fin;
        j["fin_bwd"] = g.flags_bwd.fin;
        j["rst_fwd"] = g.flags_fwd.rst;
        j["rst_bwd"] = g.flags_bwd.rst;
        j["initiated"] = g.initiated;
        j["terminated"] = g.terminated;
        j["disposition"] = disposition_name(g.disposition);
        j["first_ts"] = g.first_ts;
        j["last_ts"] = g.last_ts;
        arr.push_back(std::move(j));
    }
    return arr.dump(2);
}

}  // namespace flowrec
