#include "flowrec/flow.hpp"

#include <algorithm>

#include "flowrec/symbols.hpp"

namespace flowrec {

namespace {
// Timeout scans run lazily against the packet clock at this granularity.
constexpr int64_t kScanIntervalUs = 1'000'000;
}  // namespace

FlowKey make_key(const PacketRecord& pkt) {
    FlowKey k;
    k.ip_a = pkt.src_ip;
    k.ip_b = pkt.dst_ip;
    k.proto = pkt.ip_proto;
    if (pkt.kind() != ProtoKind::Other) {
        k.port_a = pkt.src_port;
        k.port_b = pkt.dst_port;
    }
    return k;
}

std::string disposition_name(Disposition d) {
    switch (d) {
        case Disposition::Complete: return "complete";
        case Disposition::Uninitialised: return "uninitialised";
        case Disposition::Unterminated: return "unterminated";
        case Disposition::PartialBoth: return "partial-both";
    }
    return "partial-both";
}

std::string end_reason_name(EndReason r) {
    switch (r) {
        case EndReason::None: return "none";
        case EndReason::FinComplete: return "fin-complete";
        case EndReason::Rst: return "rst";
        case EndReason::IdleTimeout: return "idle-timeout";
        case EndReason::ActiveTimeout: return "active-timeout";
        case EndReason::NewSyn: return "new-syn";
        case EndReason::EndOfTrace: return "end-of-trace";
    }
    return "none";
}

FlowCache::FlowCache(CacheConfig config) : config_(std::move(config)) {}

LookupResult FlowCache::lookup_bidirectional(const FlowKey& key) {
    auto it = table_.find(key);
    if (it != table_.end()) return {&it->second, PacketDirection::Forward};
    it = table_.find(key.reversed());
    if (it != table_.end()) return {&it->second, PacketDirection::Reverse};
    return {};
}

FlowRecord& FlowCache::create_flow(const PacketRecord& pkt, const FlowKey& key,
                                   std::vector<FlowEvent>& events) {
    FlowRecord f;
    f.key = key;
    f.flow_id = next_flow_id_++;
    f.start_ts = f.last_ts = pkt.ts_us;

    DirectionVerdict verdict{DirectionDecision::Forward, DirectionMethod::DefaultForward};
    if (config_.infer_direction) {
        verdict = infer_direction(pkt, config_.reversed_service_ports);
    }
    f.initiator_is_a = verdict.decision != DirectionDecision::Reverse;
    f.direction_method = verdict.method;
    const IpAddr& initiator = f.initiator_is_a ? key.ip_a : key.ip_b;
    const IpAddr& responder = f.initiator_is_a ? key.ip_b : key.ip_a;
    f.orientation = orient(initiator, responder, config_.local_cidrs);

    // presence of flow initialisation is not required: a TCP flow whose
    // first packet lacks a SYN stays provisionally uninitialised; protocols
    // without a handshake have no initialisation concept
    f.initiated = !pkt.is_tcp() || (pkt.tcp_flags & tcpflag::kSyn) != 0;

    update_flow(f, pkt, /*forward_side=*/true);

    created_++;
    auto [it, ok] = table_.emplace(key, std::move(f));
    (void)ok;
    high_watermark_ = std::max<uint64_t>(high_watermark_, table_.size());
    events.push_back({FlowEventKind::Created, it->second.flow_id, EndReason::None});
    return it->second;
}

void FlowCache::update_flow(FlowRecord& flow, const PacketRecord& pkt, bool side_a) {
    bool forward = side_a == flow.initiator_is_a;
    DirStats& stats = forward ? flow.fwd : flow.bwd;
    FlagCounts& flags = forward ? flow.flags_fwd : flow.flags_bwd;

    if (pkt.ts_us < flow.last_ts) {
        flow.anomaly_flags |= anomaly::kBackwardsTimestamp;
        tally_backwards_ts_++;
    }
    stats.add_packet(pkt);
    flow.last_ts = std::max(flow.last_ts, pkt.ts_us);
    flow.truncated = flow.truncated || pkt.truncated;

    if (pkt.is_tcp()) {
        flags.add(pkt.tcp_flags);
        if (config_.collect_tokens) flow.tokens.push_back(flag_token(pkt.tcp_flags, forward));
        if (pkt.tcp_flags & tcpflag::kFin) {
            if (forward) {
                flow.fin_seen_fwd = true;
            } else {
                flow.fin_seen_bwd = true;
            }
            if (!flow.fin_wait_deadline) {
                flow.fin_wait_deadline = pkt.ts_us + config_.timeouts.fin_wait_us;
                flow.state = FlowState::FinWait;
            }
        }
        if (pkt.tcp_flags & tcpflag::kRst) {
            flow.rst_seen = true;
            int64_t linger = pkt.ts_us + config_.timeouts.rst_linger_us;
            flow.fin_wait_deadline = flow.fin_wait_deadline
                                         ? std::min(*flow.fin_wait_deadline, linger)
                                         : linger;
            flow.state = FlowState::FinWait;
        }
    }
}

void FlowCache::retire(const FlowKey& stored_key, EndReason trigger,
                       std::vector<FlowEvent>& events) {
    auto it = table_.find(stored_key);
    if (it == table_.end()) return;
    FlowRecord f = std::move(it->second);
    table_.erase(it);

    bool fins_balanced = f.fin_seen_fwd && f.fin_seen_bwd;
    switch (trigger) {
        case EndReason::FinComplete:  // fin-wait deadline expired
            f.end_reason = (f.rst_seen && !fins_balanced) ? EndReason::Rst : EndReason::FinComplete;
            break;
        case EndReason::NewSyn:
            if (fins_balanced) {
                // termination was fully observed before the tuple was reused
                f.end_reason = EndReason::FinComplete;
            } else if (f.rst_seen) {
                f.end_reason = EndReason::Rst;
            } else {
                f.end_reason = EndReason::NewSyn;
            }
            break;
        case EndReason::EndOfTrace:
            if (fins_balanced) {
                f.end_reason = EndReason::FinComplete;
            } else if (f.rst_seen) {
                f.end_reason = EndReason::Rst;
            } else {
                f.end_reason = EndReason::EndOfTrace;
            }
            break;
        default:
            f.end_reason = trigger;
            break;
    }

    bool terminated = f.end_reason == EndReason::FinComplete || f.end_reason == EndReason::Rst;
    if (f.initiated && terminated) {
        f.disposition = Disposition::Complete;
    } else if (terminated) {
        f.disposition = Disposition::Uninitialised;
    } else if (f.initiated) {
        f.disposition = Disposition::Unterminated;
    } else {
        f.disposition = Disposition::PartialBoth;
    }
    f.state = FlowState::Retired;
    f.fin_wait_deadline.reset();

    events.push_back({FlowEventKind::Retired, f.flow_id, f.end_reason});
    retired_keys_.insert(f.key);
    retired_total_++;
    retired_.push_back(std::move(f));
}

std::vector<FlowEvent> FlowCache::admit_packet(const PacketRecord& pkt) {
    std::vector<FlowEvent> events;
    int64_t now = pkt.ts_us;
    if (!have_clock_) {
        have_clock_ = true;
        clock_us_ = now;
        last_scan_us_ = now;
    } else if (now > clock_us_) {
        clock_us_ = now;
        if (now - last_scan_us_ >= kScanIntervalUs) {
            auto expired = check_timeouts(now);
            events.insert(events.end(), expired.begin(), expired.end());
        }
    }
    admitted_packets_++;

    FlowKey key = make_key(pkt);
    auto hit = lookup_bidirectional(key);
    if (!hit.hit()) {
        if (retired_keys_.count(key) || retired_keys_.count(key.reversed())) {
            late_packets_total_++;
            if (pkt.is_tcp() &&
                (pkt.tcp_flags & (tcpflag::kFin | tcpflag::kSyn | tcpflag::kRst))) {
                tally_flag_after_fin_++;
            }
        }
        FlowRecord& f = create_flow(pkt, key, events);
        if (retired_keys_.count(key) || retired_keys_.count(key.reversed())) {
            f.anomaly_flags |= anomaly::kFlagAfterFin;
        }
        return events;
    }

    FlowRecord& f = *hit.record;
    bool side_a = hit.direction == PacketDirection::Forward;

    bool pure_syn = pkt.is_tcp() && (pkt.tcp_flags & tcpflag::kSyn) &&
                    !(pkt.tcp_flags & tcpflag::kAck);
    bool progressed = f.total_payload() > 0 || f.fin_seen_fwd || f.fin_seen_bwd || f.rst_seen;
    if (pure_syn && progressed) {
        // the tuple is being reused: flush the old flow, start a new one
        if (f.total_payload() > 0) {
            f.anomaly_flags |= anomaly::kSynAfterData;
            tally_syn_after_data_++;
        }
        FlowKey stored = f.key;
        retire(stored, EndReason::NewSyn, events);
        create_flow(pkt, key, events);
        return events;
    }
    if (pkt.is_tcp() && (pkt.tcp_flags & tcpflag::kSyn) && f.total_payload() > 0) {
        f.anomaly_flags |= anomaly::kSynAfterData;
        tally_syn_after_data_++;
    }

    update_flow(f, pkt, side_a);
    events.push_back({FlowEventKind::Updated, f.flow_id, EndReason::None});
    return events;
}

std::vector<FlowEvent> FlowCache::check_timeouts(int64_t now_us) {
    last_scan_us_ = now_us;
    struct Candidate {
        FlowKey key;
        uint64_t flow_id;
        EndReason trigger;
    };
    std::vector<Candidate> expiring;
    for (const auto& [key, f] : table_) {
        if (f.fin_wait_deadline && now_us >= *f.fin_wait_deadline) {
            expiring.push_back({key, f.flow_id, EndReason::FinComplete});
            continue;
        }
        int64_t idle = f.key.proto == 6 ? config_.timeouts.idle_tcp_us
                                        : config_.timeouts.idle_udp_us;
        if (now_us - f.last_ts >= idle) {
            expiring.push_back({key, f.flow_id, EndReason::IdleTimeout});
            continue;
        }
        if (now_us - f.start_ts >= config_.timeouts.active_us) {
            expiring.push_back({key, f.flow_id, EndReason::ActiveTimeout});
        }
    }
    // retirement order must not depend on hash iteration order
    std::sort(expiring.begin(), expiring.end(),
              [](const Candidate& a, const Candidate& b) { return a.flow_id < b.flow_id; });
    std::vector<FlowEvent> events;
    for (const auto& c : expiring) retire(c.key, c.trigger, events);
    return events;
}

std::vector<FlowEvent> FlowCache::finalize_all() {
    struct Remaining {
        FlowKey key;
        uint64_t flow_id;
    };
    std::vector<Remaining> rest;
    rest.reserve(table_.size());
    for (const auto& [key, f] : table_) rest.push_back({key, f.flow_id});
    std::sort(rest.begin(), rest.end(),
              [](const Remaining& a, const Remaining& b) { return a.flow_id < b.flow_id; });
    std::vector<FlowEvent> events;
    for (const auto& r : rest) retire(r.key, EndReason::EndOfTrace, events);
    return events;
}

uint64_t estimate_cache_bytes(uint64_t f_smax, uint64_t d_so, uint64_t f_s) {
    return f_smax * (d_so + 2 * f_s);
}

}  // namespace flowrec
