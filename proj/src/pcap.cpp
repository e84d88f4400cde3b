#include "flowrec/pcap.hpp"

#include <algorithm>
#include <cstring>

namespace flowrec {

namespace {

constexpr uint32_t kMagicMicro = 0xA1B2C3D4;
constexpr uint32_t kMagicMicroSwapped = 0xD4C3B2A1;
constexpr uint32_t kMagicNano = 0xA1B23C4D;
constexpr uint32_t kMagicNanoSwapped = 0x4D3CB2A1;

constexpr uint32_t kLinkEthernet = 1;
constexpr uint32_t kLinkRawIp = 101;
constexpr uint32_t kLinkLinuxSll = 113;

uint16_t load_be16(const uint8_t* p) {
    return static_cast<uint16_t>((p[0] << 8) | p[1]);
}

uint32_t load_u32(const uint8_t* p, bool swapped) {
    uint32_t v;
    std::memcpy(&v, p, 4);
    if (swapped) v = __builtin_bswap32(v);
    return v;
}

bool is_ipv6_ext_header(uint8_t h) {
    return h == 0 || h == 43 || h == 44 || h == 51 || h == 60 || h == 135;
}

}  // namespace

TraceReader::TraceReader(std::vector<std::string> paths) : paths_(std::move(paths)) {
    if (paths_.empty()) throw EmptyPathList("trace reader needs at least one file");
    if (!open_file(0)) throw IoError("cannot open " + paths_[0]);
}

bool TraceReader::open_file(size_t index) {
    in_.close();
    in_.clear();
    if (index >= paths_.size()) return false;
    in_.open(paths_[index], std::ios::binary);
    if (!in_) throw IoError("cannot open " + paths_[index]);
    uint8_t hdr[24];
    in_.read(reinterpret_cast<char*>(hdr), sizeof(hdr));
    if (in_.gcount() != sizeof(hdr)) throw UnrecognizedMagic("file too short for PCAP header: " + paths_[index]);
    uint32_t magic;
    std::memcpy(&magic, hdr, 4);
    switch (magic) {
        case kMagicMicro:
            swapped_ = false;
            resolution_ = TimestampResolution::Micro;
            break;
        case kMagicMicroSwapped:
            swapped_ = true;
            resolution_ = TimestampResolution::Micro;
            break;
        case kMagicNano:
            swapped_ = false;
            resolution_ = TimestampResolution::Nano;
            break;
        case kMagicNanoSwapped:
            swapped_ = true;
            resolution_ = TimestampResolution::Nano;
            break;
        default:
            throw UnrecognizedMagic("not a classic PCAP file: " + paths_[index]);
    }
    snaplen_ = load_u32(hdr + 16, swapped_);
    link_type_ = load_u32(hdr + 20, swapped_);
    current_index_ = index;
    at_file_start_ = true;
    return true;
}

bool TraceReader::read_record(std::vector<uint8_t>& data, int64_t& ts_us) {
    uint8_t hdr[16];
    in_.read(reinterpret_cast<char*>(hdr), sizeof(hdr));
    if (in_.gcount() == 0) return false;  // clean end of file
    if (in_.gcount() != sizeof(hdr)) {
        stats_.malformed_records++;
        return false;
    }
    uint32_t ts_sec = load_u32(hdr, swapped_);
    uint32_t ts_sub = load_u32(hdr + 4, swapped_);
    uint32_t incl_len = load_u32(hdr + 8, swapped_);
    uint32_t orig_len = load_u32(hdr + 12, swapped_);

    auto pos = in_.tellg();
    in_.seekg(0, std::ios::end);
    auto end = in_.tellg();
    in_.seekg(pos);
    if (incl_len > static_cast<uint64_t>(end - pos)) {
        // declared capture length exceeds remaining file bytes
        stats_.malformed_records++;
        return false;
    }

    data.resize(incl_len);
    if (incl_len > 0) {
        in_.read(reinterpret_cast<char*>(data.data()), incl_len);
        if (in_.gcount() != static_cast<std::streamsize>(incl_len)) {
            stats_.malformed_records++;
            return false;
        }
    }

    if (resolution_ == TimestampResolution::Nano) {
        if (ts_sub % 1000 != 0) stats_.nano_truncated++;
        ts_us = static_cast<int64_t>(ts_sec) * 1000000 + ts_sub / 1000;
    } else {
        ts_us = static_cast<int64_t>(ts_sec) * 1000000 + ts_sub;
    }

    if (at_file_start_) {
        if (have_last_ts_) {
            BoundaryGap g;
            g.file_index = current_index_ - 1;
            g.gap_us = ts_us - last_ts_us_;
            g.negative = g.gap_us < 0;
            gaps_.push_back(g);
        }
        at_file_start_ = false;
    } else if (have_last_ts_ && ts_us < last_ts_us_) {
        stats_.backwards_timestamps++;
    }
    have_last_ts_ = true;
    last_ts_us_ = ts_us;

    orig_len_scratch_ = orig_len;
    return true;
}

std::optional<PacketRecord> TraceReader::next() {
    std::vector<uint8_t> data;
    while (!exhausted_) {
        int64_t ts_us = 0;
        if (!read_record(data, ts_us)) {
            // end of current file (or malformed record): continue with the next
            if (!open_file(current_index_ + 1)) {
                exhausted_ = true;
                break;
            }
            continue;
        }
        auto pkt = decode_frame(data, orig_len_scratch_, ts_us);
        if (pkt) {
            stats_.packets_read++;
            return pkt;
        }
        stats_.packets_skipped++;
    }
    return std::nullopt;
}

std::optional<PacketRecord> TraceReader::decode_frame(const std::vector<uint8_t>& data,
                                                      uint32_t orig_len, int64_t ts_us) {
    size_t off = 0;
    bool is_v6 = false;
    if (link_type_ == kLinkEthernet) {
        if (data.size() < 14) return std::nullopt;
        uint16_t ethertype = load_be16(data.data() + 12);
        off = 14;
        // unwrap up to 2 nested 802.1Q tags
        for (int i = 0; i < 2 && (ethertype == 0x8100 || ethertype == 0x88A8); i++) {
            if (data.size() < off + 4) return std::nullopt;
            ethertype = load_be16(data.data() + off + 2);
            off += 4;
        }
        if (ethertype == 0x0800) {
            is_v6 = false;
        } else if (ethertype == 0x86DD) {
            is_v6 = true;
        } else {
            return std::nullopt;  // non-IP frame (ARP etc.)
        }
    } else if (link_type_ == kLinkLinuxSll) {
        if (data.size() < 16) return std::nullopt;
        uint16_t ethertype = load_be16(data.data() + 14);
        off = 16;
        if (ethertype == 0x0800) {
            is_v6 = false;
        } else if (ethertype == 0x86DD) {
            is_v6 = true;
        } else {
            return std::nullopt;
        }
    } else if (link_type_ == kLinkRawIp) {
        if (data.empty()) return std::nullopt;
        uint8_t ver = data[0] >> 4;
        if (ver == 4) {
            is_v6 = false;
        } else if (ver == 6) {
            is_v6 = true;
        } else {
            return std::nullopt;
        }
        off = 0;
    } else {
        return std::nullopt;  // unsupported link type, per-record skip
    }

    PacketRecord pkt;
    pkt.ts_us = ts_us;
    size_t l4_off = 0;
    uint32_t l4_declared = 0;  // declared bytes from L4 header onward

    if (!is_v6) {
        if (data.size() < off + 20) return std::nullopt;
        const uint8_t* ip = data.data() + off;
        if ((ip[0] >> 4) != 4) return std::nullopt;
        size_t ihl = static_cast<size_t>(ip[0] & 0x0f) * 4;
        if (ihl < 20 || data.size() < off + ihl) return std::nullopt;
        uint16_t total_len = load_be16(ip + 2);
        if (total_len < ihl) return std::nullopt;
        uint16_t frag = load_be16(ip + 6);
        if ((frag & 0x1fff) != 0) {
            stats_.fragments_skipped++;
            return std::nullopt;  // non-first fragment, no reassembly
        }
        pkt.ip_proto = ip[9];
        pkt.src_ip.v6 = false;
        pkt.dst_ip.v6 = false;
        std::memcpy(pkt.src_ip.bytes.data(), ip + 12, 4);
        std::memcpy(pkt.dst_ip.bytes.data(), ip + 16, 4);
        pkt.ip_len = total_len;
        l4_off = off + ihl;
        l4_declared = total_len - static_cast<uint32_t>(ihl);
    } else {
        if (data.size() < off + 40) return std::nullopt;
        const uint8_t* ip = data.data() + off;
        if ((ip[0] >> 4) != 6) return std::nullopt;
        uint16_t payload_length = load_be16(ip + 4);
        uint8_t next = ip[6];
        pkt.src_ip.v6 = true;
        pkt.dst_ip.v6 = true;
        std::memcpy(pkt.src_ip.bytes.data(), ip + 8, 16);
        std::memcpy(pkt.dst_ip.bytes.data(), ip + 24, 16);
        pkt.ip_len = 40u + payload_length;
        size_t p = off + 40;
        uint32_t remaining_declared = payload_length;
        // walk extension headers until a transport protocol
        while (is_ipv6_ext_header(next)) {
            if (data.size() < p + 8) return std::nullopt;
            if (next == 44) {
                uint16_t frag = load_be16(data.data() + p + 2);
                if ((frag >> 3) != 0) {
                    stats_.fragments_skipped++;
                    return std::nullopt;
                }
                next = data[p];
                p += 8;
                remaining_declared = remaining_declared >= 8 ? remaining_declared - 8 : 0;
                continue;
            }
            size_t ext_len = (next == 51) ? (static_cast<size_t>(data[p + 1]) + 2) * 4
                                          : (static_cast<size_t>(data[p + 1]) + 1) * 8;
            if (data.size() < p + ext_len) return std::nullopt;
            next = data[p];
            p += ext_len;
            remaining_declared = remaining_declared >= ext_len
                                     ? remaining_declared - static_cast<uint32_t>(ext_len)
                                     : 0;
        }
        pkt.ip_proto = next;
        l4_off = p;
        l4_declared = remaining_declared;
    }

    size_t captured_l4 = data.size() > l4_off ? data.size() - l4_off : 0;
    const uint8_t* l4 = data.data() + l4_off;

    if (pkt.ip_proto == 6) {
        if (captured_l4 < 20) return std::nullopt;  // truncated TCP header
        pkt.src_port = load_be16(l4);
        pkt.dst_port = load_be16(l4 + 2);
        size_t doff = static_cast<size_t>(l4[12] >> 4) * 4;
        if (doff < 20) return std::nullopt;
        pkt.tcp_flags = l4[13] & tcpflag::kMask;
        pkt.payload_len = l4_declared > doff ? l4_declared - static_cast<uint32_t>(doff) : 0;
        if (captured_l4 > doff) {
            size_t avail = std::min<size_t>(captured_l4 - doff, pkt.payload_len);
            pkt.payload.assign(l4 + doff, l4 + doff + avail);
        }
    } else if (pkt.ip_proto == 17) {
        if (captured_l4 < 8) return std::nullopt;
        pkt.src_port = load_be16(l4);
        pkt.dst_port = load_be16(l4 + 2);
        pkt.payload_len = l4_declared > 8 ? l4_declared - 8 : 0;
        if (captured_l4 > 8) {
            size_t avail = std::min<size_t>(captured_l4 - 8, pkt.payload_len);
            pkt.payload.assign(l4 + 8, l4 + 8 + avail);
        }
    } else {
        pkt.src_port = 0;
        pkt.dst_port = 0;
        pkt.payload_len = l4_declared;
        size_t avail = std::min<size_t>(captured_l4, pkt.payload_len);
        pkt.payload.assign(l4, l4 + avail);
    }

    pkt.truncated = data.size() < orig_len || pkt.payload.size() < pkt.payload_len;
    return pkt;
}

namespace {

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    uint8_t b[4];
    std::memcpy(b, &v, 4);
    out.insert(out.end(), b, b + 4);
}

void put_be16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

}  // namespace

uint64_t write_pcap(const std::vector<PacketRecord>& packets, const std::string& path,
                    TimestampResolution resolution) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);

    std::vector<uint8_t> buf;
    put_u32(buf, resolution == TimestampResolution::Nano ? kMagicNano : kMagicMicro);
    buf.push_back(2);
    buf.push_back(0);  // version 2.4
    buf.push_back(4);
    buf.push_back(0);
    put_u32(buf, 0);       // thiszone
    put_u32(buf, 0);       // sigfigs
    put_u32(buf, 262144);  // snaplen
    put_u32(buf, kLinkEthernet);

    for (const auto& pkt : packets) {
        std::vector<uint8_t> frame;
        // ethernet
        const uint8_t dst_mac[6] = {0x02, 0, 0, 0, 0, 0x01};
        const uint8_t src_mac[6] = {0x02, 0, 0, 0, 0, 0x02};
        frame.insert(frame.end(), dst_mac, dst_mac + 6);
        frame.insert(frame.end(), src_mac, src_mac + 6);
        put_be16(frame, pkt.src_ip.v6 ? 0x86DD : 0x0800);

        size_t th = pkt.is_tcp() ? 20 : pkt.ip_proto == 17 ? 8 : 0;
        if (!pkt.src_ip.v6) {
            uint32_t total_len = pkt.ip_len != 0
                                     ? pkt.ip_len
                                     : static_cast<uint32_t>(20 + th + pkt.payload.size());
            frame.push_back(0x45);
            frame.push_back(0);
            put_be16(frame, static_cast<uint16_t>(total_len));
            put_be16(frame, 0);  // id
            put_be16(frame, 0);  // flags/frag
            frame.push_back(64); // ttl
            frame.push_back(pkt.ip_proto);
            put_be16(frame, 0);  // checksum (not verified by the reader)
            frame.insert(frame.end(), pkt.src_ip.bytes.begin(), pkt.src_ip.bytes.begin() + 4);
            frame.insert(frame.end(), pkt.dst_ip.bytes.begin(), pkt.dst_ip.bytes.begin() + 4);
        } else {
            uint32_t total_len = pkt.ip_len != 0
                                     ? pkt.ip_len
                                     : static_cast<uint32_t>(40 + th + pkt.payload.size());
            frame.push_back(0x60);
            frame.push_back(0);
            frame.push_back(0);
            frame.push_back(0);
            put_be16(frame, static_cast<uint16_t>(total_len - 40));
            frame.push_back(pkt.ip_proto);
            frame.push_back(64);  // hop limit
            frame.insert(frame.end(), pkt.src_ip.bytes.begin(), pkt.src_ip.bytes.end());
            frame.insert(frame.end(), pkt.dst_ip.bytes.begin(), pkt.dst_ip.bytes.end());
        }

        if (pkt.is_tcp()) {
            put_be16(frame, pkt.src_port);
            put_be16(frame, pkt.dst_port);
            put_u32(frame, 0);  // seq
            put_u32(frame, 0);  // ack
            frame.push_back(5 << 4);
            frame.push_back(pkt.tcp_flags);
            put_be16(frame, 65535);
            put_be16(frame, 0);  // checksum
            put_be16(frame, 0);  // urgent
        } else if (pkt.ip_proto == 17) {
            put_be16(frame, pkt.src_port);
            put_be16(frame, pkt.dst_port);
            put_be16(frame, static_cast<uint16_t>(8 + pkt.payload_len));
            put_be16(frame, 0);
        }
        frame.insert(frame.end(), pkt.payload.begin(), pkt.payload.end());

        uint32_t hdrs = pkt.src_ip.v6 ? 40 : 20;
        uint32_t orig_ip = pkt.ip_len != 0
                               ? pkt.ip_len
                               : static_cast<uint32_t>(hdrs + th + pkt.payload.size());
        uint32_t sec = static_cast<uint32_t>(pkt.ts_us / 1000000);
        uint32_t sub = static_cast<uint32_t>(pkt.ts_us % 1000000);
        if (resolution == TimestampResolution::Nano) sub *= 1000;
        put_u32(buf, sec);
        put_u32(buf, sub);
        put_u32(buf, static_cast<uint32_t>(frame.size()));
        put_u32(buf, 14u + orig_ip);
        buf.insert(buf.end(), frame.begin(), frame.end());
    }

    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failed: " + path);
    return packets.size();
}

}  // namespace flowrec
