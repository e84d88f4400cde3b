#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "flowrec/packet.hpp"

namespace flowrec {

// Per-direction streaming accumulators: single-pass (Welford) mean/variance
// for packet lengths and inter-arrival times, plus a payload byte histogram.
struct DirStats {
    uint64_t packets = 0;
    uint64_t bytes = 0;          // sum of ip_len
    uint64_t payload_bytes = 0;  // declared transport payload
    double len_min = 0, len_max = 0, len_mean = 0, len_m2 = 0;
    uint64_t iat_samples = 0;
    double iat_min = 0, iat_max = 0, iat_mean = 0, iat_m2 = 0;
    int64_t last_ts = 0;
    std::array<uint64_t, 256> byte_hist{};

    void add_packet(const PacketRecord& pkt) {
        double len = static_cast<double>(pkt.ip_len);
        packets++;
        bytes += pkt.ip_len;
        payload_bytes += pkt.payload_len;
        if (packets == 1) {
            len_min = len_max = len;
        } else {
            if (len < len_min) len_min = len;
            if (len > len_max) len_max = len;
            double iat = static_cast<double>(pkt.ts_us - last_ts);
            iat_samples++;
            if (iat_samples == 1) {
                iat_min = iat_max = iat;
            } else {
                if (iat < iat_min) iat_min = iat;
                if (iat > iat_max) iat_max = iat;
            }
            double d = iat - iat_mean;
            iat_mean += d / static_cast<double>(iat_samples);
            iat_m2 += d * (iat - iat_mean);
        }
        double d = len - len_mean;
        len_mean += d / static_cast<double>(packets);
        len_m2 += d * (len - len_mean);
        last_ts = pkt.ts_us;
        for (uint8_t b : pkt.payload) byte_hist[b]++;
    }

    // population standard deviation
    double len_std() const {
        return packets > 0 ? std::sqrt(len_m2 / static_cast<double>(packets)) : 0.0;
    }
    double iat_std() const {
        return iat_samples > 0 ? std::sqrt(iat_m2 / static_cast<double>(iat_samples)) : 0.0;
    }
};

// Shannon entropy in bits per byte, 0 for an empty histogram. Range [0, 8].
double shannon_entropy(const std::array<uint64_t, 256>& hist);

}  // namespace flowrec
