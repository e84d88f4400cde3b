#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "flowrec/packet.hpp"

namespace flowrec {

struct PcapError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnrecognizedMagic : PcapError {
    using PcapError::PcapError;
};
struct IoError : PcapError {
    using PcapError::PcapError;
};
struct EmptyPathList : PcapError {
    using PcapError::PcapError;
};

enum class TimestampResolution { Micro, Nano };

// Gap between the last packet of file k and the first packet of file k+1.
struct BoundaryGap {
    size_t file_index = 0;  // index k of the earlier file
    int64_t gap_us = 0;
    bool negative = false;  // timestamp disorder across files
};

struct ReaderStats {
    uint64_t packets_read = 0;
    uint64_t packets_skipped = 0;  // non-IP or unsupported layers
    uint64_t fragments_skipped = 0;
    uint64_t malformed_records = 0;
    uint64_t backwards_timestamps = 0;  // within-file disorder, passed through
    uint64_t nano_truncated = 0;        // nano-resolution stamps truncated to micro
};

// Iterative classic-PCAP decoder over an ordered list of files. Only one
// packet record is resident at a time; at end of a file the next file is
// opened transparently and its header re-detected.
class TraceReader {
  public:
    explicit TraceReader(std::vector<std::string> paths);

    // Next decodable IP packet, or nullopt after the last file.
    std::optional<PacketRecord> next();

    const ReaderStats& stats() const { return stats_; }
    const std::vector<BoundaryGap>& boundary_gaps() const { return gaps_; }
    TimestampResolution resolution() const { return resolution_; }
    uint32_t link_type() const { return link_type_; }

  private:
    bool open_file(size_t index);
    bool read_record(std::vector<uint8_t>& data, int64_t& ts_us);
    std::optional<PacketRecord> decode_frame(const std::vector<uint8_t>& data,
                                             uint32_t orig_len, int64_t ts_us);

    std::vector<std::string> paths_;
    size_t current_index_ = 0;
    std::ifstream in_;
    bool swapped_ = false;
    TimestampResolution resolution_ = TimestampResolution::Micro;
    uint32_t link_type_ = 1;
    uint32_t snaplen_ = 0;
    bool exhausted_ = false;
    bool have_last_ts_ = false;
    int64_t last_ts_us_ = 0;
    bool at_file_start_ = false;
    uint32_t orig_len_scratch_ = 0;
    ReaderStats stats_;
    std::vector<BoundaryGap> gaps_;
};

// Encodes PacketRecords as a classic PCAP file (Ethernet link type).
// Returns the number of records written.
uint64_t write_pcap(const std::vector<PacketRecord>& packets, const std::string& path,
                    TimestampResolution resolution = TimestampResolution::Micro);

}  // namespace flowrec
