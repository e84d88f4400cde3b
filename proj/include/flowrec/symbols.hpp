#pragma once

#include <string>
#include <vector>

#include "flowrec/flow.hpp"

namespace flowrec {

// Compressed flag token for one TCP packet: letters in canonical order
// S,F,R,P,U,A for the set flags, uppercase for forward packets, lowercase
// for reverse. Empty flag set renders as "-".
std::string flag_token(uint8_t flags, bool forward);

// Writes one ". "-delimited token run per TCP flow, oldest flows first
// (start-time order, stratified view). Lines wrap at 100 columns; the
// newline is whitespace only. Returns the number of flows written.
uint64_t export_symbol_sequences(const std::vector<FlowRecord>& flows, const std::string& path);

// Reads a symbol file back into per-flow token lists (newlines treated as
// whitespace). Used for round-trip checks.
std::vector<std::vector<std::string>> parse_symbol_file(const std::string& path);

}  // namespace flowrec
