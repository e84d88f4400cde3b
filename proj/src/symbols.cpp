#include "flowrec/symbols.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <stdexcept>

namespace flowrec {

std::string flag_token(uint8_t flags, bool forward) {
    // canonical letter order: S,F,R,P,U,A
    static constexpr struct {
        uint8_t bit;
        char letter;
    } kOrder[] = {{tcpflag::kSyn, 'S'}, {tcpflag::kFin, 'F'}, {tcpflag::kRst, 'R'},
                  {tcpflag::kPsh, 'P'}, {tcpflag::kUrg, 'U'}, {tcpflag::kAck, 'A'}};
    std::string token;
    for (const auto& e : kOrder) {
        if (flags & e.bit) token.push_back(e.letter);
    }
    if (token.empty()) return "-";
    if (!forward) {
        for (char& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return token;
}

uint64_t export_symbol_sequences(const std::vector<FlowRecord>& flows, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);

    std::vector<const FlowRecord*> tcp_flows;
    for (const auto& f : flows) {
        if (f.key.proto == 6) tcp_flows.push_back(&f);
    }
    std::stable_sort(tcp_flows.begin(), tcp_flows.end(), [](const FlowRecord* a, const FlowRecord* b) {
        if (a->start_ts != b->start_ts) return a->start_ts < b->start_ts;
        return a->flow_id < b->flow_id;
    });

    size_t col = 0;
    auto emit = [&](const std::string& word) {
        // wrap at 100 columns; newline is presentation whitespace only
        if (col > 0 && col + 1 + word.size() > 100) {
            out << '\n';
            col = 0;
        }
        if (col > 0) {
            out << ' ';
            col++;
        }
        out << word;
        col += word.size();
    };
    for (const auto* f : tcp_flows) {
        emit(".");
        for (const auto& t : f->tokens) emit(t);
    }
    if (col > 0) out << '\n';
    return tcp_flows.size();
}

std::vector<std::vector<std::string>> parse_symbol_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::vector<std::vector<std::string>> flows;
    std::string word;
    while (in >> word) {
        if (word == ".") {
            flows.emplace_back();
        } else if (!flows.empty()) {
            flows.back().push_back(word);
        }
    }
    return flows;
}

}  // namespace flowrec
