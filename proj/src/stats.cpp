#include "flowrec/stats.hpp"

namespace flowrec {

double shannon_entropy(const std::array<uint64_t, 256>& hist) {
    uint64_t total = 0;
    for (uint64_t c : hist) total += c;
    if (total == 0) return 0.0;
    double h = 0.0;
    for (uint64_t c : hist) {
        if (c == 0) continue;
        double p = static_cast<double>(c) / static_cast<double>(total);
        h -= p * std::log2(p);
    }
    if (h < 0.0) h = 0.0;
    if (h > 8.0) h = 8.0;
    return h;
}

}  // namespace flowrec
