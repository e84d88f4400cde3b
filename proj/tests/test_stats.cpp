#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "flowrec/stats.hpp"
#include "helpers.hpp"

using namespace flowrec;

namespace {

struct TwoPass {
    double mean = 0, stddev = 0, min = 0, max = 0;
};

TwoPass two_pass(const std::vector<double>& xs) {
    TwoPass r;
    if (xs.empty()) return r;
    r.min = r.max = xs[0];
    double sum = 0;
    for (double x : xs) {
        sum += x;
        r.min = std::min(r.min, x);
        r.max = std::max(r.max, x);
    }
    r.mean = sum / double(xs.size());
    double ss = 0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.stddev = std::sqrt(ss / double(xs.size()));
    return r;
}

}  // namespace

TEST_CASE("two packet lengths 60 and 100 give mean 80 and std 20") {
    DirStats s;
    auto p1 = testutil::udp(1'000, "10.0.0.1", 1, "10.0.0.2", 2, std::vector<uint8_t>(32));
    auto p2 = testutil::udp(2'000, "10.0.0.1", 1, "10.0.0.2", 2, std::vector<uint8_t>(72));
    REQUIRE(p1.ip_len == 60);
    REQUIRE(p2.ip_len == 100);
    s.add_packet(p1);
    s.add_packet(p2);
    CHECK(s.len_mean == doctest::Approx(80.0));
    CHECK(s.len_std() == doctest::Approx(20.0));
    CHECK(s.len_min == 60.0);
    CHECK(s.len_max == 100.0);
    CHECK(s.iat_samples == 1);
    CHECK(s.iat_mean == doctest::Approx(1000.0));
    CHECK(s.iat_std() == doctest::Approx(0.0));
}

TEST_CASE("streaming length and iat moments match a two-pass oracle") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; trial++) {
        DirStats s;
        std::vector<double> lens, iats;
        int64_t ts = 0;
        int n = 2 + int(rng() % 40);
        int64_t prev = 0;
        for (int i = 0; i < n; i++) {
            ts += 1 + int64_t(rng() % 1'000'000);
            auto p = testutil::udp(ts, "10.0.0.1", 1, "10.0.0.2", 2,
                                   std::vector<uint8_t>(rng() % 1200));
            lens.push_back(double(p.ip_len));
            if (i > 0) iats.push_back(double(ts - prev));
            prev = ts;
            s.add_packet(p);
        }
        auto len_ref = two_pass(lens);
        auto iat_ref = two_pass(iats);
        CAPTURE(trial);
        CHECK(s.len_mean == doctest::Approx(len_ref.mean).epsilon(1e-9));
        CHECK(s.len_std() == doctest::Approx(len_ref.stddev).epsilon(1e-9));
        CHECK(s.len_min == len_ref.min);
        CHECK(s.len_max == len_ref.max);
        CHECK(s.iat_mean == doctest::Approx(iat_ref.mean).epsilon(1e-9));
        CHECK(s.iat_std() == doctest::Approx(iat_ref.stddev).epsilon(1e-9));
    }
}

TEST_CASE("entropy edge cases") {
    std::array<uint64_t, 256> hist{};
    CHECK(shannon_entropy(hist) == 0.0);

    hist[65] = 1000;
    CHECK(shannon_entropy(hist) == doctest::Approx(0.0).epsilon(1e-12));

    hist.fill(1);
    CHECK(shannon_entropy(hist) == doctest::Approx(8.0).epsilon(1e-12));

    std::array<uint64_t, 256> two{};
    two[0] = 5;
    two[255] = 5;
    CHECK(shannon_entropy(two) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("payload histogram feeds entropy") {
    DirStats s;
    std::vector<uint8_t> uniform(256);
    for (int i = 0; i < 256; i++) uniform[i] = uint8_t(i);
    s.add_packet(testutil::udp(0, "10.0.0.1", 1, "10.0.0.2", 2, uniform));
    CHECK(shannon_entropy(s.byte_hist) == doctest::Approx(8.0).epsilon(1e-12));
}
