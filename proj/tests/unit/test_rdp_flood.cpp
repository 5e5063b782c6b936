#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "rdcap/errors.hpp"
#include "rdcap/rdp_flood.hpp"
#include "rdcap/rng.hpp"

using namespace rdcap;

namespace {

NetworkConfig config_for(std::size_t n, double ca = 16.0, std::uint64_t seed = 1) {
    NetworkConfig c;
    c.n = n;
    c.area_coeff = ca;
    c.seed = seed;
    return c;
}

struct OracleFlood {
    std::size_t reached = 0;
    std::size_t slots = 0;
};

// Quadratic-time replay of the slotted flood rules: FIFO queues, busy nodes transmit
// their oldest copy, idle nodes capture the nearest transmitter in range.
std::vector<OracleFlood> oracle(const std::vector<std::uint32_t>& origins, const NodePlacement& p, double radius) {
    const std::size_t n = p.size();
    std::vector<std::deque<std::size_t>> q(n);
    std::vector<std::set<std::uint32_t>> seen(origins.size());
    std::vector<std::size_t> copies(origins.size(), 0);
    std::vector<bool> open(origins.size(), true);
    std::vector<OracleFlood> out(origins.size());
    for (std::size_t k = 0; k < origins.size(); ++k) {
        seen[k].insert(origins[k]);
        q[origins[k]].push_back(k);
        ++copies[k];
    }
    for (;;) {
        if (std::none_of(open.begin(), open.end(), [](bool b) { return b; })) break;
        std::vector<std::pair<std::uint32_t, std::size_t>> tx;
        std::vector<bool> sending(n, false);
        for (std::uint32_t v = 0; v < n; ++v) {
            if (q[v].empty()) continue;
            tx.emplace_back(v, q[v].front());
            --copies[q[v].front()];
            q[v].pop_front();
            sending[v] = true;
        }
        std::vector<std::pair<std::uint32_t, std::size_t>> rx;
        for (std::uint32_t v = 0; v < n; ++v) {
            if (sending[v]) continue;
            double best = std::numeric_limits<double>::infinity();
            std::uint32_t who = 0;
            std::size_t flood = 0;
            for (const auto& [t, k] : tx) {
                const double dx = p.positions[v].x - p.positions[t].x, dy = p.positions[v].y - p.positions[t].y;
                const double d2 = dx * dx + dy * dy;
                if (d2 > radius * radius) continue;
                if (d2 < best || (d2 == best && t < who)) {
                    best = d2;
                    who = t;
                    flood = k;
                }
            }
            if (std::isfinite(best)) rx.emplace_back(v, flood);
        }
        for (const auto& [v, k] : rx) {
            if (!seen[k].insert(v).second) continue;
            ++out[k].reached;
            q[v].push_back(k);
            ++copies[k];
        }
        for (std::size_t k = 0; k < origins.size(); ++k) {
            if (!open[k]) continue;
            ++out[k].slots;
            if (copies[k] == 0) open[k] = false;
        }
    }
    return out;
}

} // namespace

TEST_CASE("degenerate flood inputs are rejected") {
    const NodePlacement one = place_nodes(config_for(1));
    CHECK_THROWS_AS(run_flood(0, one, config_for(1), 10), DomainError);
    const NodePlacement p = place_nodes(config_for(10));
    CHECK_THROWS_AS(run_flood(0, p, config_for(10), 0), DomainError);
    const std::vector<std::uint32_t> none;
    CHECK_THROWS_AS(run_concurrent_floods(none, p, config_for(10), 5), DomainError);
}

TEST_CASE("full coverage disk reaches everyone in one slot") {
    const NetworkConfig c = config_for(50, 100.0);
    const NodePlacement p = place_nodes(c);
    const RdpOutcome o = run_flood(7, p, c, 100);
    CHECK(o.f == 1.0);
    CHECK(o.reached == 49);
    REQUIRE_FALSE(o.first_receptions_per_slot.empty());
    CHECK(o.first_receptions_per_slot.front() == 49);
}

TEST_CASE("single floods match the brute-force replay") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const NetworkConfig c = config_for(400, 16.0, seed);
        const NodePlacement p = place_nodes(c);
        for (std::uint32_t origin : {0u, 133u, 399u}) {
            const RdpOutcome o = run_flood(origin, p, c, 1000000);
            const auto expect = oracle({origin}, p, c.reception_radius());
            CHECK(o.reached == expect[0].reached);
            CHECK(o.slots_used == expect[0].slots);
            CHECK(o.f == doctest::Approx(expect[0].reached / 399.0));
        }
    }
}

TEST_CASE("concurrent floods match the brute-force replay") {
    const NetworkConfig c = config_for(300, 12.0, 4);
    const NodePlacement p = place_nodes(c);
    const std::vector<std::uint32_t> origins{5, 17, 17, 100, 250, 299, 3, 42};
    const ConcurrentFloods res = run_concurrent_floods(origins, p, c, 1000000);
    const auto expect = oracle(origins, p, c.reception_radius());
    for (std::size_t k = 0; k < origins.size(); ++k) {
        CHECK(res.outcomes[k].reached == expect[k].reached);
        CHECK(res.outcomes[k].slots_used == expect[k].slots);
        CHECK(res.outcomes[k].origin == origins[k]);
    }
}

TEST_CASE("one origin reduces to a single flood") {
    const NetworkConfig c = config_for(512);
    const NodePlacement p = place_nodes(c);
    const std::vector<std::uint32_t> o{77};
    const auto a = run_concurrent_floods(o, p, c, 300).outcomes[0];
    const auto b = run_flood(77, p, c, 300);
    CHECK(a.reached == b.reached);
    CHECK(a.slots_used == b.slots_used);
    CHECK(a.first_receptions_per_slot == b.first_receptions_per_slot);
}

TEST_CASE("disjoint neighbourhoods progress independently") {
    NodePlacement p;
    p.positions = {{0.1, 0.1}, {0.13, 0.1}, {0.8, 0.8}, {0.83, 0.8}};
    NetworkConfig c = config_for(4, 0.04);
    REQUIRE(c.reception_radius() > 0.03);
    REQUIRE(c.reception_radius() < 0.5);
    const std::vector<std::uint32_t> origins{0, 2};
    const ConcurrentFloods res = run_concurrent_floods(origins, p, c, 100);
    for (const auto& o : res.outcomes) {
        CHECK(o.reached == 1);
        CHECK(o.f == doctest::Approx(1.0 / 3.0));
        CHECK(o.slots_used == 2);
        CHECK(o.first_receptions_per_slot == std::vector<std::uint32_t>{1, 0});
    }
}

TEST_CASE("isolated floods percolate at c_a = 16") {
    int good = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const NetworkConfig c = config_for(1024, 16.0, 1000 + seed);
        const NodePlacement p = place_nodes(c);
        if (run_flood(static_cast<std::uint32_t>(seed * 7 % 1024), p, c, 200).f >= 0.9) ++good;
    }
    CHECK(good >= 95);
}

TEST_CASE("concurrent floods reduce each other's reach") {
    double single = 0.0, shared = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const NetworkConfig c = config_for(1024, 16.0, 50 + seed);
        const NodePlacement p = place_nodes(c);
        Rng rng(seed);
        std::vector<std::uint32_t> origins;
        while (origins.size() < 64) {
            const auto v = static_cast<std::uint32_t>(rng.below(1024));
            if (std::find(origins.begin(), origins.end(), v) == origins.end()) origins.push_back(v);
        }
        shared += run_concurrent_floods(origins, p, c, 100000).stats.mean_f;
        double s = 0.0;
        for (std::uint32_t o : origins) s += run_flood(o, p, c, 100000).f;
        single += s / 64.0;
    }
    CHECK(shared < single);
}

TEST_CASE("forward once and reception conservation hold in traces") {
    const NetworkConfig c = config_for(800, 16.0, 9);
    const NodePlacement p = place_nodes(c);
    FloodEngine engine(p, c, {0, true});
    Rng rng(3);
    std::vector<RdpOutcome> done;
    for (int s = 0; s < 400; ++s) {
        for (int k = 0; k < 3; ++k)
            if (s < 200) engine.initiate(static_cast<std::uint32_t>(rng.below(800)));
        for (auto& o : engine.step()) done.push_back(std::move(o));
    }
    for (auto& o : engine.close_all()) done.push_back(std::move(o));
    std::set<std::pair<std::uint32_t, std::uint64_t>> sent;
    std::map<std::uint64_t, std::size_t> received;
    for (const auto& e : engine.trace()) {
        if (e.transmit) CHECK(sent.insert({e.node, e.rdp_id}).second);
        else ++received[e.rdp_id];
    }
    std::size_t total = 0;
    for (const auto& o : done) {
        std::size_t sum = 0;
        for (auto v : o.first_receptions_per_slot) sum += v;
        CHECK(sum == o.reached);
        CHECK(received[o.rdp_id] == o.reached);
        CHECK(o.f >= 0.0);
        CHECK(o.f <= 1.0);
        total += o.reached;
    }
    CHECK(total == engine.first_receptions());

    std::ostringstream os;
    write_flood_trace_csv(os, engine.trace());
    CHECK(os.str().rfind("slot,rdp_id,transmitters,first_receptions\n", 0) == 0);
}

TEST_CASE("slot budget truncates floods") {
    const NetworkConfig c = config_for(2048, 16.0, 2);
    const NodePlacement p = place_nodes(c);
    const RdpOutcome o = run_flood(0, p, c, 3);
    CHECK(o.slots_used <= 3);
    CHECK(o.truncated);
}

TEST_CASE("flood statistics arithmetic") {
    RdpOutcome a;
    a.f = 0.5;
    a.reached = 50;
    a.slots_used = 10;
    const std::vector<RdpOutcome> one{a};
    const FloodStats s1 = flood_stats(one, 101);
    CHECK(s1.mean_f == 0.5);
    CHECK(s1.median_f == 0.5);
    CHECK(s1.gamma_hat == 1.0);
    CHECK(s1.nbar_r == doctest::Approx(5.0));
    CHECK(s1.chat == doctest::Approx(5.0 / 101.0));

    std::vector<RdpOutcome> three(3);
    three[0].f = 0.2;
    three[1].f = 0.4;
    three[2].f = 0.9;
    const FloodStats s3 = flood_stats(three, 10, 4);
    CHECK(s3.mean_f == doctest::Approx(0.5));
    CHECK(s3.median_f == doctest::Approx(0.4));
    CHECK(s3.gamma_hat == doctest::Approx(0.8));
    const std::vector<RdpOutcome> none;
    CHECK_THROWS_AS(flood_stats(none, 10), DomainError);
}
