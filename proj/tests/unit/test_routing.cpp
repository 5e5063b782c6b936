#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "rdcap/errors.hpp"
#include "rdcap/routing.hpp"

using namespace rdcap;

namespace {

Grid grid_for(std::size_t n, std::uint64_t seed = 1) {
    NetworkConfig c;
    c.n = n;
    c.seed = seed;
    return build_grid(place_nodes(c), c);
}

std::uint32_t node_in(const Grid& g, std::uint32_t cell, std::size_t k = 0) { return g.members.at(cell).at(k); }

// Walks the L path step by step in coordinates.
std::vector<std::uint32_t> walk(CellCoord a, CellCoord b, std::uint32_t m) {
    std::vector<std::uint32_t> out{a.y * m + a.x};
    while (a.x != b.x) {
        a.x = a.x < b.x ? a.x + 1 : a.x - 1;
        out.push_back(a.y * m + a.x);
    }
    while (a.y != b.y) {
        a.y = a.y < b.y ? a.y + 1 : a.y - 1;
        out.push_back(a.y * m + a.x);
    }
    return out;
}

} // namespace

TEST_CASE("route examples on a three by three grid") {
    const Grid g = grid_for(100, 5);
    REQUIRE(g.m == 3);
    auto cell = [&](std::uint32_t x, std::uint32_t y) { return g.index({x, y}); };
    for (std::uint32_t c = 0; c < 9; ++c) REQUIRE(g.members[c].size() >= 2);

    const Route same = build_route(node_in(g, 4, 0), node_in(g, 4, 1), g);
    CHECK(same.cells == std::vector<std::uint32_t>{4});
    CHECK(same.transmissions() == 1);

    const Route row = build_route(node_in(g, cell(0, 1)), node_in(g, cell(2, 1)), g);
    CHECK(row.cells == std::vector<std::uint32_t>{cell(0, 1), cell(1, 1), cell(2, 1)});

    const Route corner = build_route(node_in(g, cell(0, 0)), node_in(g, cell(2, 2)), g);
    CHECK(corner.cells ==
          std::vector<std::uint32_t>{cell(0, 0), cell(1, 0), cell(2, 0), cell(2, 1), cell(2, 2)});
    CHECK(corner.transmissions() == 4);

    CHECK_THROWS_AS(build_route(3, 3, g), InvalidRoute);
}

TEST_CASE("L paths agree with a coordinate walk") {
    for (std::uint32_t m : {1u, 2u, 5u, 17u}) {
        for (std::uint32_t a = 0; a < m * m; ++a) {
            for (std::uint32_t b = 0; b < m * m; b += 3) {
                const auto expect = walk({a % m, a / m}, {b % m, b / m}, m);
                CHECK(l_path(a, b, m) == expect);
                CHECK(l_path_length(a, b, m) == expect.size());
                for (std::size_t h = 0; h < expect.size(); ++h) CHECK(l_path_cell(a, b, m, h) == expect[h]);
            }
        }
    }
}

TEST_CASE("random routes satisfy every structural invariant") {
    const Grid g = grid_for(4096, 3);
    Rng rng(11);
    for (int i = 0; i < 2000; ++i) {
        const auto s = static_cast<std::uint32_t>(rng.below(4096));
        auto d = static_cast<std::uint32_t>(rng.below(4095));
        if (d >= s) ++d;
        const Route r = build_route(s, d, g);
        CHECK(route_is_valid(r, g));
        CHECK(r.cells.front() == g.cell_of[s]);
        CHECK(r.cells.back() == g.cell_of[d]);
        bool vertical = false;
        for (std::size_t k = 1; k < r.cells.size(); ++k) {
            const CellCoord p = g.coord(r.cells[k - 1]), q = g.coord(r.cells[k]);
            const long step = std::abs(static_cast<long>(p.x) - static_cast<long>(q.x)) +
                              std::abs(static_cast<long>(p.y) - static_cast<long>(q.y));
            CHECK(step == 1);
            if (p.y != q.y) vertical = true;
            if (vertical) CHECK(p.x == q.x);
        }
    }
    Route bad = build_route(0, 1, g);
    bad.cells.push_back(bad.cells.back());
    CHECK_FALSE(route_is_valid(bad, g));
}

TEST_CASE("destinations form a derangement") {
    Rng rng(1);
    const auto two = assign_destinations(2, rng);
    CHECK(two == std::vector<std::uint32_t>{1, 0});

    const auto big = assign_destinations(1000, rng);
    std::set<std::uint32_t> targets(big.begin(), big.end());
    CHECK(targets.size() == 1000);
    for (std::uint32_t i = 0; i < 1000; ++i) CHECK(big[i] != i);

    std::map<std::vector<std::uint32_t>, int> seen;
    for (int t = 0; t < 8800; ++t) {
        const auto d = assign_destinations(4, rng);
        std::set<std::uint32_t> img(d.begin(), d.end());
        REQUIRE(img.size() == 4);
        ++seen[d];
    }
    // Four elements have nine derangements, each equally likely.
    CHECK(seen.size() == 9);
    for (const auto& [perm, count] : seen) CHECK(std::abs(count - 978) < 4 * 30);

    Rng a(5), b(5);
    CHECK(assign_destinations(50, a) == assign_destinations(50, b));
    CHECK_THROWS_AS(assign_destinations(1, rng), InvalidConfig);
}

TEST_CASE("relay is the lowest index node in the cell") {
    const Grid g = grid_for(256);
    for (std::uint32_t c = 0; c < g.cell_count(); ++c) {
        if (g.members[c].empty()) CHECK(relay_node(g, c) == -1);
        else CHECK(relay_node(g, c) == *std::min_element(g.members[c].begin(), g.members[c].end()));
    }
}

TEST_CASE("cell loads count traversals exactly") {
    const Grid g = grid_for(1024);
    const std::vector<Route> none;
    const CellLoads empty = cell_loads(none, g);
    CHECK(std::all_of(empty.counts.begin(), empty.counts.end(), [](auto v) { return v == 0; }));

    const Route r = build_route(node_in(g, 0), node_in(g, static_cast<std::uint32_t>(g.cell_count() - 1)), g);
    const std::vector<Route> one{r};
    const CellLoads l1 = cell_loads(one, g);
    std::size_t ones = 0;
    for (std::uint32_t c = 0; c < l1.counts.size(); ++c) {
        const bool on = std::find(r.cells.begin(), r.cells.end(), c) != r.cells.end();
        CHECK(l1.counts[c] == (on ? 1u : 0u));
        ones += l1.counts[c];
    }
    CHECK(ones == r.cells.size());

    Rng rng(2);
    const auto dest = assign_destinations(1024, rng);
    std::vector<Route> routes;
    std::size_t cells = 0;
    for (std::uint32_t i = 0; i < 1024; ++i) {
        routes.push_back(build_route(i, dest[i], g));
        cells += routes.back().cells.size();
    }
    const CellLoads all = cell_loads(routes, g);
    std::size_t sum = 0;
    for (auto v : all.counts) sum += v;
    CHECK(sum == cells);
    const double scale = std::sqrt(1024.0 * std::log(1024.0));
    CHECK(all.max_ratio == doctest::Approx(static_cast<double>(all.max_count()) / scale));
    CHECK(all.min_ratio == doctest::Approx(static_cast<double>(all.min_count()) / scale));

    std::ostringstream os;
    write_cell_loads_csv(os, all, g);
    CHECK(os.str().rfind("cell_x,cell_y,N_i\n", 0) == 0);
}

TEST_CASE("maximum cell load stays within a bounded multiple of sqrt(n ln n)") {
    std::vector<double> ratios;
    for (std::size_t n : {256u, 1024u, 4096u, 16384u}) {
        const Grid g = grid_for(n, 9);
        Rng rng(n);
        const auto dest = assign_destinations(n, rng);
        std::vector<Route> routes;
        for (std::uint32_t i = 0; i < n; ++i) routes.push_back(build_route(i, dest[i], g));
        const CellLoads l = cell_loads(routes, g);
        CHECK(l.max_ratio >= 0.3);
        CHECK(l.max_ratio <= 10.0);
        CHECK(l.min_ratio > 0.0);
        ratios.push_back(l.max_ratio);
    }
    const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
    CHECK(*hi / *lo < 4.0);
}
