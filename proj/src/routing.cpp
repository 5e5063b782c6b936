#include "rdcap/routing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "rdcap/errors.hpp"

namespace rdcap {

namespace {

long span_len(std::uint32_t a, std::uint32_t b) {
    return std::labs(static_cast<long>(a) - static_cast<long>(b));
}

} // namespace

std::size_t l_path_length(std::uint32_t from, std::uint32_t to, std::size_t m) {
    const auto mm = static_cast<std::uint32_t>(m);
    return static_cast<std::size_t>(span_len(from % mm, to % mm) + span_len(from / mm, to / mm) + 1);
}

std::uint32_t l_path_cell(std::uint32_t from, std::uint32_t to, std::size_t m, std::size_t hop) {
    const auto mm = static_cast<std::uint32_t>(m);
    const long fx = from % mm, fy = from / mm, tx = to % mm, ty = to / mm;
    const long h = static_cast<long>(hop);
    const long horiz = std::labs(tx - fx);
    long x, y;
    if (h <= horiz) {
        x = fx + (tx >= fx ? h : -h);
        y = fy;
    } else {
        x = tx;
        const long v = h - horiz;
        y = fy + (ty >= fy ? v : -v);
    }
    return static_cast<std::uint32_t>(y * static_cast<long>(mm) + x);
}

std::vector<std::uint32_t> l_path(std::uint32_t from, std::uint32_t to, std::size_t m) {
    const std::size_t len = l_path_length(from, to, m);
    std::vector<std::uint32_t> cells(len);
    for (std::size_t h = 0; h < len; ++h) cells[h] = l_path_cell(from, to, m, h);
    return cells;
}

Route build_route(std::uint32_t src, std::uint32_t dst, const Grid& grid) {
    if (src == dst) throw InvalidRoute("build_route: source and destination coincide");
    if (src >= grid.cell_of.size() || dst >= grid.cell_of.size())
        throw InvalidRoute("build_route: node index out of range");
    return Route{src, dst, l_path(grid.cell_of[src], grid.cell_of[dst], grid.m)};
}

bool route_is_valid(const Route& route, const Grid& grid) {
    if (route.src == route.dst || route.cells.empty()) return false;
    if (route.cells.front() != grid.cell_of[route.src]) return false;
    if (route.cells.back() != grid.cell_of[route.dst]) return false;
    bool vertical_started = false;
    for (std::size_t i = 1; i < route.cells.size(); ++i) {
        const CellCoord a = grid.coord(route.cells[i - 1]);
        const CellCoord b = grid.coord(route.cells[i]);
        const long dx = span_len(a.x, b.x), dy = span_len(a.y, b.y);
        if (dx + dy != 1) return false;
        if (dy == 1) vertical_started = true;
        else if (vertical_started) return false;  // horizontal step after the vertical run
    }
    // A run must not reverse direction.
    return route.cells.size() == l_path_length(route.cells.front(), route.cells.back(), grid.m);
}

std::vector<std::uint32_t> assign_destinations(std::size_t n, Rng& rng) {
    if (n < 2) throw InvalidConfig("assign_destinations: need at least two nodes");
    std::vector<std::uint32_t> perm(n);
    // Rejection over uniform shuffles gives a uniform derangement (about e tries).
    for (;;) {
        std::iota(perm.begin(), perm.end(), 0u);
        for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) ok = perm[i] != i;
        if (ok) return perm;
    }
}

std::int64_t relay_node(const Grid& grid, std::uint32_t cell) {
    const auto& mem = grid.members.at(cell);
    return mem.empty() ? -1 : static_cast<std::int64_t>(mem.front());
}

std::uint64_t CellLoads::max_count() const {
    return counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
}

std::uint64_t CellLoads::min_count() const {
    return counts.empty() ? 0 : *std::min_element(counts.begin(), counts.end());
}

CellLoads cell_loads(std::span<const Route> routes, const Grid& grid) {
    CellLoads loads;
    loads.n = grid.cell_of.size();
    loads.counts.assign(grid.cell_count(), 0);
    for (const auto& r : routes)
        for (std::uint32_t c : r.cells) ++loads.counts.at(c);
    if (loads.n >= 2) {
        const double nd = static_cast<double>(loads.n);
        const double scale = std::sqrt(nd * std::log(nd));
        loads.max_ratio = static_cast<double>(loads.max_count()) / scale;
        loads.min_ratio = static_cast<double>(loads.min_count()) / scale;
    }
    return loads;
}

void write_cell_loads_csv(std::ostream& out, const CellLoads& loads, const Grid& grid) {
    out << "cell_x,cell_y,N_i\n";
    for (std::uint32_t c = 0; c < loads.counts.size(); ++c) {
        const CellCoord xy = grid.coord(c);
        out << xy.x << ',' << xy.y << ',' << loads.counts[c] << '\n';
    }
}

} // namespace rdcap
