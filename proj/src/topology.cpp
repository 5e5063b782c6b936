#include "rdcap/topology.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rdcap/errors.hpp"
#include "rdcap/rng.hpp"

namespace rdcap {

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

NodePlacement place_nodes(const NetworkConfig& config) {
    if (config.n < 1) throw InvalidConfig("place_nodes: n must be >= 1");
    NodePlacement out;
    out.seed = config.seed;
    out.positions.resize(config.n);
    Rng rng(stream_seed(config.seed, Stream::placement));
    for (auto& p : out.positions) {
        p.x = rng.uniform();
        p.y = rng.uniform();
    }
    return out;
}

double cell_side(std::size_t n) {
    if (n < 2) throw DomainError("cell_side: n must be >= 2");
    const double nd = static_cast<double>(n);
    return std::sqrt(2.0 * std::log(nd) / nd);
}

double min_transmission_range(std::size_t n) {
    if (n < 2) throw DomainError("min_transmission_range: n must be >= 2");
    const double nd = static_cast<double>(n);
    return std::sqrt(std::log(nd) / (std::numbers::pi * nd));
}

double empty_cell_bound(std::size_t n) {
    if (n < 2) throw DomainError("empty_cell_bound: n must be >= 2");
    const double nd = static_cast<double>(n);
    return 1.0 / (2.0 * nd * std::log(nd));
}

std::size_t cells_per_side(std::size_t n) {
    if (n < 2) return 1;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(1.0 / cell_side(n))));
}

std::uint32_t axis_cell(double c, std::size_t m) {
    const double scaled = std::ceil(c * static_cast<double>(m)) - 1.0;
    if (scaled <= 0.0) return 0;
    if (scaled >= static_cast<double>(m - 1)) return static_cast<std::uint32_t>(m - 1);
    return static_cast<std::uint32_t>(scaled);
}

double data_range(double side) { return std::sqrt(5.0) * side; }

double cell_gap(const Grid& grid, std::uint32_t a, std::uint32_t b) {
    const CellCoord ca = grid.coord(a);
    const CellCoord cb = grid.coord(b);
    const auto gap = [](std::uint32_t u, std::uint32_t v) {
        const long d = std::labs(static_cast<long>(u) - static_cast<long>(v));
        return static_cast<double>(std::max(d - 1, 0L));
    };
    return grid.side * std::hypot(gap(ca.x, cb.x), gap(ca.y, cb.y));
}

Grid build_grid(const NodePlacement& placement, const NetworkConfig& config) {
    Grid grid;
    grid.m = cells_per_side(placement.size());
    grid.side = 1.0 / static_cast<double>(grid.m);
    grid.range = data_range(grid.side);
    grid.cell_of.resize(placement.size());
    grid.members.assign(grid.cell_count(), {});
    for (std::size_t i = 0; i < placement.size(); ++i) {
        const std::uint32_t c = grid.cell_at(placement.positions[i]);
        grid.cell_of[i] = c;
        grid.members[c].push_back(static_cast<std::uint32_t>(i));
    }
    grid.interference = interfering_neighbors(grid, config);
    return grid;
}

CellAdjacency interfering_neighbors(const Grid& grid, const NetworkConfig& config) {
    const double limit = (2.0 + config.delta) * grid.range;
    const long m = static_cast<long>(grid.m);
    // Offsets beyond this many cells are always at least `limit` apart.
    const long reach = std::min(m - 1, static_cast<long>(std::ceil(limit / grid.side)) + 1);
    CellAdjacency adj(grid.cell_count());
    for (long y = 0; y < m; ++y) {
        for (long x = 0; x < m; ++x) {
            const auto a = static_cast<std::uint32_t>(y * m + x);
            for (long dy = -reach; dy <= reach; ++dy) {
                for (long dx = -reach; dx <= reach; ++dx) {
                    const long bx = x + dx, by = y + dy;
                    if ((dx == 0 && dy == 0) || bx < 0 || by < 0 || bx >= m || by >= m) continue;
                    const auto b = static_cast<std::uint32_t>(by * m + bx);
                    if (cell_gap(grid, a, b) < limit * (1.0 - 1e-12)) adj[a].push_back(b);
                }
            }
            std::sort(adj[a].begin(), adj[a].end());
        }
    }
    return adj;
}

std::size_t max_degree(const CellAdjacency& adjacency) {
    std::size_t d = 0;
    for (const auto& row : adjacency) d = std::max(d, row.size());
    return d;
}

} // namespace rdcap
