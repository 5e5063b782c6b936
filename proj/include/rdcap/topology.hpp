#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rdcap/config.hpp"

namespace rdcap {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

double distance(Point a, Point b);

struct NodePlacement {
    std::vector<Point> positions;
    std::uint64_t seed = 0;

    std::size_t size() const { return positions.size(); }
};

// n i.i.d. uniform points on the unit square, drawn from the placement stream of config.seed.
NodePlacement place_nodes(const NetworkConfig& config);

// Tessellation cell side g(n) = sqrt(2 ln n / n). Requires n >= 2.
double cell_side(std::size_t n);

// Connectivity threshold sqrt(ln n / (pi n)) that the data range may not undercut.
double min_transmission_range(std::size_t n);

// Probability bound 1 / (2 n ln n) on the event that some cell is empty. Requires n >= 2.
double empty_cell_bound(std::size_t n);

struct CellCoord {
    std::uint32_t x = 0;
    std::uint32_t y = 0;
    bool operator==(const CellCoord&) const = default;
};

using CellAdjacency = std::vector<std::vector<std::uint32_t>>;

// Cells per side for n nodes: max(1, floor(1 / g(n))), or 1 when n < 2.
std::size_t cells_per_side(std::size_t n);

// Cell containing coordinate c in [0,1] on an m-cell axis. Points on a shared edge go to
// the lower-index cell and 1.0 clamps to the last cell.
std::uint32_t axis_cell(double c, std::size_t m);

struct Grid {
    std::size_t m = 1;                          // cells per side
    double side = 1.0;                          // 1/m
    double range = 0.0;                         // data transmission range r
    std::vector<std::uint32_t> cell_of;         // node -> cell
    std::vector<std::vector<std::uint32_t>> members;  // cell -> nodes, ascending
    CellAdjacency interference;

    std::size_t cell_count() const { return m * m; }
    std::uint32_t index(CellCoord c) const { return c.y * static_cast<std::uint32_t>(m) + c.x; }
    CellCoord coord(std::uint32_t cell) const {
        return {cell % static_cast<std::uint32_t>(m), cell / static_cast<std::uint32_t>(m)};
    }
    std::uint32_t cell_at(Point p) const { return index({axis_cell(p.x, m), axis_cell(p.y, m)}); }
};

// Data range used by the cell construction: sqrt(5) * side, the largest distance between
// points of two edge-adjacent cells.
double data_range(double side);

// Shortest distance between two closed cells of the grid.
double cell_gap(const Grid& grid, std::uint32_t a, std::uint32_t b);

// Tessellates the unit square and fills the interference adjacency.
Grid build_grid(const NodePlacement& placement, const NetworkConfig& config);

// Cells A != B interfere iff their closed squares come closer than (2 + delta) * r. Gaps equal
// to the limit up to rounding count as not interfering.
CellAdjacency interfering_neighbors(const Grid& grid, const NetworkConfig& config);

std::size_t max_degree(const CellAdjacency& adjacency);

} // namespace rdcap
