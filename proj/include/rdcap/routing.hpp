#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "rdcap/rng.hpp"
#include "rdcap/topology.hpp"

namespace rdcap {

// A source-destination path over cells: one horizontal run along the source's row,
// then one vertical run along the destination's column.
struct Route {
    std::uint32_t src = 0;
    std::uint32_t dst = 0;
    std::vector<std::uint32_t> cells;

    // Cell-to-cell transmissions needed to deliver one packet; a same-cell route still
    // takes one hop.
    std::size_t transmissions() const { return cells.size() > 1 ? cells.size() - 1 : 1; }
};

// Number of cells on the L-path from cell `from` to cell `to` on an m-cell grid.
std::size_t l_path_length(std::uint32_t from, std::uint32_t to, std::size_t m);

// The `hop`-th cell (0-based) of that L-path, without materialising the path.
std::uint32_t l_path_cell(std::uint32_t from, std::uint32_t to, std::size_t m, std::size_t hop);

std::vector<std::uint32_t> l_path(std::uint32_t from, std::uint32_t to, std::size_t m);

// Throws InvalidRoute when src == dst.
Route build_route(std::uint32_t src, std::uint32_t dst, const Grid& grid);

// True when the route satisfies every structural invariant on `grid`.
bool route_is_valid(const Route& route, const Grid& grid);

// Uniformly random fixed-point-free permutation: destination[i] != i and no node serves two
// sources. Throws InvalidConfig for n < 2.
std::vector<std::uint32_t> assign_destinations(std::size_t n, Rng& rng);

// Lowest-index node of a cell, or -1 for an empty cell.
std::int64_t relay_node(const Grid& grid, std::uint32_t cell);

struct CellLoads {
    std::vector<std::uint64_t> counts;  // N_i per cell
    std::size_t n = 0;
    double max_ratio = 0.0;             // max_i N_i / sqrt(n ln n)
    double min_ratio = 0.0;             // min_i N_i / sqrt(n ln n)

    std::uint64_t max_count() const;
    std::uint64_t min_count() const;
};

CellLoads cell_loads(std::span<const Route> routes, const Grid& grid);

// Columns: cell_x, cell_y, N_i.
void write_cell_loads_csv(std::ostream& out, const CellLoads& loads, const Grid& grid);

} // namespace rdcap
