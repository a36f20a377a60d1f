#pragma once

#include "cpo/random.hpp"
#include "cpo/types.hpp"

#include <Eigen/SparseCore>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace cpo {

// ---------------------------------------------------------------------------
// Fractional knapsack

struct KnapsackInstance {
    Vector weights; // p, entries >= 0
    double budget{0}; // B
};

/// p ~ U([0,1000]^n), u ~ U(0,1), B ~ U(max p, sum p - u max p).
KnapsackInstance sample_knapsack_instance(Index n, Rng& rng);

struct KnapsackSolution {
    Vector w;
    double value{0}; // -c^T w
};

/// Exact optimum of min -c^T w over w in [0,1]^n, p^T w <= B (greedy by c_i/p_i).
KnapsackSolution nominal_knapsack(const Vector& c, const KnapsackInstance& instance);

// ---------------------------------------------------------------------------
// Road graphs

struct Edge {
    Index src{0};
    Index dst{0};
    double length_m{0};
    double speed_kmh{0};
    std::string category;
};

struct Graph {
    std::vector<std::string> node_labels;
    std::vector<Edge> edges;
    /// Planar coordinates per node; empty when the source had none.
    std::vector<Eigen::Vector2d> coords;

    Index num_nodes() const { return static_cast<Index>(node_labels.size()); }
    Index num_edges() const { return static_cast<Index>(edges.size()); }
    /// Travel time in seconds, length / speed.
    Vector nominal_costs() const;
};

/// rows x cols lattice with a directed edge each way between 4-neighbours,
/// 100 m blocks, node (i, j) at coordinate (j, i).
Graph grid_graph(Index rows, Index cols);

/// Node-arc incidence: A(v,e) = +1 if e leaves v, -1 if it enters v.
Eigen::SparseMatrix<double> build_incidence(const Graph& graph);

/// Demand vector: +1 at the source, -1 at the target.
Vector flow_demand(Index num_nodes, Index source, Index target);

struct ShortestPath {
    std::vector<Index> edges; // in path order
    double cost{0};
};

/// Dijkstra over nonnegative costs. Throws Infeasible when t is unreachable.
ShortestPath shortest_path(const Graph& graph, const Vector& costs, Index source, Index target);

/// Indicator flow of a path, satisfies A w = b.
Vector path_flow(const Graph& graph, const ShortestPath& path);

/// Reads `src,dst,length_m,speed_kmh,category` rows. Empty speeds are imputed
/// with the mean speed of the same category.
Graph read_graph_csv(std::istream& in);
Graph ingest_graph(const std::filesystem::path& edges_csv);
void write_graph_csv(std::ostream& out, const Graph& graph);

/// Optional `id,x,y` sidecar giving node coordinates.
void read_node_coords(std::istream& in, Graph& graph);
void write_node_coords(std::ostream& out, const Graph& graph);

// ---------------------------------------------------------------------------
// Precipitation grids

struct BoundingBox {
    double x_min{0}, x_max{1}, y_min{0}, y_max{1};
};

/// W x H nonnegative field; values(px, py).
struct PrecipGrid {
    Matrix values;
    BoundingBox bbox;

    Index width() const { return values.rows(); }
    Index height() const { return values.cols(); }
};

/// Pixel containing a planar coordinate, floor((c - min) / (max - min) * size)
/// clamped to the last pixel.
std::pair<Index, Index> pixel_lookup(const Eigen::Vector2d& coord, const BoundingBox& bbox, Index width,
                                     Index height);

/// c_e = c~_e * exp((Y[p(e_s)] + Y[p(e_t)]) / 2)
Vector precip_to_edge_weights(const PrecipGrid& grid, const Graph& graph);
Vector precip_to_edge_weights(const PrecipGrid& grid, const Graph& graph, const Vector& nominal_costs);

/// Plain-text matrix, H lines of W values.
void write_precip_text(std::ostream& out, const Matrix& values);
Matrix read_precip_text(std::istream& in);
/// Text matrix plus `<path>.json` sidecar holding the bounding box.
void save_precip_grid(const std::filesystem::path& path, const PrecipGrid& grid);
PrecipGrid load_precip_grid(const std::filesystem::path& path);

} // namespace cpo
