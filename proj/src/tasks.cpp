#include "cpo/tasks.hpp"

#include "cpo/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <queue>
#include <sstream>
#include <unordered_map>

namespace cpo {

KnapsackInstance sample_knapsack_instance(Index n, Rng& rng) {
    if (n <= 0)
        throw InvalidArgument("sample_knapsack_instance: n must be positive");
    std::uniform_real_distribution<double> weight(0.0, 1000.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    KnapsackInstance inst;
    inst.weights.resize(n);
    for (Index i = 0; i < n; ++i)
        inst.weights[i] = weight(rng);
    const double max_p = inst.weights.maxCoeff();
    const double sum_p = inst.weights.sum();
    const double u = unit(rng);
    const double hi = sum_p - u * max_p;
    inst.budget = hi > max_p ? std::uniform_real_distribution<double>(max_p, hi)(rng) : max_p;
    return inst;
}

KnapsackSolution nominal_knapsack(const Vector& c, const KnapsackInstance& instance) {
    const Index n = instance.weights.size();
    if (c.size() != n)
        throw InvalidArgument("nominal_knapsack: cost/weight dimension mismatch");
    std::vector<Index> order;
    for (Index i = 0; i < n; ++i)
        if (c[i] > 0)
            order.push_back(i);
    // Zero-weight items have infinite ratio and go first.
    auto ratio = [&](Index i) {
        return instance.weights[i] > 0 ? c[i] / instance.weights[i] : kInf;
    };
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return ratio(a) > ratio(b); });

    KnapsackSolution sol{Vector::Zero(n), 0.0};
    double remaining = instance.budget;
    for (Index i : order) {
        const double p = instance.weights[i];
        if (p <= remaining) {
            sol.w[i] = 1.0;
            remaining -= p;
        } else {
            sol.w[i] = remaining / p;
            break;
        }
    }
    sol.value = -c.dot(sol.w);
    return sol;
}

Vector Graph::nominal_costs() const {
    Vector costs(num_edges());
    for (Index e = 0; e < num_edges(); ++e) {
        const Edge& edge = edges[static_cast<std::size_t>(e)];
        costs[e] = edge.length_m / (edge.speed_kmh / 3.6);
    }
    return costs;
}

Graph grid_graph(Index rows, Index cols) {
    if (rows < 1 || cols < 1 || rows * cols < 2)
        throw InvalidArgument("grid_graph: need at least two nodes");
    Graph g;
    auto id = [cols](Index i, Index j) { return i * cols + j; };
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) {
            g.node_labels.push_back(std::to_string(id(i, j)));
            g.coords.emplace_back(static_cast<double>(j), static_cast<double>(i));
        }
    // Every third row/column is a faster arterial.
    auto add = [&](Index a, Index b, bool arterial) {
        g.edges.push_back({a, b, 100.0, arterial ? 40.0 : 25.0, arterial ? "secondary" : "residential"});
    };
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) {
            if (j + 1 < cols) {
                add(id(i, j), id(i, j + 1), i % 3 == 0);
                add(id(i, j + 1), id(i, j), i % 3 == 0);
            }
            if (i + 1 < rows) {
                add(id(i, j), id(i + 1, j), j % 3 == 0);
                add(id(i + 1, j), id(i, j), j % 3 == 0);
            }
        }
    return g;
}

Eigen::SparseMatrix<double> build_incidence(const Graph& graph) {
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(2 * graph.edges.size());
    for (Index e = 0; e < graph.num_edges(); ++e) {
        const Edge& edge = graph.edges[static_cast<std::size_t>(e)];
        if (edge.src == edge.dst)
            throw InvalidArgument("build_incidence: self-loop at edge " + std::to_string(e));
        entries.emplace_back(edge.src, e, 1.0);
        entries.emplace_back(edge.dst, e, -1.0);
    }
    Eigen::SparseMatrix<double> a(graph.num_nodes(), graph.num_edges());
    a.setFromTriplets(entries.begin(), entries.end());
    return a;
}

Vector flow_demand(Index num_nodes, Index source, Index target) {
    if (source == target)
        throw InvalidArgument("flow_demand: source equals target");
    if (source < 0 || target < 0 || source >= num_nodes || target >= num_nodes)
        throw InvalidArgument("flow_demand: node out of range");
    Vector b = Vector::Zero(num_nodes);
    b[source] = 1.0;
    b[target] = -1.0;
    return b;
}

ShortestPath shortest_path(const Graph& graph, const Vector& costs, Index source, Index target) {
    if (costs.size() != graph.num_edges())
        throw InvalidArgument("shortest_path: cost vector size mismatch");
    if ((costs.array() < 0).any())
        throw InvalidArgument("shortest_path: negative edge cost");
    const auto n = static_cast<std::size_t>(graph.num_nodes());
    std::vector<std::vector<Index>> out(n);
    for (Index e = 0; e < graph.num_edges(); ++e)
        out[static_cast<std::size_t>(graph.edges[static_cast<std::size_t>(e)].src)].push_back(e);

    std::vector<double> dist(n, kInf);
    std::vector<Index> via(n, -1);
    using Item = std::pair<double, Index>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[static_cast<std::size_t>(source)] = 0.0;
    heap.emplace(0.0, source);
    while (!heap.empty()) {
        const auto [d, v] = heap.top();
        heap.pop();
        if (d > dist[static_cast<std::size_t>(v)])
            continue;
        if (v == target)
            break;
        for (Index e : out[static_cast<std::size_t>(v)]) {
            const auto u = static_cast<std::size_t>(graph.edges[static_cast<std::size_t>(e)].dst);
            const double nd = d + costs[e];
            if (nd < dist[u]) {
                dist[u] = nd;
                via[u] = e;
                heap.emplace(nd, static_cast<Index>(u));
            }
        }
    }
    if (!std::isfinite(dist[static_cast<std::size_t>(target)]))
        throw Infeasible("shortest_path: target unreachable from source");

    ShortestPath path;
    for (Index v = target; v != source;) {
        const Index e = via[static_cast<std::size_t>(v)];
        path.edges.push_back(e);
        v = graph.edges[static_cast<std::size_t>(e)].src;
    }
    std::reverse(path.edges.begin(), path.edges.end());
    for (Index e : path.edges)
        path.cost += costs[e];
    return path;
}

Vector path_flow(const Graph& graph, const ShortestPath& path) {
    Vector w = Vector::Zero(graph.num_edges());
    for (Index e : path.edges)
        w[e] = 1.0;
    return w;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ','))
        fields.push_back(field);
    if (!line.empty() && line.back() == ',')
        fields.emplace_back();
    return fields;
}

std::string trim(std::string s) {
    const auto not_space = [](unsigned char ch) { return !std::isspace(ch); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

bool parse_double(const std::string& s, double& out) {
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

} // namespace

Graph read_graph_csv(std::istream& in) {
    Graph g;
    std::unordered_map<std::string, Index> ids;
    auto node = [&](const std::string& label) {
        auto [it, inserted] = ids.try_emplace(label, g.num_nodes());
        if (inserted)
            g.node_labels.push_back(label);
        return it->second;
    };

    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::vector<std::size_t> missing;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (trim(line).empty())
            continue;
        if (!header_seen) {
            if (trim(line) != "src,dst,length_m,speed_kmh,category")
                throw InvalidArgument("graph csv line " + std::to_string(line_no) + ": unexpected header");
            header_seen = true;
            continue;
        }
        auto fields = split_csv(line);
        if (fields.size() != 5)
            throw InvalidArgument("graph csv line " + std::to_string(line_no) + ": expected 5 fields");
        for (auto& f : fields)
            f = trim(f);
        if (fields[0].empty() || fields[1].empty())
            throw InvalidArgument("graph csv line " + std::to_string(line_no) + ": empty node id");
        Edge e;
        e.src = node(fields[0]);
        e.dst = node(fields[1]);
        if (!parse_double(fields[2], e.length_m) || !(e.length_m >= 0))
            throw InvalidArgument("graph csv line " + std::to_string(line_no) + ": bad length_m");
        if (fields[3].empty()) {
            e.speed_kmh = std::numeric_limits<double>::quiet_NaN();
            missing.push_back(g.edges.size());
        } else if (!parse_double(fields[3], e.speed_kmh) || !(e.speed_kmh > 0)) {
            throw InvalidArgument("graph csv line " + std::to_string(line_no) + ": bad speed_kmh");
        }
        e.category = fields[4];
        g.edges.push_back(std::move(e));
    }
    if (!header_seen)
        throw InvalidArgument("graph csv: missing header");

    if (!missing.empty()) {
        std::map<std::string, std::pair<double, int>> by_category;
        for (const Edge& e : g.edges)
            if (!std::isnan(e.speed_kmh)) {
                auto& acc = by_category[e.category];
                acc.first += e.speed_kmh;
                acc.second += 1;
            }
        for (std::size_t idx : missing) {
            Edge& e = g.edges[idx];
            auto it = by_category.find(e.category);
            if (it == by_category.end())
                throw InvalidArgument("graph csv: cannot impute speed for category '" + e.category +
                                      "' (no edges of that category carry a speed)");
            e.speed_kmh = it->second.first / it->second.second;
        }
    }
    return g;
}

Graph ingest_graph(const std::filesystem::path& edges_csv) {
    std::ifstream in(edges_csv);
    if (!in)
        throw InvalidArgument("cannot open graph file " + edges_csv.string());
    return read_graph_csv(in);
}

void write_graph_csv(std::ostream& out, const Graph& graph) {
    out << "src,dst,length_m,speed_kmh,category\n";
    std::ostringstream row;
    row.precision(17);
    for (const Edge& e : graph.edges) {
        row.str("");
        row << graph.node_labels[static_cast<std::size_t>(e.src)] << ','
            << graph.node_labels[static_cast<std::size_t>(e.dst)] << ',' << e.length_m << ','
            << e.speed_kmh << ',' << e.category << '\n';
        out << row.str();
    }
}

void read_node_coords(std::istream& in, Graph& graph) {
    std::unordered_map<std::string, Index> ids;
    for (Index v = 0; v < graph.num_nodes(); ++v)
        ids.emplace(graph.node_labels[static_cast<std::size_t>(v)], v);
    std::vector<Eigen::Vector2d> coords(static_cast<std::size_t>(graph.num_nodes()),
                                        Eigen::Vector2d::Constant(std::numeric_limits<double>::quiet_NaN()));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (trim(line).empty() || (line_no == 1 && trim(line) == "id,x,y"))
            continue;
        auto fields = split_csv(line);
        double x = 0, y = 0;
        if (fields.size() != 3 || !parse_double(trim(fields[1]), x) || !parse_double(trim(fields[2]), y))
            throw InvalidArgument("node csv line " + std::to_string(line_no) + ": expected id,x,y");
        auto it = ids.find(trim(fields[0]));
        if (it == ids.end())
            throw InvalidArgument("node csv line " + std::to_string(line_no) + ": unknown node");
        coords[static_cast<std::size_t>(it->second)] = {x, y};
    }
    for (const auto& c : coords)
        if (c.hasNaN())
            throw InvalidArgument("node csv: some nodes have no coordinates");
    graph.coords = std::move(coords);
}

void write_node_coords(std::ostream& out, const Graph& graph) {
    out << "id,x,y\n";
    std::ostringstream row;
    row.precision(17);
    for (std::size_t v = 0; v < graph.coords.size(); ++v) {
        row.str("");
        row << graph.node_labels[v] << ',' << graph.coords[v].x() << ',' << graph.coords[v].y() << '\n';
        out << row.str();
    }
}

std::pair<Index, Index> pixel_lookup(const Eigen::Vector2d& coord, const BoundingBox& bbox, Index width,
                                     Index height) {
    if (!(bbox.x_max > bbox.x_min) || !(bbox.y_max > bbox.y_min))
        throw InvalidArgument("pixel_lookup: degenerate bounding box");
    if (width < 1 || height < 1)
        throw InvalidArgument("pixel_lookup: empty grid");
    auto index = [](double c, double lo, double hi, Index size) {
        const auto p = static_cast<Index>(std::floor((c - lo) / (hi - lo) * static_cast<double>(size)));
        return std::clamp<Index>(p, 0, size - 1);
    };
    return {index(coord.x(), bbox.x_min, bbox.x_max, width), index(coord.y(), bbox.y_min, bbox.y_max, height)};
}

Vector precip_to_edge_weights(const PrecipGrid& grid, const Graph& graph) {
    return precip_to_edge_weights(grid, graph, graph.nominal_costs());
}

Vector precip_to_edge_weights(const PrecipGrid& grid, const Graph& graph, const Vector& nominal_costs) {
    if (graph.coords.size() != static_cast<std::size_t>(graph.num_nodes()))
        throw InvalidArgument("precip_to_edge_weights: graph has no node coordinates");
    std::vector<double> node_precip(graph.coords.size());
    for (std::size_t v = 0; v < graph.coords.size(); ++v) {
        const auto [px, py] = pixel_lookup(graph.coords[v], grid.bbox, grid.width(), grid.height());
        node_precip[v] = grid.values(px, py);
    }
    Vector c(graph.num_edges());
    for (Index e = 0; e < graph.num_edges(); ++e) {
        const Edge& edge = graph.edges[static_cast<std::size_t>(e)];
        const double mean = 0.5 * (node_precip[static_cast<std::size_t>(edge.src)] +
                                   node_precip[static_cast<std::size_t>(edge.dst)]);
        c[e] = nominal_costs[e] * std::exp(mean);
    }
    return c;
}

void write_precip_text(std::ostream& out, const Matrix& values) {
    std::ostringstream row;
    row.precision(17);
    for (Index py = 0; py < values.cols(); ++py) {
        row.str("");
        for (Index px = 0; px < values.rows(); ++px)
            row << (px ? " " : "") << values(px, py);
        row << '\n';
        out << row.str();
    }
}

Matrix read_precip_text(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty())
            continue;
        std::istringstream ss(line);
        std::vector<double> row;
        std::string tok;
        while (ss >> tok) {
            double v = 0;
            if (!parse_double(tok, v) || !(v >= 0))
                throw InvalidArgument("precipitation grid line " + std::to_string(rows.size() + 1) +
                                      ": values must be nonnegative reals");
            row.push_back(v);
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw InvalidArgument("precipitation grid line " + std::to_string(rows.size() + 1) +
                                  ": ragged row");
        rows.push_back(std::move(row));
    }
    if (rows.empty() || rows.front().empty())
        throw InvalidArgument("precipitation grid: empty");
    Matrix values(static_cast<Index>(rows.front().size()), static_cast<Index>(rows.size()));
    for (std::size_t py = 0; py < rows.size(); ++py)
        for (std::size_t px = 0; px < rows[py].size(); ++px)
            values(static_cast<Index>(px), static_cast<Index>(py)) = rows[py][px];
    return values;
}

void save_precip_grid(const std::filesystem::path& path, const PrecipGrid& grid) {
    {
        std::ofstream out(path);
        if (!out)
            throw InvalidArgument("cannot write " + path.string());
        write_precip_text(out, grid.values);
    }
    nlohmann::json bbox = {{"x_min", grid.bbox.x_min},
                           {"x_max", grid.bbox.x_max},
                           {"y_min", grid.bbox.y_min},
                           {"y_max", grid.bbox.y_max}};
    std::ofstream side(path.string() + ".json");
    side << bbox.dump(2) << '\n';
}

PrecipGrid load_precip_grid(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw InvalidArgument("cannot open " + path.string());
    PrecipGrid grid;
    grid.values = read_precip_text(in);
    std::ifstream side(path.string() + ".json");
    if (!side)
        throw InvalidArgument("missing bounding-box sidecar " + path.string() + ".json");
    const auto j = nlohmann::json::parse(side);
    grid.bbox = {j.at("x_min").get<double>(), j.at("x_max").get<double>(), j.at("y_min").get<double>(),
                 j.at("y_max").get<double>()};
    if (!(grid.bbox.x_max > grid.bbox.x_min) || !(grid.bbox.y_max > grid.bbox.y_min))
        throw InvalidArgument("precipitation grid: degenerate bounding box");
    return grid;
}

} // namespace cpo
