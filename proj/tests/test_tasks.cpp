#include "cpo/errors.hpp"
#include "cpo/tasks.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace cpo;

TEST_CASE("knapsack greedy matches brute force over fractional items") {
    Rng rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const KnapsackInstance inst = sample_knapsack_instance(4, rng);
        CHECK(inst.budget >= inst.weights.maxCoeff());
        CHECK(inst.budget <= inst.weights.sum());
        std::normal_distribution<double> g;
        Vector c(4);
        for (Index i = 0; i < 4; ++i)
            c[i] = g(rng);
        const KnapsackSolution sol = nominal_knapsack(c, inst);
        CHECK(inst.weights.dot(sol.w) <= inst.budget + 1e-9);
        CHECK(sol.value == doctest::Approx(-c.dot(sol.w)));
        // LP vertex oracle
        Matrix a = Matrix::Zero(5, 9);
        a.block(0, 0, 1, 4) = inst.weights.transpose();
        a(0, 4) = 1;
        a.block(1, 0, 4, 4) = Matrix::Identity(4, 4);
        a.block(1, 5, 4, 4) = Matrix::Identity(4, 4);
        Vector b(5);
        b << inst.budget, Vector::Ones(4);
        Vector cost = Vector::Zero(9);
        cost.head(4) = -c;
        CHECK(sol.value == doctest::Approx(*oracle::simplex_min(a, b, cost)).epsilon(1e-9));
    }
}

TEST_CASE("grid graph layout") {
    const Graph g = grid_graph(2, 3);
    CHECK(g.num_nodes() == 6);
    // horizontal 2 * 2 + vertical 3 * 1, each both ways
    CHECK(g.num_edges() == 14);
    CHECK(g.coords[4].x() == 1.0);
    CHECK(g.coords[4].y() == 1.0);
    const Vector cost = g.nominal_costs();
    for (Index e = 0; e < g.num_edges(); ++e)
        CHECK(cost[e] == doctest::Approx(g.edges[static_cast<std::size_t>(e)].length_m /
                                         (g.edges[static_cast<std::size_t>(e)].speed_kmh / 3.6)));
}

TEST_CASE("incidence matrix and path flows") {
    const Graph g = grid_graph(3, 3);
    const auto a = build_incidence(g);
    CHECK(a.rows() == 9);
    CHECK(a.cols() == g.num_edges());
    const Vector b = flow_demand(9, 0, 8);
    const ShortestPath p = shortest_path(g, g.nominal_costs(), 0, 8);
    const Vector w = path_flow(g, p);
    CHECK((a * w - b).cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.nominal_costs().dot(w) == doctest::Approx(p.cost));
    CHECK(p.edges.size() == 4);
}

TEST_CASE("shortest path matches the LP on random costs") {
    Rng rng(2);
    std::uniform_real_distribution<double> u(0.1, 5.0);
    const Graph g = grid_graph(3, 4);
    for (int trial = 0; trial < 5; ++trial) {
        Vector cost(g.num_edges());
        for (Index e = 0; e < cost.size(); ++e)
            cost[e] = u(rng);
        const double sp = shortest_path(g, cost, 0, 11).cost;
        const auto lp = oracle::box_lp_min(Matrix(build_incidence(g)), flow_demand(12, 0, 11), cost);
        REQUIRE(lp);
        CHECK(sp == doctest::Approx(*lp).epsilon(1e-9));
    }
    Vector bad = g.nominal_costs();
    bad[0] = -1;
    CHECK_THROWS_AS(shortest_path(g, bad, 0, 11), InvalidArgument);
}

TEST_CASE("graph csv round trip and speed imputation") {
    std::istringstream in("src,dst,length_m,speed_kmh,category\n"
                          "a,b,100,30,primary\n"
                          "b,c,200,,primary\n"
                          "c,a,50,20,residential\n"
                          "a,c,70,50,primary\n");
    const Graph g = read_graph_csv(in);
    CHECK(g.num_nodes() == 3);
    CHECK(g.num_edges() == 4);
    CHECK(g.edges[1].speed_kmh == doctest::Approx(40.0)); // mean of 30 and 50
    std::ostringstream out;
    write_graph_csv(out, g);
    std::istringstream back(out.str());
    const Graph h = read_graph_csv(back);
    CHECK(h.num_edges() == 4);
    CHECK(h.nominal_costs() == g.nominal_costs());

    std::istringstream bad_header("from,to,len,speed,cat\n");
    CHECK_THROWS_AS(read_graph_csv(bad_header), InvalidArgument);
    std::istringstream bad_row("src,dst,length_m,speed_kmh,category\na,b,xx,30,r\n");
    try {
        read_graph_csv(bad_row);
        FAIL("expected a parse error");
    } catch (const InvalidArgument& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    std::istringstream no_speed("src,dst,length_m,speed_kmh,category\na,b,10,,alley\n");
    CHECK_THROWS_AS(read_graph_csv(no_speed), InvalidArgument);
}

TEST_CASE("pixel lookup clamps the far edge") {
    const BoundingBox box{0, 10, 0, 5};
    CHECK(pixel_lookup({0, 0}, box, 10, 5) == std::pair<Index, Index>{0, 0});
    CHECK(pixel_lookup({9.99, 4.99}, box, 10, 5) == std::pair<Index, Index>{9, 4});
    CHECK(pixel_lookup({10, 5}, box, 10, 5) == std::pair<Index, Index>{9, 4});
    CHECK(pixel_lookup({2.5, 1.2}, box, 10, 5) == std::pair<Index, Index>{2, 1});
}

TEST_CASE("edge weights from a precipitation grid") {
    const Graph g = grid_graph(1, 2); // nodes at (0,0) and (1,0)
    PrecipGrid grid{Matrix::Zero(2, 1), BoundingBox{-0.5, 1.5, -0.5, 0.5}};
    grid.values(0, 0) = 0.2;
    grid.values(1, 0) = 0.6;
    const Vector w = precip_to_edge_weights(grid, g);
    const Vector nominal = g.nominal_costs();
    for (Index e = 0; e < w.size(); ++e)
        CHECK(w[e] == doctest::Approx(nominal[e] * std::exp(0.4)));
}

TEST_CASE("precipitation grid files round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "cpo_test_precip";
    std::filesystem::create_directories(dir);
    PrecipGrid grid{Matrix(3, 2), BoundingBox{-1, 2, 0, 4}};
    grid.values << 0.1, 0.2, 0.3, 0.4, 1.0 / 3.0, 0.6;
    save_precip_grid(dir / "p.txt", grid);
    const PrecipGrid back = load_precip_grid(dir / "p.txt");
    CHECK(back.values == grid.values);
    CHECK(back.bbox.x_max == 2);
    CHECK(back.bbox.y_max == 4);
    std::filesystem::remove_all(dir);
}
