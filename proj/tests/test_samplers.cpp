#include "cpo/errors.hpp"
#include "cpo/samplers.hpp"

#include <doctest.h>

#include <numbers>

using namespace cpo;

namespace {

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2 * std::numbers::pi); }

// Simpson's rule for int_a^b f.
template <typename F>
double simpson(F f, double a, double b, int n = 20000) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i)
        s += f(a + i * h) * (i % 2 ? 4 : 2);
    return s * h / 3;
}

double truncated_mean(double mu, double sd, double lo, double hi) {
    const auto dens = [&](double t) { return normal_pdf((t - mu) / sd); };
    return simpson([&](double t) { return t * dens(t); }, lo, hi) / simpson(dens, lo, hi);
}

} // namespace

TEST_CASE("log normal cdf in the body and far tail") {
    for (double t : {-5.0, -1.0, 0.0, 2.0})
        CHECK(log_normal_cdf(t) == doctest::Approx(std::log(0.5 * std::erfc(-t / std::numbers::sqrt2))));
    // reference values from 30-digit arithmetic
    CHECK(log_normal_cdf(-8.0) == doctest::Approx(-35.0134371599145499).epsilon(1e-12));
    CHECK(log_normal_cdf(-35.0) == doctest::Approx(-616.975101261922513).epsilon(1e-12));
    CHECK(log_normal_cdf(-40.0) == doctest::Approx(-804.608442013753788).epsilon(1e-12));
}

TEST_CASE("truncated normal matches quadrature moments") {
    Rng rng(2);
    struct Case {
        double mu, sd, lo, hi;
    };
    for (const Case& c : {Case{0, 1, -1, 1}, Case{0, 1, 2, 3}, Case{0, 1, 5, 6}, Case{0, 1, 8, kInf},
                          Case{0.9, std::sqrt(0.1), -1, 1}, Case{-3, 1, -1, 1}, Case{0, 1, -0.01, 0.01}}) {
        const int n = 40000;
        double sum = 0, sum2 = 0;
        for (int i = 0; i < n; ++i) {
            const double v = sample_truncated_normal(c.mu, c.sd, c.lo, c.hi, rng);
            REQUIRE(v >= c.lo);
            REQUIRE(v <= c.hi);
            sum += v;
            sum2 += v * v;
        }
        const double hi = std::isfinite(c.hi) ? c.hi : c.lo + 12 * c.sd;
        const double mean = sum / n;
        const double sd = std::sqrt(sum2 / n - mean * mean);
        const double expect = truncated_mean(c.mu, c.sd, c.lo, hi);
        CHECK(std::abs(mean - expect) < 5 * sd / std::sqrt(double(n)) + 1e-12);
    }
    CHECK_THROWS_AS(sample_truncated_normal(0, 1, 1, -1, rng), InvalidArgument);
}

TEST_CASE("gaussian linear posterior moments") {
    const GaussianLinearSampler s(3);
    Vector x(3);
    x << 1.0, -0.4, 0.2;
    Rng rng(4);
    const Points d = s.sample(x, 20000, rng);
    const Vector mean = d.rowwise().mean();
    for (Index i = 0; i < 3; ++i) {
        CHECK(std::abs(mean[i] - x[i] / 2) < 0.01);
        const double var = (d.row(i).array() - mean[i]).square().mean();
        CHECK(var == doctest::Approx(0.05).epsilon(0.05));
    }
    CHECK_THROWS_AS(s.sample(Vector::Zero(2), 1, rng), InvalidArgument);
}

TEST_CASE("gaussian linear uniform posterior mean matches quadrature") {
    const GaussianLinearUniformSampler s(2);
    Vector x(2);
    x << 0.95, -1.3;
    Rng rng(5);
    const Points d = s.sample(x, 20000, rng);
    CHECK((d.array().abs() <= 1.0).all());
    for (Index i = 0; i < 2; ++i) {
        const double expect = truncated_mean(x[i], std::sqrt(0.1), -1, 1);
        CHECK(std::abs(d.row(i).mean() - expect) < 0.01);
    }
}

TEST_CASE("gaussian mixture responsibility matches quadrature of the box masses") {
    const GaussianMixtureSampler s;
    for (double x0 : {0.0, 9.5, 9.99, 10.4}) {
        Vector x(2);
        x << x0, -3.0;
        auto mass = [&](double sd) {
            double m = 1;
            for (Index i = 0; i < 2; ++i)
                m *= simpson([&](double t) { return normal_pdf((t - x[i]) / sd) / sd; }, -10, 10, 200000);
            return m;
        };
        const double broad = mass(1.0), narrow = mass(0.1);
        CHECK(s.broad_responsibility(x) == doctest::Approx(broad / (broad + narrow)).epsilon(1e-6));
    }
}

TEST_CASE("gaussian mixture draws stay in the prior box and mix both scales") {
    const GaussianMixtureSampler s;
    Vector x(2);
    x << 0.0, 0.0;
    Rng rng(6);
    const Points d = s.sample(x, 4000, rng);
    CHECK((d.array().abs() <= 10.0).all());
    Index near = 0;
    for (Index j = 0; j < d.cols(); ++j)
        near += d.col(j).norm() < 0.3 ? 1 : 0;
    // P(|c| < 0.3) = 0.5 (1 - e^{-4.5}) + 0.5 (1 - e^{-0.045})
    const double p = 0.5 * (1 - std::exp(-4.5)) + 0.5 * (1 - std::exp(-0.045));
    CHECK(std::abs(near / 4000.0 - p) < 4 * std::sqrt(p * (1 - p) / 4000));
}

TEST_CASE("two moons simulator by hand") {
    Vector w(2);
    w << 0.0, 0.0;
    const Vector x = two_moons_simulate(w, 0.0, 0.1);
    CHECK(x[0] == doctest::Approx(0.35));
    CHECK(x[1] == doctest::Approx(0.0));
    w << 1.0, 1.0;
    const Vector y = two_moons_simulate(w, std::numbers::pi / 2, 0.1);
    CHECK(y[0] == doctest::Approx(0.25 - 2 / std::numbers::sqrt2));
    CHECK(y[1] == doctest::Approx(0.1));
}

TEST_CASE("two moons abc honors its tolerance and budget") {
    AbcOptions opts;
    opts.tolerance = 0.05;
    const TwoMoonsAbcSampler s(opts);
    Vector x(2);
    x << 0.0, 0.1;
    Rng rng(8);
    const Points d = s.sample(x, 50, rng);
    CHECK((d.array().abs() <= 1.0).all());

    opts.budget = 10;
    opts.tolerance = 1e-9;
    const TwoMoonsAbcSampler tight(opts);
    try {
        tight.sample(x, 5, rng);
        FAIL("expected a numeric failure");
    } catch (const NumericFailure& e) {
        CHECK(std::string(e.what()).find("after 10 simulations") != std::string::npos);
    }

    AbcOptions pilot;
    pilot.pilot_size = 2000;
    const TwoMoonsAbcSampler auto_tol(pilot);
    const double tol = auto_tol.pilot_tolerance(x, rng);
    CHECK(tol > 0);
    CHECK(tol < 1);
}

TEST_CASE("bump fitting recovers rendered peaks") {
    PrecipModel m;
    m.width = 20;
    m.height = 12;
    const std::vector<Bump> truth{{4, 5, 1.0, 2.0}, {15, 7, 0.6, 2.0}};
    const Matrix field = render_bumps(truth, m);
    const auto fit = fit_bumps(field, m);
    REQUIRE(fit.size() == 2);
    CHECK(fit[0].px == 4);
    CHECK(fit[0].py == 5);
    CHECK(fit[1].px == 15);
    CHECK(fit[1].py == 7);
    CHECK(fit[0].amplitude == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("precipitation and edge-weight draws") {
    auto task = make_task("routing_grid", TaskOptions{.grid_rows = 4, .grid_cols = 5});
    REQUIRE(task.routing);
    const Graph& g = *task.routing->graph;
    CHECK(task.dim_c == g.num_edges());
    const Dataset d = draw_dataset(task, 3, 1);
    Rng rng(3);
    const Points w = task.sampler->sample(Vector(d.x.col(0)), 6, rng);
    CHECK(w.rows() == g.num_edges());
    // Precipitation is nonnegative, so weights never drop below nominal.
    const Vector nominal = g.nominal_costs();
    for (Index j = 0; j < w.cols(); ++j)
        CHECK(((w.col(j) - nominal).array() >= -1e-9).all());
}

TEST_CASE("task registry") {
    for (const auto& name : task_names()) {
        const Task t = make_task(name, TaskOptions{.grid_rows = 3, .grid_cols = 3});
        CHECK(t.name == name);
        CHECK(t.sampler->dim_x() == t.dim_x);
        CHECK(t.sampler->dim_c() == t.dim_c);
    }
    try {
        make_task("nope");
        FAIL("expected an error");
    } catch (const InvalidArgument& e) {
        CHECK(std::string(e.what()).find("gaussian_linear") != std::string::npos);
    }
    auto t = make_task("gaussian_linear", TaskOptions{.dim = 4});
    CHECK(t.dim_c == 4);
    const Dataset a = draw_dataset(t, 10, 77), b = draw_dataset(t, 10, 77);
    CHECK(a.x == b.x);
    CHECK(a.c == b.c);
}
